#pragma once

// Prompt templates, placeholder rendering and the scheme matrix.
//
// Template files live under prompts/<task>/<variant>.txt. Leading lines that
// start with "%% " form a header (used to label reconstructed templates) and
// are not part of the body. Placeholders are written $NAME$.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sensorpen/ecg_pipeline.hpp"

namespace sensorpen::prompt {

enum class Task { Activity, Ecg, EcgVision };

std::string_view to_string(Task task) noexcept;
std::optional<Task> task_from_string(std::string_view s) noexcept;

struct PromptScheme {
  Task task = Task::Activity;
  std::string variant;

  // "<task>/<variant>", also the fixture path stem.
  std::string key() const;
  friend bool operator==(const PromptScheme&, const PromptScheme&) = default;
};

// Throws UnknownScheme for pairs outside the closed matrix.
PromptScheme make_scheme(Task task, std::string_view variant);
PromptScheme make_scheme(std::string_view task, std::string_view variant);
const std::vector<PromptScheme>& all_schemes();

struct PromptTemplate {
  PromptScheme scheme;
  std::string body;
  std::set<std::string> required_placeholders;
  std::vector<std::string> header;  // "%% " lines, prefix stripped
};

using FieldMap = std::map<std::string, std::string>;

// Splits header from body and collects placeholders.
PromptTemplate parse_template(const PromptScheme& scheme, std::string_view file_contents);

PromptTemplate builtin_template(const PromptScheme& scheme);

// Reads <prompts_dir>/<task>/<variant>.txt.
PromptTemplate load_template(const PromptScheme& scheme, const std::string& prompts_dir);

// Names between '$' delimiters made of [A-Z0-9_].
std::set<std::string> find_placeholders(std::string_view body);

using Attachment = std::vector<std::uint8_t>;

struct RenderedPrompt {
  std::string text;
  PromptScheme scheme;
  std::vector<Attachment> attachments;
  std::string fingerprint;  // SHA-256 over text and attachment digests
};

// Single-pass literal substitution. Throws MissingPlaceholder or ExtraField.
RenderedPrompt render(const PromptTemplate& tmpl, const FieldMap& fields,
                      std::vector<Attachment> attachments = {});

std::string prompt_fingerprint(std::string_view text, const std::vector<Attachment>& attachments);

// ECG schemes fill $DATA$ with the query values. Vision schemes attach the
// reasoning-example figure first and the query figure second.
RenderedPrompt render_ecg(const PromptTemplate& tmpl, const ecg::EcgQuery& query);

// Values of the published reasoning example (the first "ECG data:" list of
// the ecg/procedure_1ex template).
std::vector<int> reasoning_example_values();

// Rough token count: ceil(len / 4) + 3 per numeric literal. An estimate only.
std::size_t estimate_tokens(std::string_view text);

}  // namespace sensorpen::prompt
