#include "sensorpen/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sensorpen/digest.hpp"
#include "sensorpen/embedded_prompts.hpp"
#include "sensorpen/error.hpp"

namespace sensorpen::prompt {
namespace {

constexpr std::string_view kHeaderPrefix = "%% ";

bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of the placeholder name starting after a '$' at `pos`, or 0.
std::size_t placeholder_at(std::string_view body, std::size_t pos) {
  std::size_t end = pos + 1;
  while (end < body.size() && is_name_char(body[end])) ++end;
  if (end == pos + 1 || end >= body.size() || body[end] != '$') return 0;
  return end - pos - 1;
}

}  // namespace

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::Activity: return "activity";
    case Task::Ecg: return "ecg";
    case Task::EcgVision: return "ecg_vision";
  }
  return "unknown";
}

std::optional<Task> task_from_string(std::string_view s) noexcept {
  if (s == "activity") return Task::Activity;
  if (s == "ecg") return Task::Ecg;
  if (s == "ecg_vision") return Task::EcgVision;
  return std::nullopt;
}

std::string PromptScheme::key() const { return std::string(to_string(task)) + "/" + variant; }

const std::vector<PromptScheme>& all_schemes() {
  static const std::vector<PromptScheme> schemes = {
      {Task::Activity, "plain"},         {Task::Activity, "expert"},
      {Task::Activity, "expert_example"}, {Task::Ecg, "description"},
      {Task::Ecg, "procedure"},          {Task::Ecg, "procedure_1ex"},
      {Task::Ecg, "procedure_2ex"},      {Task::Ecg, "one_shot"},
      {Task::EcgVision, "description"},  {Task::EcgVision, "procedure_example"},
  };
  return schemes;
}

PromptScheme make_scheme(Task task, std::string_view variant) {
  for (const auto& s : all_schemes()) {
    if (s.task == task && s.variant == variant) return s;
  }
  throw Error(ErrorCode::UnknownScheme,
              "no scheme '" + std::string(variant) + "' for task " + std::string(to_string(task)));
}

PromptScheme make_scheme(std::string_view task, std::string_view variant) {
  const auto t = task_from_string(task);
  if (!t) throw Error(ErrorCode::UnknownScheme, "unknown task '" + std::string(task) + "'");
  return make_scheme(*t, variant);
}

std::set<std::string> find_placeholders(std::string_view body) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '$') continue;
    if (const auto len = placeholder_at(body, i)) {
      out.emplace(body.substr(i + 1, len));
      i += len + 1;
    }
  }
  return out;
}

PromptTemplate parse_template(const PromptScheme& scheme, std::string_view contents) {
  PromptTemplate t;
  t.scheme = scheme;
  std::size_t pos = 0;
  while (contents.substr(pos).starts_with(kHeaderPrefix)) {
    const auto nl = contents.find('\n', pos);
    const auto end = nl == std::string_view::npos ? contents.size() : nl;
    t.header.emplace_back(contents.substr(pos + kHeaderPrefix.size(), end - pos - kHeaderPrefix.size()));
    pos = nl == std::string_view::npos ? contents.size() : nl + 1;
  }
  t.body = std::string(contents.substr(pos));
  t.required_placeholders = find_placeholders(t.body);
  return t;
}

PromptTemplate builtin_template(const PromptScheme& scheme) {
  make_scheme(scheme.task, scheme.variant);  // validates
  const auto key = scheme.key();
  for (const auto& p : detail::embedded_prompts()) {
    if (p.key == key) return parse_template(scheme, p.contents);
  }
  throw Error(ErrorCode::UnknownScheme, "no built-in template for " + key);
}

PromptTemplate load_template(const PromptScheme& scheme, const std::string& prompts_dir) {
  make_scheme(scheme.task, scheme.variant);
  const std::string path = prompts_dir + "/" + scheme.key() + ".txt";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_template(scheme, ss.str());
}

std::string prompt_fingerprint(std::string_view text, const std::vector<Attachment>& attachments) {
  std::string material = "text:" + sha256_hex(text);
  for (const auto& a : attachments) material += "\nattachment:" + sha256_hex(a);
  return sha256_hex(material);
}

RenderedPrompt render(const PromptTemplate& tmpl, const FieldMap& fields, std::vector<Attachment> attachments) {
  for (const auto& name : tmpl.required_placeholders) {
    if (!fields.contains(name)) throw Error(ErrorCode::MissingPlaceholder, name);
  }
  for (const auto& [name, value] : fields) {
    if (!tmpl.required_placeholders.contains(name)) throw Error(ErrorCode::ExtraField, name);
  }
  const std::string_view body = tmpl.body;
  std::string text;
  text.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '$') {
      if (const auto len = placeholder_at(body, i)) {
        text += fields.at(std::string(body.substr(i + 1, len)));
        i += len + 1;
        continue;
      }
    }
    text += body[i];
  }
  RenderedPrompt out;
  out.fingerprint = prompt_fingerprint(text, attachments);
  out.text = std::move(text);
  out.scheme = tmpl.scheme;
  out.attachments = std::move(attachments);
  return out;
}

std::vector<int> reasoning_example_values() {
  const auto tmpl = builtin_template(make_scheme(Task::Ecg, "procedure_1ex"));
  constexpr std::string_view kMarker = "ECG data: [";
  const auto start = tmpl.body.find(kMarker);
  const auto end = tmpl.body.find(']', start);
  if (start == std::string::npos || end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "reasoning example not found in template");
  }
  std::vector<int> values;
  std::istringstream in(tmpl.body.substr(start + kMarker.size(), end - start - kMarker.size()));
  std::string tok;
  while (std::getline(in, tok, ',')) values.push_back(std::stoi(tok));
  return values;
}

RenderedPrompt render_ecg(const PromptTemplate& tmpl, const ecg::EcgQuery& query) {
  if (tmpl.scheme.task == Task::EcgVision) {
    std::vector<Attachment> figures;
    ecg::EcgQuery example;
    example.values = reasoning_example_values();
    figures.push_back(ecg::render_figure(example));
    figures.push_back(ecg::render_figure(query));
    return render(tmpl, {}, std::move(figures));
  }
  if (tmpl.scheme.task != Task::Ecg) {
    throw Error(ErrorCode::UnknownScheme, tmpl.scheme.key() + " is not an ECG scheme");
  }
  if (query.values.empty()) throw Error(ErrorCode::EmptyQuery, "query has no values");
  return render(tmpl, {{"DATA", ecg::format_values(query.values)}});
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t numbers = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++numbers;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i + 1 < text.size() && text[i] == '.' && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
        ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      }
    } else {
      ++i;
    }
  }
  return (text.size() + 3) / 4 + 3 * numbers;
}

}  // namespace sensorpen::prompt
