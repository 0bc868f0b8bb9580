#pragma once

// Stage functions shared by the command-line tool and the experiment runner.
// Every stage boundary is a JSON Lines file; the record types below are the
// in-memory form of one line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sensorpen/ecg_pipeline.hpp"
#include "sensorpen/llm_backend.hpp"
#include "sensorpen/prompt.hpp"
#include "sensorpen/qrs.hpp"
#include "sensorpen/response_parser.hpp"
#include "sensorpen/sensor_model.hpp"

namespace sensorpen::experiment {

inline constexpr const char* kDefaultModel = "gpt-4";

// "<record>@<start>/<window_s>s"
std::string query_id(const ecg::EcgQuery& q);

struct PromptRecord {
  std::string instance_id;
  std::string scheme;  // "task/variant"
  std::string text;
  std::vector<prompt::Attachment> attachments;
  std::string fingerprint;
};

nlohmann::json to_json(const PromptRecord& p);
PromptRecord prompt_from_json(const nlohmann::json& j);

struct ResponseRecord {
  std::string instance_id;
  std::string request_fingerprint;
  std::optional<std::string> text;
  std::optional<llm::Usage> usage;
  std::optional<ErrorCode> error;
  std::string error_message;
  int attempts = 0;
};

nlohmann::json to_json(const ResponseRecord& r);
ResponseRecord response_from_json(const nlohmann::json& j);

// {instance_id, fields}
nlohmann::json textualize_row(const sensor::SensorSnapshot& s);

PromptRecord make_prompt(const prompt::PromptTemplate& tmpl, const std::string& instance_id,
                         const prompt::FieldMap& fields);
PromptRecord make_prompt(const prompt::PromptTemplate& tmpl, const ecg::EcgQuery& query);

struct RunOptions {
  std::string model_id = kDefaultModel;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  int parallelism = 4;
  llm::RetryPolicy retry;
  llm::Sleeper sleep = llm::real_sleep;
};

llm::ChatRequest to_request(const PromptRecord& p, const RunOptions& options);
std::vector<ResponseRecord> run_prompts(llm::Backend& backend, const std::vector<PromptRecord>& prompts,
                                        const RunOptions& options);

// Parsed-results rows. Responses that carry a backend error become
// {instance_id, backend_error} rows so evaluation can exclude them.
std::vector<nlohmann::json> parse_responses(prompt::Task task, const std::vector<ResponseRecord>& responses);

struct EvalReport {
  std::string task;
  std::string scheme;  // scheme key, or detector name for baselines
  std::optional<double> window_s;
  std::optional<double> fs;
  std::size_t n_instances = 0;
  std::optional<double> failure_rate;
  std::optional<double> accuracy_motion;
  std::optional<double> accuracy_environment;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> chrf;
  std::optional<double> bertscore;  // external scores only
  std::optional<double> mae_bpm;
  std::optional<double> hallucination_rate;
  std::vector<std::string> excluded;  // backend errors or missing parses
  nlohmann::json rows = nlohmann::json::array();
};

nlohmann::json to_json(const EvalReport& report);
// Pretty-printed, trailing newline.
std::string dump_report(const EvalReport& report);

struct ActivityEvalInputs {
  std::vector<nlohmann::json> parsed;
  std::vector<sensor::SensorSnapshot> snapshots;
  // {instance_id, claim_correct, claimed?}; location P/R is computed only
  // when present.
  std::optional<std::vector<nlohmann::json>> judgements;
  // {instance_id, score}
  std::optional<std::vector<nlohmann::json>> bertscores;
  std::string scheme;
};

EvalReport evaluate_activity(const ActivityEvalInputs& in);
EvalReport evaluate_ecg(const std::vector<nlohmann::json>& parsed, const std::vector<ecg::EcgQuery>& queries,
                        const std::string& scheme);

// Detector over every window; rows carry per-window counts and HR error.
EvalReport evaluate_baseline(qrs::DetectorKind detector, const std::vector<ecg::EcgQuery>& windows);

struct RecordSet {
  std::filesystem::path data_dir;
  std::vector<std::string> records;
  std::string channel{wfdb::kDefaultChannel};
};

std::vector<wfdb::EcgRecord> load_records(const RecordSet& set);

// Windows at `fs` (the source rate, or 72 Hz after decimation).
std::vector<ecg::EcgQuery> make_windows(const std::vector<wfdb::EcgRecord>& records, double fs,
                                        const ecg::ExtractOptions& options);

struct BackendConfig {
  std::string kind = "replay";  // replay | record | live | none
  std::string store;
  std::string api_base;
  std::string model = kDefaultModel;
};

BackendConfig backend_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::unique_ptr<llm::Backend> make_backend(const BackendConfig& config);

struct ExperimentResult {
  std::vector<EvalReport> reports;
  std::vector<nlohmann::json> failures;  // {unit, instance_id?, error, message}
};

// Config: {task, scheme | schemes, backend:{kind, store?, api_base?, model?},
// dataset:{snapshots?, judgements?, queries?, data_dir?, records?, channel?,
// mode?, count?}, windows:[s], detectors?, fs?, parallelism, seed,
// output_dir?}. Relative paths resolve against base_dir. When `backend` is
// non-null it replaces the configured one. One report per (scheme, window),
// or per (detector, window) for task "baseline". A failing unit is recorded
// in the failure manifest and the remaining units still run.
ExperimentResult run_experiment(const nlohmann::json& config, const std::filesystem::path& base_dir,
                                llm::Backend* backend = nullptr, const llm::Sleeper& sleep = llm::real_sleep);

}  // namespace sensorpen::experiment
