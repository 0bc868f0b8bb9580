#include "sensorpen/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sensorpen/digest.hpp"
#include "sensorpen/error.hpp"
#include "sensorpen/jsonl.hpp"
#include "sensorpen/metrics.hpp"
#include "sensorpen/wfdb.hpp"

namespace sensorpen::experiment {
namespace {

using nlohmann::json;

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::InvalidArgument, std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

std::map<std::string, json> index_rows(const std::vector<json>& rows, const char* what) {
  std::map<std::string, json> out;
  for (const auto& r : rows) {
    auto id = require_string(r, "instance_id");
    if (!out.emplace(id, r).second) throw Error(ErrorCode::InvalidArgument, std::string("duplicate ") + what + " " + id);
  }
  return out;
}

std::optional<double> all_same(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  for (double x : v) {
    if (x != v.front()) return std::nullopt;
  }
  return v.front();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string query_id(const ecg::EcgQuery& q) {
  return q.record + "@" + std::to_string(q.start) + "/" + sensor::format_decimal(q.window_s) + "s";
}

json to_json(const PromptRecord& p) {
  json atts = json::array();
  for (const auto& a : p.attachments) atts.push_back(base64_encode(a));
  return json{{"instance_id", p.instance_id}, {"scheme", p.scheme},           {"text", p.text},
              {"attachments", atts},         {"fingerprint", p.fingerprint}};
}

PromptRecord prompt_from_json(const json& j) {
  PromptRecord p;
  p.instance_id = require_string(j, "instance_id");
  p.scheme = require_string(j, "scheme");
  p.text = require_string(j, "text");
  if (j.contains("attachments")) {
    for (const auto& a : j["attachments"]) p.attachments.push_back(base64_decode(a.get<std::string>()));
  }
  p.fingerprint = prompt::prompt_fingerprint(p.text, p.attachments);
  return p;
}

json to_json(const ResponseRecord& r) {
  json j{{"instance_id", r.instance_id}, {"fingerprint", r.request_fingerprint}, {"attempts", r.attempts}};
  if (r.text) j["text"] = *r.text;
  if (r.usage) j["usage"] = {{"prompt_tokens", r.usage->prompt_tokens}, {"completion_tokens", r.usage->completion_tokens}};
  if (r.error) {
    j["error"] = to_string(*r.error);
    j["message"] = r.error_message;
  }
  return j;
}

ResponseRecord response_from_json(const json& j) {
  ResponseRecord r;
  r.instance_id = require_string(j, "instance_id");
  r.request_fingerprint = j.value("fingerprint", "");
  r.attempts = j.value("attempts", 0);
  if (j.contains("text") && j["text"].is_string()) r.text = j["text"].get<std::string>();
  if (j.contains("usage") && j["usage"].is_object()) {
    r.usage = llm::Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
  }
  if (j.contains("error")) {
    r.error = error_code_from_string(j["error"].get<std::string>()).value_or(ErrorCode::BackendFailure);
    r.error_message = j.value("message", "");
  }
  if (!r.text && !r.error) throw Error(ErrorCode::InvalidArgument, "response " + r.instance_id + " has neither text nor error");
  return r;
}

json textualize_row(const sensor::SensorSnapshot& s) {
  return json{{"instance_id", s.id}, {"fields", sensor::textualize(s)}};
}

PromptRecord make_prompt(const prompt::PromptTemplate& tmpl, const std::string& instance_id,
                         const prompt::FieldMap& fields) {
  auto r = prompt::render(tmpl, fields);
  return PromptRecord{instance_id, tmpl.scheme.key(), std::move(r.text), std::move(r.attachments),
                      std::move(r.fingerprint)};
}

PromptRecord make_prompt(const prompt::PromptTemplate& tmpl, const ecg::EcgQuery& query) {
  auto r = prompt::render_ecg(tmpl, query);
  return PromptRecord{query_id(query), tmpl.scheme.key(), std::move(r.text), std::move(r.attachments),
                      std::move(r.fingerprint)};
}

llm::ChatRequest to_request(const PromptRecord& p, const RunOptions& options) {
  auto req = llm::make_prompt_request(options.model_id, p.text, p.attachments);
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  return req;
}

std::vector<ResponseRecord> run_prompts(llm::Backend& backend, const std::vector<PromptRecord>& prompts,
                                        const RunOptions& options) {
  std::vector<llm::ChatRequest> requests;
  requests.reserve(prompts.size());
  for (const auto& p : prompts) requests.push_back(to_request(p, options));
  const auto results = llm::run_batch(backend, requests, options.parallelism, options.retry, options.sleep);
  std::vector<ResponseRecord> out;
  out.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    ResponseRecord r;
    r.instance_id = prompts[i].instance_id;
    r.request_fingerprint = llm::fingerprint(requests[i]);
    r.attempts = results[i].attempts;
    if (results[i].response) {
      r.text = results[i].response->text;
      r.usage = results[i].response->usage;
    } else {
      r.error = results[i].error;
      r.error_message = results[i].error_message;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<json> parse_responses(prompt::Task task, const std::vector<ResponseRecord>& responses) {
  std::vector<json> rows;
  rows.reserve(responses.size());
  for (const auto& r : responses) {
    if (!r.text) {
      rows.push_back(json{{"instance_id", r.instance_id},
                          {"backend_error", std::string(to_string(r.error.value_or(ErrorCode::BackendFailure)))}});
    } else if (task == prompt::Task::Activity) {
      rows.push_back(parse::activity_to_json(r.instance_id, parse::parse_activity(*r.text)));
    } else {
      rows.push_back(parse::rpeaks_to_json(r.instance_id, parse::parse_rpeaks(*r.text)));
    }
  }
  return rows;
}

json to_json(const EvalReport& report) {
  json j{{"task", report.task},         {"scheme", report.scheme},     {"n_instances", report.n_instances},
         {"excluded", report.excluded}, {"rows", report.rows},         {"bertscore", nullptr}};
  put(j, "window_s", report.window_s);
  put(j, "fs", report.fs);
  put(j, "failure_rate", report.failure_rate);
  if (report.accuracy_motion || report.accuracy_environment) {
    json acc = json::object();
    put(acc, "motion", report.accuracy_motion);
    put(acc, "environment", report.accuracy_environment);
    j["accuracy"] = acc;
  }
  put(j, "precision", report.precision);
  put(j, "recall", report.recall);
  put(j, "chrf", report.chrf);
  if (report.bertscore) j["bertscore"] = *report.bertscore;
  put(j, "mae_bpm", report.mae_bpm);
  put(j, "hallucination_rate", report.hallucination_rate);
  return j;
}

std::string dump_report(const EvalReport& report) { return to_json(report).dump(2) + "\n"; }

EvalReport evaluate_activity(const ActivityEvalInputs& in) {
  const auto parsed = index_rows(in.parsed, "parsed row");
  std::map<std::string, const sensor::SensorSnapshot*> snaps;
  for (const auto& s : in.snapshots) {
    if (!snaps.emplace(s.id, &s).second) throw Error(ErrorCode::InvalidArgument, "duplicate snapshot " + s.id);
  }
  std::map<std::string, json> judgements;
  if (in.judgements) judgements = index_rows(*in.judgements, "judgement");
  std::map<std::string, double> bert;
  if (in.bertscores) {
    for (const auto& [id, row] : index_rows(*in.bertscores, "score")) bert[id] = row.at("score").get<double>();
  }

  EvalReport report;
  report.task = "activity";
  report.scheme = in.scheme;
  std::vector<parse::ActivityParse> parses;
  std::vector<sensor::GroundTruth> truths;
  std::vector<metrics::LocationJudgement> locs;
  std::vector<std::pair<std::string, std::string>> chrf_pairs;
  std::vector<double> bert_scores;
  std::vector<double> windows;

  // std::map iteration keeps the aggregation order independent of input order.
  for (const auto& [id, snap] : snaps) {
    const auto it = parsed.find(id);
    if (it == parsed.end() || it->second.contains("backend_error")) {
      report.excluded.push_back(id);
      continue;
    }
    const auto p = parse::activity_from_json(it->second);
    const auto& truth = snap->labels;
    parses.push_back(p);
    truths.push_back(truth);
    windows.push_back(snap->window_s);

    json row = parse::activity_to_json(id, p);
    row["motion_truth"] = sensor::to_string(truth.motion);
    row["environment_truth"] = sensor::to_string(truth.environment);
    row["motion_correct"] = !p.failed && p.motion == truth.motion;
    row["environment_correct"] = !p.failed && p.environment == truth.environment;

    const auto claim = parse::extract_location(p.summary);
    if (claim) row["location_claim"] = *claim;
    if (truth.location_text) {
      const std::string hyp = p.summary.value_or("");
      row["chrf"] = metrics::chrf(hyp, *truth.location_text);
      chrf_pairs.emplace_back(hyp, *truth.location_text);
    }
    if (in.judgements) {
      metrics::LocationJudgement lj;
      lj.informative = truth.ssid_informative.value_or(false);
      const auto jt = judgements.find(id);
      lj.claimed = jt != judgements.end() && jt->second.contains("claimed") ? jt->second["claimed"].get<bool>()
                                                                            : claim.has_value();
      if (lj.claimed) {
        if (jt == judgements.end() || !jt->second.contains("claim_correct")) {
          throw Error(ErrorCode::InvalidArgument, "location claim of " + id + " has no judgement");
        }
        lj.correct = jt->second["claim_correct"].get<bool>();
      }
      row["claimed"] = lj.claimed;
      row["claim_correct"] = lj.correct;
      row["ssid_informative"] = lj.informative;
      locs.push_back(lj);
    }
    if (const auto bt = bert.find(id); bt != bert.end()) {
      row["bertscore"] = bt->second;
      bert_scores.push_back(bt->second);
    }
    report.rows.push_back(std::move(row));
  }

  report.n_instances = parses.size();
  report.window_s = all_same(windows);
  report.failure_rate = metrics::failure_rate(parses);
  report.accuracy_motion = metrics::accuracy(parses, truths, metrics::Subtask::Motion);
  report.accuracy_environment = metrics::accuracy(parses, truths, metrics::Subtask::Environment);
  if (!chrf_pairs.empty()) report.chrf = metrics::corpus_chrf(chrf_pairs);
  if (in.judgements) {
    const auto pr = metrics::location_pr(locs);
    report.precision = pr.precision;
    report.recall = pr.recall;
  }
  if (!bert_scores.empty()) {
    double sum = 0.0;
    for (double s : bert_scores) sum += s;
    report.bertscore = sum / static_cast<double>(bert_scores.size());
  }
  return report;
}

EvalReport evaluate_ecg(const std::vector<json>& parsed_rows, const std::vector<ecg::EcgQuery>& queries,
                        const std::string& scheme) {
  const auto parsed = index_rows(parsed_rows, "parsed row");
  std::map<std::string, const ecg::EcgQuery*> by_id;
  for (const auto& q : queries) {
    if (!by_id.emplace(query_id(q), &q).second) throw Error(ErrorCode::InvalidArgument, "duplicate query " + query_id(q));
  }

  EvalReport report;
  report.task = "ecg";
  report.scheme = scheme;
  std::vector<parse::RPeakParse> parses;
  std::vector<std::optional<double>> detected;
  std::vector<double> truth, windows, rates;
  for (const auto& [id, q] : by_id) {
    const auto it = parsed.find(id);
    if (it == parsed.end() || it->second.contains("backend_error")) {
      report.excluded.push_back(id);
      continue;
    }
    const auto p = parse::rpeaks_from_json(it->second);
    json row{{"instance_id", id},
             {"truth_peaks", q->truth_peak_count},
             {"truth_hr", q->truth_hr_bpm},
             {"hallucinated", p.hallucinated},
             {"n_peaks", p.peaks.size()}};
    std::optional<double> hr;
    if (!p.hallucinated) {
      hr = ecg::heart_rate(static_cast<int>(p.peaks.size()), q->window_s);
      row["detected_hr"] = *hr;
      row["abs_error"] = std::abs(*hr - q->truth_hr_bpm);
    }
    parses.push_back(p);
    detected.push_back(hr);
    truth.push_back(q->truth_hr_bpm);
    windows.push_back(q->window_s);
    rates.push_back(q->fs);
    report.rows.push_back(std::move(row));
  }
  report.n_instances = parses.size();
  report.window_s = all_same(windows);
  report.fs = all_same(rates);
  report.hallucination_rate = metrics::hallucination_rate(parses);
  try {
    report.mae_bpm = metrics::mae_bpm(detected, truth);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllHallucinated) throw;
  }
  return report;
}

EvalReport evaluate_baseline(qrs::DetectorKind detector, const std::vector<ecg::EcgQuery>& windows) {
  EvalReport report;
  report.task = "baseline";
  report.scheme = std::string(qrs::to_string(detector));
  std::vector<ecg::EcgQuery> sorted = windows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.record, a.start, a.window_s) < std::tie(b.record, b.start, b.window_s);
  });
  std::vector<double> detected, truth, sizes, rates;
  for (const auto& q : sorted) {
    const auto result = qrs::detect(detector, std::span<const int>(q.values), q.fs);
    const int n = static_cast<int>(result.peak_indices.size());
    const double hr = ecg::heart_rate(n, q.window_s);
    report.rows.push_back(json{{"instance_id", query_id(q)},
                               {"truth_peaks", q.truth_peak_count},
                               {"detected_peaks", n},
                               {"truth_hr", q.truth_hr_bpm},
                               {"detected_hr", hr},
                               {"abs_error", std::abs(hr - q.truth_hr_bpm)}});
    detected.push_back(hr);
    truth.push_back(q.truth_hr_bpm);
    sizes.push_back(q.window_s);
    rates.push_back(q.fs);
  }
  if (sorted.empty()) throw Error(ErrorCode::EmptyEval, "no windows to evaluate");
  report.n_instances = sorted.size();
  report.window_s = all_same(sizes);
  report.fs = all_same(rates);
  report.mae_bpm = metrics::mae_bpm(detected, truth);
  return report;
}

std::vector<wfdb::EcgRecord> load_records(const RecordSet& set) {
  if (set.records.empty()) throw Error(ErrorCode::InvalidArgument, "no records given");
  std::vector<wfdb::EcgRecord> out;
  out.reserve(set.records.size());
  for (const auto& name : set.records) out.push_back(wfdb::read_record(set.data_dir.string(), name, set.channel));
  return out;
}

std::vector<ecg::EcgQuery> make_windows(const std::vector<wfdb::EcgRecord>& records, double fs,
                                        const ecg::ExtractOptions& options) {
  std::vector<ecg::EcgQuery> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto opts = options;
    opts.seed = options.seed + i;
    const auto w = records[i].sample_rate == fs ? ecg::extract_windows(records[i], opts)
                                                : ecg::extract_windows(ecg::downsample(records[i], fs), opts);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

BackendConfig backend_from_json(const json& j, const std::filesystem::path& base_dir) {
  BackendConfig c;
  c.kind = j.value("kind", "replay");
  if (j.contains("store")) c.store = resolve(base_dir, j["store"].get<std::string>()).string();
  c.api_base = j.value("api_base", "");
  c.model = j.value("model", std::string(kDefaultModel));
  if (c.kind == "replay" && !c.api_base.empty()) {
    throw Error(ErrorCode::InvalidArgument, "replay backend does not take an api_base");
  }
  if ((c.kind == "replay" || c.kind == "record") && c.store.empty()) {
    throw Error(ErrorCode::InvalidArgument, c.kind + " backend needs a store path");
  }
  if (c.kind != "replay" && c.kind != "record" && c.kind != "live" && c.kind != "none") {
    throw Error(ErrorCode::InvalidArgument, "unknown backend kind " + c.kind);
  }
  return c;
}

std::unique_ptr<llm::Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "none") return nullptr;
  if (config.kind == "replay") {
    return std::make_unique<llm::ReplayBackend>(std::make_shared<const llm::ReplayStore>(config.store));
  }
  auto live = std::make_unique<llm::LiveBackend>(llm::live_config_from_env(config.api_base));
  if (config.kind == "live") return live;
  return std::make_unique<llm::RecordingBackend>(std::move(live), std::make_shared<llm::ReplayStore>(config.store));
}

namespace {

struct Unit {
  std::string name;  // used for the manifest and the output sub-directory
  std::optional<double> window_s;
};

std::string slug(std::string s) {
  for (auto& c : s) {
    if (c == '/' || c == '@' || c == ' ') c = '_';
  }
  return s;
}

std::vector<double> config_windows(const json& config) {
  std::vector<double> w = config.value("windows", std::vector<double>{5.0});
  if (w.empty()) throw Error(ErrorCode::InvalidArgument, "windows must not be empty");
  return w;
}

std::vector<std::string> config_schemes(const json& config) {
  if (config.contains("schemes")) return config["schemes"].get<std::vector<std::string>>();
  if (config.contains("scheme")) return {config["scheme"].get<std::string>()};
  throw Error(ErrorCode::InvalidArgument, "config names no scheme");
}

ecg::ExtractOptions extract_options(const json& dataset, const json& config, double window_s) {
  ecg::ExtractOptions o;
  o.window_s = window_s;
  const auto mode = dataset.value("mode", "sequential");
  if (mode == "random") {
    o.mode = ecg::ExtractMode::Random;
  } else if (mode != "sequential") {
    throw Error(ErrorCode::InvalidArgument, "unknown extraction mode " + mode);
  }
  o.seed = config.value("seed", std::uint64_t{0});
  if (dataset.contains("count")) o.count = dataset["count"].get<std::size_t>();
  return o;
}

RecordSet record_set(const json& dataset, const std::filesystem::path& base_dir) {
  RecordSet rs;
  rs.data_dir = resolve(base_dir, require_string(dataset, "data_dir"));
  rs.records = dataset.at("records").get<std::vector<std::string>>();
  rs.channel = dataset.value("channel", std::string(wfdb::kDefaultChannel));
  return rs;
}

void persist(const std::optional<std::filesystem::path>& out_dir, const std::string& unit, const char* file,
             const std::string& text) {
  if (out_dir) jsonl::write_text((*out_dir / slug(unit) / file).string(), text);
}

}  // namespace

ExperimentResult run_experiment(const json& config, const std::filesystem::path& base_dir, llm::Backend* backend,
                                const llm::Sleeper& sleep) {
  ExperimentResult result;
  const auto task_name = require_string(config, "task");
  const json dataset = config.value("dataset", json::object());
  std::optional<std::filesystem::path> out_dir;
  if (config.contains("output_dir")) out_dir = resolve(base_dir, config["output_dir"].get<std::string>());

  auto record_failure = [&](const std::string& unit, const Error& e) {
    result.failures.push_back(json{{"unit", unit}, {"error", to_string(e.code())}, {"message", e.what()}});
  };

  if (task_name == "baseline") {
    std::vector<qrs::DetectorKind> detectors(qrs::kAllDetectors.begin(), qrs::kAllDetectors.end());
    if (config.contains("detectors")) {
      detectors.clear();
      for (const auto& name : config["detectors"]) {
        const auto d = qrs::detector_from_string(name.get<std::string>());
        if (!d) throw Error(ErrorCode::InvalidArgument, "unknown detector " + name.get<std::string>());
        detectors.push_back(*d);
      }
    }
    const auto records = load_records(record_set(dataset, base_dir));
    const double fs = config.value("fs", records.front().sample_rate);
    for (double w : config_windows(config)) {
      std::vector<ecg::EcgQuery> windows;
      try {
        windows = make_windows(records, fs, extract_options(dataset, config, w));
      } catch (const Error& e) {
        record_failure("baseline@" + sensor::format_decimal(w) + "s", e);
        continue;
      }
      for (auto d : detectors) {
        const std::string unit = std::string(qrs::to_string(d)) + "@" + sensor::format_decimal(w) + "s";
        try {
          auto report = evaluate_baseline(d, windows);
          persist(out_dir, unit, "report.json", dump_report(report));
          result.reports.push_back(std::move(report));
        } catch (const Error& e) {
          record_failure(unit, e);
        }
      }
    }
  } else {
    const auto task = prompt::task_from_string(task_name);
    if (!task) throw Error(ErrorCode::InvalidArgument, "unknown task " + task_name);

    std::unique_ptr<llm::Backend> owned;
    if (!backend) {
      const auto bc = backend_from_json(config.value("backend", json::object()), base_dir);
      if (bc.kind == "none") throw Error(ErrorCode::InvalidArgument, "task " + task_name + " needs a backend");
      owned = make_backend(bc);
      backend = owned.get();
    }
    RunOptions run;
    run.model_id = config.value("backend", json::object()).value("model", std::string(kDefaultModel));
    run.parallelism = config.value("parallelism", 4);
    run.sleep = sleep;
    std::optional<std::string> prompts_dir;
    if (config.contains("prompts_dir")) prompts_dir = resolve(base_dir, config["prompts_dir"].get<std::string>()).string();

    std::vector<sensor::SensorSnapshot> snapshots;
    std::optional<std::vector<json>> judgements;
    std::vector<ecg::EcgQuery> all_queries;
    std::vector<wfdb::EcgRecord> records;
    if (*task == prompt::Task::Activity) {
      snapshots = sensor::read_snapshots(resolve(base_dir, require_string(dataset, "snapshots")).string());
      if (dataset.contains("judgements")) {
        judgements = jsonl::read(resolve(base_dir, dataset["judgements"].get<std::string>()).string());
      }
    } else if (dataset.contains("queries")) {
      for (const auto& row : jsonl::read(resolve(base_dir, dataset["queries"].get<std::string>()).string())) {
        all_queries.push_back(ecg::query_from_json(row));
      }
    } else {
      records = load_records(record_set(dataset, base_dir));
    }

    const std::vector<std::optional<double>> windows = [&] {
      std::vector<std::optional<double>> w;
      if (*task == prompt::Task::Activity) {
        w.push_back(std::nullopt);
      } else {
        for (double x : config_windows(config)) w.push_back(x);
      }
      return w;
    }();

    for (const auto& variant_name : config_schemes(config)) {
      const auto slash = variant_name.find('/');
      const auto variant = slash == std::string::npos ? variant_name : variant_name.substr(slash + 1);
      for (const auto& w : windows) {
        std::string unit = task_name + "/" + variant;
        if (w) unit += "@" + sensor::format_decimal(*w) + "s";
        try {
          const auto scheme = prompt::make_scheme(*task, variant);
          const auto tmpl = prompts_dir ? prompt::load_template(scheme, *prompts_dir) : prompt::builtin_template(scheme);
          std::vector<PromptRecord> prompts;
          std::vector<ecg::EcgQuery> queries;
          if (*task == prompt::Task::Activity) {
            for (const auto& s : snapshots) prompts.push_back(make_prompt(tmpl, s.id, sensor::textualize(s)));
          } else {
            if (!records.empty()) {
              queries = make_windows(records, ecg::kQueryRate, extract_options(dataset, config, *w));
            } else {
              for (const auto& q : all_queries) {
                if (q.window_s == *w) queries.push_back(q);
              }
            }
            for (const auto& q : queries) prompts.push_back(make_prompt(tmpl, q));
          }
          const auto responses = run_prompts(*backend, prompts, run);
          std::vector<json> prompt_rows, response_rows;
          for (const auto& p : prompts) prompt_rows.push_back(to_json(p));
          for (const auto& r : responses) {
            response_rows.push_back(to_json(r));
            if (r.error) {
              result.failures.push_back(json{{"unit", unit},
                                             {"instance_id", r.instance_id},
                                             {"error", to_string(*r.error)},
                                             {"message", r.error_message}});
            }
          }
          persist(out_dir, unit, "prompts.jsonl", jsonl::dump(prompt_rows));
          persist(out_dir, unit, "responses.jsonl", jsonl::dump(response_rows));
          const auto parsed = parse_responses(*task, responses);
          persist(out_dir, unit, "parsed.jsonl", jsonl::dump(parsed));

          EvalReport report;
          if (*task == prompt::Task::Activity) {
            report = evaluate_activity(ActivityEvalInputs{parsed, snapshots, judgements, std::nullopt, scheme.key()});
          } else {
            report = evaluate_ecg(parsed, queries, scheme.key());
          }
          persist(out_dir, unit, "report.json", dump_report(report));
          result.reports.push_back(std::move(report));
        } catch (const Error& e) {
          record_failure(unit, e);
        }
      }
    }
  }

  if (out_dir) {
    jsonl::write((*out_dir / "failures.jsonl").string(), result.failures);
    std::vector<json> summary;
    for (const auto& r : result.reports) {
      auto j = to_json(r);
      j.erase("rows");
      summary.push_back(std::move(j));
    }
    jsonl::write((*out_dir / "reports.jsonl").string(), summary);
  }
  return result;
}

}  // namespace sensorpen::experiment
