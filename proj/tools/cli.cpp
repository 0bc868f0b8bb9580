#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "sensorpen/ecg_pipeline.hpp"
#include "sensorpen/error.hpp"
#include "sensorpen/experiment.hpp"
#include "sensorpen/jsonl.hpp"
#include "sensorpen/wfdb.hpp"

namespace sensorpen::cli {
namespace {

using nlohmann::json;
namespace ex = experiment;

std::string default_data_dir() {
  if (const char* env = std::getenv("SENSORPEN_MITDB"); env && *env) return env;
  return "data/mitdb";
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
  } else {
    jsonl::write_text(path, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

prompt::Task parse_task(const std::string& s) {
  const auto t = prompt::task_from_string(s);
  if (!t) throw CLI::ValidationError("--task", "unknown task " + s);
  return *t;
}

std::vector<ecg::EcgQuery> read_queries(const std::string& path) {
  std::vector<ecg::EcgQuery> out;
  for (const auto& row : jsonl::read(path)) out.push_back(ecg::query_from_json(row));
  return out;
}

struct Options {
  std::string out = "-";
  std::string snapshots, fields, query, prompts, responses, parsed, judgements, bertscore, queries;
  std::string task, scheme, prompts_dir;
  std::string replay, record, api_base, model = ex::kDefaultModel;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  int parallelism = 4;
  std::string detector, records, data_dir = default_data_dir(), channel, mode = "sequential";
  double window = 5.0;
  std::optional<double> fs;
  std::optional<std::size_t> count;
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::string record_name;
  std::size_t n_samples = 1000;
  std::string config, output_dir;
};

int cmd_textualize(const Options& o) {
  std::vector<json> rows;
  for (const auto& s : sensor::read_snapshots(o.snapshots)) rows.push_back(ex::textualize_row(s));
  emit(o.out, jsonl::dump(rows));
  return kOk;
}

int cmd_prompt(const Options& o) {
  const auto task = parse_task(o.task);
  const auto scheme = prompt::make_scheme(task, o.scheme);
  const auto tmpl = o.prompts_dir.empty() ? prompt::builtin_template(scheme) : prompt::load_template(scheme, o.prompts_dir);
  std::vector<json> rows;
  if (task == prompt::Task::Activity) {
    if (!o.fields.empty()) {
      for (const auto& row : jsonl::read(o.fields)) {
        const auto id = row.at("instance_id").get<std::string>();
        rows.push_back(ex::to_json(ex::make_prompt(tmpl, id, row.at("fields").get<prompt::FieldMap>())));
      }
    } else if (!o.snapshots.empty()) {
      for (const auto& s : sensor::read_snapshots(o.snapshots)) {
        rows.push_back(ex::to_json(ex::make_prompt(tmpl, s.id, sensor::textualize(s))));
      }
    } else {
      throw CLI::ValidationError("prompt", "activity prompts need --fields or --snapshots");
    }
  } else {
    if (o.query.empty()) throw CLI::ValidationError("prompt", "ECG prompts need --query");
    for (const auto& q : read_queries(o.query)) rows.push_back(ex::to_json(ex::make_prompt(tmpl, q)));
  }
  emit(o.out, jsonl::dump(rows));
  return kOk;
}

int cmd_run(const Options& o) {
  const int modes = !o.replay.empty() + !o.record.empty();
  if (modes > 1) throw CLI::ValidationError("run", "--replay and --record are exclusive");
  if (!o.replay.empty() && !o.api_base.empty()) throw CLI::ValidationError("run", "replay mode forbids --api-base");
  if (modes == 0 && o.api_base.empty()) throw CLI::ValidationError("run", "need --replay, --record or --api-base");
  if (!o.record.empty() && o.api_base.empty()) throw CLI::ValidationError("run", "--record needs --api-base");

  ex::BackendConfig bc;
  bc.kind = !o.replay.empty() ? "replay" : !o.record.empty() ? "record" : "live";
  bc.store = !o.replay.empty() ? o.replay : o.record;
  bc.api_base = o.api_base;
  auto backend = ex::make_backend(bc);

  std::vector<ex::PromptRecord> prompts;
  for (const auto& row : jsonl::read(o.prompts)) prompts.push_back(ex::prompt_from_json(row));
  ex::RunOptions run;
  run.model_id = o.model;
  run.temperature = o.temperature;
  run.max_tokens = o.max_tokens;
  run.parallelism = o.parallelism;
  const auto responses = ex::run_prompts(*backend, prompts, run);

  std::vector<json> rows;
  bool any_error = false;
  for (const auto& r : responses) {
    rows.push_back(ex::to_json(r));
    if (r.error) {
      any_error = true;
      std::cerr << "sensorpen: " << r.instance_id << ": " << to_string(*r.error) << ": " << r.error_message << "\n";
    }
  }
  emit(o.out, jsonl::dump(rows));
  return any_error ? kBackendError : kOk;
}

int cmd_parse(const Options& o) {
  const auto task = parse_task(o.task);
  std::vector<ex::ResponseRecord> responses;
  for (const auto& row : jsonl::read(o.responses)) responses.push_back(ex::response_from_json(row));
  emit(o.out, jsonl::dump(ex::parse_responses(task, responses)));
  return kOk;
}

int cmd_eval(const Options& o) {
  const auto task = parse_task(o.task);
  const auto parsed = jsonl::read(o.parsed);
  ex::EvalReport report;
  if (task == prompt::Task::Activity) {
    if (o.snapshots.empty()) throw CLI::ValidationError("eval", "activity evaluation needs --snapshots");
    ex::ActivityEvalInputs in;
    in.parsed = parsed;
    in.snapshots = sensor::read_snapshots(o.snapshots);
    if (!o.judgements.empty()) in.judgements = jsonl::read(o.judgements);
    if (!o.bertscore.empty()) in.bertscores = jsonl::read(o.bertscore);
    in.scheme = o.scheme;
    report = ex::evaluate_activity(in);
  } else {
    if (o.queries.empty()) throw CLI::ValidationError("eval", "ECG evaluation needs --queries");
    report = ex::evaluate_ecg(parsed, read_queries(o.queries), o.scheme);
  }
  emit(o.out, ex::dump_report(report));
  return kOk;
}

ecg::ExtractOptions extract_options(const Options& o) {
  ecg::ExtractOptions e;
  e.window_s = o.window;
  if (o.mode == "random") {
    e.mode = ecg::ExtractMode::Random;
  } else if (o.mode != "sequential") {
    throw CLI::ValidationError("--mode", "expected sequential or random");
  }
  e.seed = o.seed;
  e.count = o.count;
  return e;
}

int cmd_baseline(const Options& o) {
  const auto kind = qrs::detector_from_string(o.detector);
  if (!kind) throw CLI::ValidationError("--detector", "unknown detector " + o.detector);
  const auto records = ex::load_records(ex::RecordSet{o.data_dir, split_list(o.records), o.channel});
  const double fs = o.fs.value_or(records.front().sample_rate);
  const auto windows = ex::make_windows(records, fs, extract_options(o));
  emit(o.out, ex::dump_report(ex::evaluate_baseline(*kind, windows)));
  return kOk;
}

int cmd_ecg_prepare(const Options& o) {
  const auto records = ex::load_records(ex::RecordSet{o.data_dir, split_list(o.records), o.channel});
  std::vector<json> rows;
  for (const auto& q : ex::make_windows(records, ecg::kQueryRate, extract_options(o))) rows.push_back(ecg::query_to_json(q));
  emit(o.out, jsonl::dump(rows));
  return kOk;
}

int cmd_ecg_dump(const Options& o) {
  const auto base = (std::filesystem::path(o.data_dir) / o.record_name).string();
  const auto header = wfdb::parse_header(jsonl::read_text(base + ".hea"));
  json sigs = json::array();
  for (const auto& s : header.signals) {
    sigs.push_back(json{{"file_name", s.file_name}, {"format", s.format},       {"adc_gain", s.adc_gain},
                        {"baseline", s.baseline},   {"units", s.units},         {"adc_resolution", s.adc_resolution},
                        {"adc_zero", s.adc_zero},   {"initial_value", s.initial_value},
                        {"checksum", s.checksum},   {"description", s.description}});
  }
  const auto bytes = wfdb::read_file_bytes((std::filesystem::path(o.data_dir) / header.signals.at(0).file_name).string());
  const auto signals = wfdb::parse_212(bytes, header.n_signals);
  json first = json::array();
  for (const auto& ch : signals.channels) {
    first.push_back(std::vector<int>(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(std::min(o.n_samples, ch.size()))));
  }
  const auto beats = wfdb::parse_annotations(wfdb::read_file_bytes(base + ".atr"));
  json out{{"record", header.record_name}, {"n_signals", header.n_signals}, {"fs", header.sample_rate},
           {"n_samples", header.n_samples}, {"signals", sigs},              {"first_samples", first},
           {"beat_samples", beats}};
  emit(o.out, out.dump(1) + "\n");
  return kOk;
}

int cmd_render(const Options& o) {
  const auto queries = read_queries(o.query);
  if (o.index >= queries.size()) throw Error(ErrorCode::InvalidArgument, "--index beyond the query file");
  const auto png = ecg::render_figure(queries[o.index]);
  if (o.out.empty() || o.out == "-") throw CLI::ValidationError("render", "--out must name a PNG file");
  jsonl::write_text(o.out, std::string(png.begin(), png.end()));
  return kOk;
}

int cmd_sweep(const Options& o) {
  auto config = json::parse(jsonl::read_text(o.config));
  if (!o.output_dir.empty()) config["output_dir"] = std::filesystem::absolute(o.output_dir).string();
  const auto base = std::filesystem::path(o.config).parent_path();
  const auto result = ex::run_experiment(config, base.empty() ? std::filesystem::path(".") : base);
  std::vector<json> rows;
  for (const auto& r : result.reports) {
    auto j = ex::to_json(r);
    j.erase("rows");
    rows.push_back(std::move(j));
  }
  emit(o.out, jsonl::dump(rows));
  bool backend = false;
  for (const auto& f : result.failures) {
    std::cerr << "sensorpen: " << f.dump() << "\n";
    const auto code = error_code_from_string(f.value("error", ""));
    backend = backend || (code && is_backend_error(*code));
  }
  if (result.failures.empty()) return kOk;
  return backend ? kBackendError : kDataError;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Sensor and ECG prompting experiments", "sensorpen"};
  app.require_subcommand(1);
  Options o;

  auto* textualize = app.add_subcommand("textualize", "Sensor snapshots to field maps");
  textualize->add_option("--snapshots", o.snapshots, "Snapshot JSON Lines")->required()->check(CLI::ExistingFile);
  textualize->add_option("-o,--out", o.out, "Output path or -");

  auto* prompt_cmd = app.add_subcommand("prompt", "Render prompts for a scheme");
  prompt_cmd->add_option("--task", o.task, "activity | ecg | ecg_vision")->required();
  prompt_cmd->add_option("--scheme", o.scheme, "Scheme variant")->required();
  prompt_cmd->add_option("--fields", o.fields, "Field maps from textualize")->check(CLI::ExistingFile);
  prompt_cmd->add_option("--snapshots", o.snapshots, "Snapshot JSON Lines")->check(CLI::ExistingFile);
  prompt_cmd->add_option("--query", o.query, "ECG query JSON Lines")->check(CLI::ExistingFile);
  prompt_cmd->add_option("--prompts-dir", o.prompts_dir, "Template directory overriding the builtins");
  prompt_cmd->add_option("-o,--out", o.out, "Output path or -");

  auto* run_cmd = app.add_subcommand("run", "Send prompts to a backend");
  run_cmd->add_option("--prompts", o.prompts, "Prompt JSON Lines")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--replay", o.replay, "Replay store")->check(CLI::ExistingFile);
  run_cmd->add_option("--record", o.record, "Replay store to append to");
  run_cmd->add_option("--api-base", o.api_base, "Chat-completion API base URL");
  run_cmd->add_option("--model", o.model, "Model id");
  run_cmd->add_option("--temperature", o.temperature, "Sampling temperature");
  run_cmd->add_option("--max-tokens", o.max_tokens, "Completion token limit");
  run_cmd->add_option("-j,--parallelism", o.parallelism, "Concurrent requests")->check(CLI::PositiveNumber);
  run_cmd->add_option("-o,--out", o.out, "Output path or -");

  auto* parse_cmd = app.add_subcommand("parse", "Extract states or R-peaks from responses");
  parse_cmd->add_option("--task", o.task, "activity | ecg | ecg_vision")->required();
  parse_cmd->add_option("--responses", o.responses, "Response JSON Lines")->required()->check(CLI::ExistingFile);
  parse_cmd->add_option("-o,--out", o.out, "Output path or -");

  auto* eval_cmd = app.add_subcommand("eval", "Score parsed results");
  eval_cmd->add_option("--task", o.task, "activity | ecg | ecg_vision")->required();
  eval_cmd->add_option("--parsed", o.parsed, "Parsed JSON Lines")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--snapshots", o.snapshots, "Snapshots with labels")->check(CLI::ExistingFile);
  eval_cmd->add_option("--judgements", o.judgements, "Location claim judgements")->check(CLI::ExistingFile);
  eval_cmd->add_option("--bertscore", o.bertscore, "External per-instance scores")->check(CLI::ExistingFile);
  eval_cmd->add_option("--queries", o.queries, "ECG queries with truth")->check(CLI::ExistingFile);
  eval_cmd->add_option("--scheme", o.scheme, "Scheme label for the report");
  eval_cmd->add_option("-o,--out", o.out, "Output path or -");

  auto* baseline = app.add_subcommand("baseline", "Detector heart-rate error over windows");
  baseline->add_option("--detector", o.detector, "pan_tompkins | hamilton | christov | tma | swt")->required();
  baseline->add_option("--window", o.window, "Window length in seconds")->check(CLI::PositiveNumber);
  baseline->add_option("--records", o.records, "Comma-separated record names")->required();
  baseline->add_option("--data-dir", o.data_dir, "WFDB directory");
  baseline->add_option("--channel", o.channel, "Signal name (default: MLII, else the first signal)");
  baseline->add_option("--fs", o.fs, "Rate to evaluate at (default: source rate)");
  baseline->add_option("--mode", o.mode, "sequential | random");
  baseline->add_option("--count", o.count, "Windows per record");
  baseline->add_option("--seed", o.seed, "Seed for random windows");
  baseline->add_option("-o,--out", o.out, "Output path or -");

  auto* ecg_cmd = app.add_subcommand("ecg", "WFDB utilities");
  ecg_cmd->require_subcommand(1);
  auto* prepare = ecg_cmd->add_subcommand("prepare", "WFDB records to 72 Hz query windows");
  prepare->add_option("--records", o.records, "Comma-separated record names")->required();
  prepare->add_option("--data-dir", o.data_dir, "WFDB directory");
  prepare->add_option("--channel", o.channel, "Signal name (default: MLII, else the first signal)");
  prepare->add_option("--window", o.window, "Window length in seconds")->check(CLI::PositiveNumber);
  prepare->add_option("--mode", o.mode, "sequential | random");
  prepare->add_option("--count", o.count, "Windows per record");
  prepare->add_option("--seed", o.seed, "Seed for random windows");
  prepare->add_option("-o,--out", o.out, "Output path or -");
  auto* dump = ecg_cmd->add_subcommand("dump", "Header, leading samples and beat times of a record");
  dump->add_option("--record", o.record_name, "Record name")->required();
  dump->add_option("--data-dir", o.data_dir, "WFDB directory");
  dump->add_option("-n,--samples", o.n_samples, "Samples per channel");
  dump->add_option("-o,--out", o.out, "Output path or -");

  auto* render = app.add_subcommand("render", "Plot a query window as PNG");
  render->add_option("--query", o.query, "ECG query JSON Lines")->required()->check(CLI::ExistingFile);
  render->add_option("--index", o.index, "Row of the query file");
  render->add_option("-o,--out", o.out, "PNG path")->required();

  auto* sweep = app.add_subcommand("sweep", "Run an experiment config over its window set");
  sweep->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--output-dir", o.output_dir, "Stage files and failure manifest");
  sweep->add_option("-o,--out", o.out, "Report summary path or -");

  std::vector<std::string> argv(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
    if (textualize->parsed()) return cmd_textualize(o);
    if (prompt_cmd->parsed()) return cmd_prompt(o);
    if (run_cmd->parsed()) return cmd_run(o);
    if (parse_cmd->parsed()) return cmd_parse(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (baseline->parsed()) return cmd_baseline(o);
    if (prepare->parsed()) return cmd_ecg_prepare(o);
    if (dump->parsed()) return cmd_ecg_dump(o);
    if (render->parsed()) return cmd_render(o);
    if (sweep->parsed()) return cmd_sweep(o);
    return kUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "sensorpen: " << e.what() << "\n";
    return is_backend_error(e.code()) ? kBackendError : kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "sensorpen: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "sensorpen: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace sensorpen::cli
