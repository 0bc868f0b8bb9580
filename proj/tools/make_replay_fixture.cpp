// Builds a replay store from rendered prompts and hand-written response
// texts, keyed exactly as a recording run would key them.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "sensorpen/error.hpp"
#include "sensorpen/experiment.hpp"
#include "sensorpen/jsonl.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Replay store from prompts and response texts"};
  std::string prompts_path, texts_path, out_path, model = sensorpen::experiment::kDefaultModel;
  std::string recorded_at = "2024-01-01T00:00:00Z";
  app.add_option("--prompts", prompts_path)->required()->check(CLI::ExistingFile);
  app.add_option("--texts", texts_path, "{instance_id, text} JSON Lines")->required()->check(CLI::ExistingFile);
  app.add_option("--model", model);
  app.add_option("--recorded-at", recorded_at);
  app.add_option("-o,--out", out_path)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace ex = sensorpen::experiment;
    std::map<std::string, std::string> texts;
    for (const auto& row : sensorpen::jsonl::read(texts_path)) {
      texts[row.at("instance_id").get<std::string>()] = row.at("text").get<std::string>();
    }
    ex::RunOptions run;
    run.model_id = model;
    std::vector<nlohmann::json> store;
    for (const auto& row : sensorpen::jsonl::read(prompts_path)) {
      const auto p = ex::prompt_from_json(row);
      const auto it = texts.find(p.instance_id);
      if (it == texts.end()) continue;  // left out on purpose: replays as a miss
      store.push_back(nlohmann::json{{"fingerprint", sensorpen::llm::fingerprint(ex::to_request(p, run))},
                                     {"response_text", it->second},
                                     {"recorded_at", recorded_at}});
    }
    sensorpen::jsonl::write(out_path, store);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
