#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "sensorpen/ecg_pipeline.hpp"
#include "sensorpen/metrics.hpp"
#include "sensorpen/prompt.hpp"
#include "sensorpen/qrs.hpp"
#include "sensorpen/response_parser.hpp"
#include "sensorpen/wfdb.hpp"

namespace sp = sensorpen;

namespace {

const std::string kWfdbDir = std::string(SENSORPEN_FIXTURE_DIR) + "/wfdb";

const sp::wfdb::EcgRecord& record_360() {
  static const auto r = sp::wfdb::read_record(kWfdbDir, "sur100");
  return r;
}

const sp::wfdb::EcgRecord& record_72() {
  static const auto r = sp::ecg::downsample(record_360());
  return r;
}

}  // namespace

static void BM_Parse212(benchmark::State& state) {
  const auto bytes = sp::wfdb::read_file_bytes(kWfdbDir + "/sur100.dat");
  for (auto _ : state) benchmark::DoNotOptimize(sp::wfdb::parse_212(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_Parse212);

static void BM_Annotations(benchmark::State& state) {
  const auto bytes = sp::wfdb::read_file_bytes(kWfdbDir + "/sur100.atr");
  for (auto _ : state) benchmark::DoNotOptimize(sp::wfdb::parse_annotations(bytes));
}
BENCHMARK(BM_Annotations);

// 30 s window of the surrogate record; arg 0 is the detector, arg 1 the rate.
static void BM_Detector(benchmark::State& state) {
  const auto kind = sp::qrs::kAllDetectors[static_cast<std::size_t>(state.range(0))];
  const auto& rec = state.range(1) == 360 ? record_360() : record_72();
  const auto n = static_cast<std::size_t>(30.0 * rec.sample_rate);
  const std::vector<int> window(rec.samples.begin(), rec.samples.begin() + static_cast<std::ptrdiff_t>(n));
  for (auto _ : state) benchmark::DoNotOptimize(sp::qrs::detect(kind, window, rec.sample_rate));
  state.SetLabel(std::string(sp::qrs::to_string(kind)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Detector)->ArgsProduct({{0, 1, 2, 3, 4}, {72, 360}})->Unit(benchmark::kMicrosecond);

static void BM_Downsample(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sp::ecg::downsample(record_360()));
}
BENCHMARK(BM_Downsample)->Unit(benchmark::kMicrosecond);

static void BM_RenderFigure(benchmark::State& state) {
  sp::ecg::EcgQuery q;
  q.values = sp::prompt::reasoning_example_values();
  for (auto _ : state) benchmark::DoNotOptimize(sp::ecg::render_figure(q));
}
BENCHMARK(BM_RenderFigure)->Unit(benchmark::kMillisecond);

static void BM_RenderEcgPrompt(benchmark::State& state) {
  const auto tmpl = sp::prompt::builtin_template(sp::prompt::make_scheme(sp::prompt::Task::Ecg, "procedure_1ex"));
  sp::ecg::EcgQuery q;
  q.values.assign(record_72().samples.begin(), record_72().samples.begin() + 720);
  for (auto _ : state) benchmark::DoNotOptimize(sp::prompt::render_ecg(tmpl, q));
}
BENCHMARK(BM_RenderEcgPrompt);

static void BM_ParseRpeaks(benchmark::State& state) {
  std::string text = "Reasoning: spikes rise above the range and return.\nR-peaks: [";
  for (int i = 0; i < 50; ++i) text += std::to_string(1100 + i) + (i + 1 < 50 ? ", " : "]\n");
  for (auto _ : state) benchmark::DoNotOptimize(sp::parse::parse_rpeaks(text));
}
BENCHMARK(BM_ParseRpeaks);

static void BM_Chrf(benchmark::State& state) {
  const std::string hyp = "The user is stationary, likely inside a shopping mall near a coffee shop in the city centre.";
  const std::string ref = "The user is sitting in a cafe inside a large shopping mall downtown.";
  for (auto _ : state) benchmark::DoNotOptimize(sp::metrics::chrf(hyp, ref));
}
BENCHMARK(BM_Chrf);

BENCHMARK_MAIN();
