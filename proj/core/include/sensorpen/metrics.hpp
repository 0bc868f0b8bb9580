#pragma once

// Evaluation metrics for the activity and ECG tasks.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sensorpen/response_parser.hpp"
#include "sensorpen/sensor_model.hpp"

namespace sensorpen::metrics {

enum class Subtask { Motion, Environment };

// count(failed) / total. Throws EmptyEval.
double failure_rate(std::span<const parse::ActivityParse> parses);

// Correct / total; failed or missing predictions count as incorrect.
// Throws LengthMismatch or EmptyEval.
double accuracy(std::span<const parse::ActivityParse> parses, std::span<const sensor::GroundTruth> truths,
                Subtask subtask);

struct LocationJudgement {
  bool claimed = false;      // a location claim was emitted
  bool correct = false;      // manual judgement of that claim
  bool informative = false;  // the scan holds location-revealing SSIDs
};

struct PrecisionRecall {
  std::optional<double> precision;  // absent when nothing was claimed
  double recall = 0.0;
};

// precision = correct claims / claims; recall = correct claims on
// informative instances / informative instances. Throws
// NoInformativeInstances.
PrecisionRecall location_pr(std::span<const LocationJudgement> judgements);

// Character n-gram F-score in [0, 1]. Whitespace is removed before n-gram
// extraction and precision/recall are averaged over the orders that occur in
// both strings. Two empty strings score 1.
double chrf(std::string_view hypothesis, std::string_view reference, int max_n = 6, double beta = 2.0);

// Mean of sentence-level scores. Throws EmptyEval.
double corpus_chrf(std::span<const std::pair<std::string, std::string>> pairs, int max_n = 6, double beta = 2.0);

// Mean |detected - truth|. Throws LengthMismatch, or AllHallucinated when
// empty.
double mae_bpm(std::span<const double> detected, std::span<const double> truth);

// Skips instances without a detection (hallucinations).
double mae_bpm(std::span<const std::optional<double>> detected, std::span<const double> truth);

// count(hallucinated) / total. Throws EmptyEval.
double hallucination_rate(std::span<const parse::RPeakParse> parses);

}  // namespace sensorpen::metrics
