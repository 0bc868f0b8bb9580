#include "sensorpen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sensorpen/error.hpp"

namespace sensorpen::metrics {
namespace {

// Code points matched by Python's str.isspace().
bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x20) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
         c == 0x3000;
}

// Lenient UTF-8 decoding; stray bytes map to U+DC80..U+DCFF.
std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
    char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
    bool ok = len > 0 && i + static_cast<std::size_t>(len) <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      ok = (b & 0xC0) == 0x80;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xDC00 + b0);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::u32string strip_spaces(std::string_view s) {
  auto cps = decode_utf8(s);
  cps.erase(std::remove_if(cps.begin(), cps.end(), is_unicode_space), cps.end());
  return cps;
}

std::map<std::u32string_view, int> ngram_counts(const std::u32string& s, int n) {
  std::map<std::u32string_view, int> counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= s.size(); ++i) ++counts[std::u32string_view(s).substr(i, un)];
  return counts;
}

void require_nonempty(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyEval, "no instances to evaluate");
}

}  // namespace

double failure_rate(std::span<const parse::ActivityParse> parses) {
  require_nonempty(parses.size());
  const auto failed = std::count_if(parses.begin(), parses.end(), [](const auto& p) { return p.failed; });
  return static_cast<double>(failed) / static_cast<double>(parses.size());
}

double accuracy(std::span<const parse::ActivityParse> parses, std::span<const sensor::GroundTruth> truths,
                Subtask subtask) {
  if (parses.size() != truths.size()) throw Error(ErrorCode::LengthMismatch, "parses and truths differ in length");
  require_nonempty(parses.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < parses.size(); ++i) {
    const auto& p = parses[i];
    if (p.failed) continue;
    if (subtask == Subtask::Motion ? p.motion == truths[i].motion : p.environment == truths[i].environment) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(parses.size());
}

PrecisionRecall location_pr(std::span<const LocationJudgement> judgements) {
  std::size_t claims = 0, correct = 0, informative = 0, recalled = 0;
  for (const auto& j : judgements) {
    if (j.informative) ++informative;
    if (!j.claimed) continue;
    ++claims;
    if (j.correct) {
      ++correct;
      if (j.informative) ++recalled;
    }
  }
  if (informative == 0) throw Error(ErrorCode::NoInformativeInstances, "no instance has informative SSIDs");
  PrecisionRecall out;
  if (claims > 0) out.precision = static_cast<double>(correct) / static_cast<double>(claims);
  out.recall = static_cast<double>(recalled) / static_cast<double>(informative);
  return out;
}

double chrf(std::string_view hypothesis, std::string_view reference, int max_n, double beta) {
  if (max_n < 1 || !(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "chrF needs max_n >= 1 and beta > 0");
  const auto hyp = strip_spaces(hypothesis);
  const auto ref = strip_spaces(reference);
  if (hyp.empty() && ref.empty()) return 1.0;
  if (hyp.empty() || ref.empty()) return 0.0;

  const double factor = beta * beta;
  double avg_prec = 0.0, avg_rec = 0.0;
  int effective = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto h = ngram_counts(hyp, n);
    const auto r = ngram_counts(ref, n);
    long n_hyp = 0, n_ref = 0, n_match = 0;
    for (const auto& [g, c] : h) {
      n_hyp += c;
      if (const auto it = r.find(g); it != r.end()) n_match += std::min(c, it->second);
    }
    for (const auto& [g, c] : r) n_ref += c;
    if (n_hyp > 0 && n_ref > 0) {
      avg_prec += static_cast<double>(n_match) / static_cast<double>(n_hyp);
      avg_rec += static_cast<double>(n_match) / static_cast<double>(n_ref);
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avg_prec /= effective;
  avg_rec /= effective;
  if (avg_prec + avg_rec == 0.0) return 0.0;
  return (1.0 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec);
}

double corpus_chrf(std::span<const std::pair<std::string, std::string>> pairs, int max_n, double beta) {
  require_nonempty(pairs.size());
  double sum = 0.0;
  for (const auto& [h, r] : pairs) sum += chrf(h, r, max_n, beta);
  return sum / static_cast<double>(pairs.size());
}

double mae_bpm(std::span<const double> detected, std::span<const double> truth) {
  if (detected.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "detected and truth differ in length");
  if (detected.empty()) throw Error(ErrorCode::AllHallucinated, "no heart rate to compare");
  double sum = 0.0;
  for (std::size_t i = 0; i < detected.size(); ++i) sum += std::abs(detected[i] - truth[i]);
  return sum / static_cast<double>(detected.size());
}

double mae_bpm(std::span<const std::optional<double>> detected, std::span<const double> truth) {
  if (detected.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "detected and truth differ in length");
  std::vector<double> d, t;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    if (!detected[i]) continue;
    d.push_back(*detected[i]);
    t.push_back(truth[i]);
  }
  return mae_bpm(d, t);
}

double hallucination_rate(std::span<const parse::RPeakParse> parses) {
  require_nonempty(parses.size());
  const auto n = std::count_if(parses.begin(), parses.end(), [](const auto& p) { return p.hallucinated; });
  return static_cast<double>(n) / static_cast<double>(parses.size());
}

}  // namespace sensorpen::metrics
