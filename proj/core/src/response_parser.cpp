#include "sensorpen/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace sensorpen::parse {
namespace {

using sensor::Environment;
using sensor::Motion;

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    out.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Drops bullets, quote marks, headings, emphasis and "1." style numbering.
std::string_view strip_prefix(std::string_view s) {
  constexpr std::string_view kMarks = "-*+#>_`";
  constexpr std::string_view kBullet = "\u2022";
  for (;;) {
    const auto before = s.size();
    while (!s.empty() && (is_space(s.front()) || kMarks.find(s.front()) != std::string_view::npos)) {
      s.remove_prefix(1);
    }
    if (s.starts_with(kBullet)) s.remove_prefix(kBullet.size());
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) s.remove_prefix(digits + 1);
    if (s.size() == before) return s;
  }
}

// Value text after "<key>:" when the line starts with the key, else nullopt.
std::optional<std::string_view> keyed_value(std::string_view line, std::string_view key) {
  line = strip_prefix(line);
  if (line.size() < key.size()) return std::nullopt;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (lower(line[i]) != key[i]) return std::nullopt;
  }
  line.remove_prefix(key.size());
  while (!line.empty() && (line.front() == '*' || line.front() == '_' || line.front() == ' ')) line.remove_prefix(1);
  if (line.empty() || line.front() != ':') return std::nullopt;
  line.remove_prefix(1);
  while (!line.empty() && (line.front() == '*' || line.front() == '_')) line.remove_prefix(1);
  return trim(line);
}

std::string first_word(std::string_view value) {
  std::size_t i = 0;
  while (i < value.size() && !is_alpha(value[i])) {
    if (std::string_view(" \t*_'\"`").find(value[i]) == std::string_view::npos) return {};
    ++i;
  }
  std::string word;
  while (i < value.size() && is_alpha(value[i])) word += lower(value[i++]);
  return word;
}

std::optional<Motion> fold_motion(const std::string& w) {
  if (w == "stationary" || w == "still") return Motion::Stationary;
  if (w == "walking" || w == "moving") return Motion::Walking;
  return std::nullopt;
}

std::optional<Environment> fold_environment(const std::string& w) {
  if (w == "indoors" || w == "indoor") return Environment::Indoors;
  if (w == "outdoors" || w == "outdoor") return Environment::Outdoors;
  return std::nullopt;
}

bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out, std::chars_format::general);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

// Parses "[n, n, ...]" at the start of `s` (leading whitespace allowed).
std::optional<std::vector<double>> bracket_list(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (is_space(s[i]) || s[i] == '*' || s[i] == '_')) ++i;
  if (i >= s.size() || s[i] != '[') return std::nullopt;
  const auto close = s.find(']', i);
  if (close == std::string_view::npos) return std::nullopt;
  const auto inner = trim(s.substr(i + 1, close - i - 1));
  std::vector<double> values;
  if (inner.empty()) return values;
  std::size_t pos = 0;
  while (pos <= inner.size()) {
    const auto comma = inner.find(',', pos);
    const auto item = trim(inner.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double v = 0.0;
    if (!parse_real(item, v)) return std::nullopt;
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return values;
}

const std::set<std::string>& location_stopwords() {
  static const std::set<std::string> words = {
      // motion / environment restatement
      "user", "stationary", "walking", "indoors", "outdoors", "likely", "environment", "area",
      "indoor", "outdoor", "moving", "still", "static", "inside", "outside", "setting", "motion",
      // function words
      "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "am", "in", "on", "at",
      "of", "to", "and", "or", "but", "it", "its", "this", "that", "there", "they", "their",
      "with", "while", "who", "which", "as", "by", "for", "from", "currently", "appears", "appear",
      "seems", "seem", "probably", "possibly", "most", "very", "not", "s"};
  return words;
}

}  // namespace

ActivityParse parse_activity(std::string_view text) {
  ActivityParse out;
  std::optional<std::string_view> motion_line, env_line, summary_line;
  for (const auto line : split_lines(text)) {
    if (auto v = keyed_value(line, "motion")) motion_line = v;
    if (auto v = keyed_value(line, "environment")) env_line = v;
    if (auto v = keyed_value(line, "summary")) summary_line = v;
  }
  if (motion_line) out.motion = fold_motion(first_word(*motion_line));
  if (env_line) out.environment = fold_environment(first_word(*env_line));
  if (summary_line && !summary_line->empty()) out.summary = std::string(*summary_line);
  out.failed = !out.motion || !out.environment;
  return out;
}

std::string render_activity(const ActivityParse& p) {
  std::string out;
  if (p.summary) out += "Summary: " + *p.summary + "\n";
  out += "Motion: " + (p.motion ? std::string(sensor::to_string(*p.motion)) : std::string("unknown")) + ".\n";
  out += "Environment: " +
         (p.environment ? std::string(sensor::to_string(*p.environment)) : std::string("unknown")) + ".\n";
  return out;
}

RPeakParse parse_rpeaks(std::string_view text) {
  constexpr std::string_view kKey = "r-peaks";
  RPeakParse out;
  for (std::size_t pos = 0; pos + kKey.size() <= text.size(); ++pos) {
    bool match = true;
    for (std::size_t k = 0; k < kKey.size() && match; ++k) match = lower(text[pos + k]) == kKey[k];
    if (!match) continue;
    std::size_t i = pos + kKey.size();
    while (i < text.size() && (text[i] == '*' || text[i] == '_' || text[i] == ' ')) ++i;
    if (i >= text.size() || text[i] != ':') continue;
    if (auto list = bracket_list(text.substr(i + 1))) {
      out.peaks = std::move(*list);
      out.hallucinated = false;
    }
  }
  if (out.hallucinated) out.peaks.clear();
  return out;
}

std::optional<std::string> extract_location(const std::optional<std::string>& summary) {
  if (!summary) return std::nullopt;
  const auto& stop = location_stopwords();
  std::string token;
  auto informative = [&] { return !token.empty() && !stop.contains(token); };
  for (char c : *summary) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token += lower(c);
      continue;
    }
    if (informative()) return summary;
    token.clear();
  }
  if (informative()) return summary;
  return std::nullopt;
}

nlohmann::json activity_to_json(const std::string& instance_id, const ActivityParse& p) {
  nlohmann::json j{{"instance_id", instance_id}, {"failed", p.failed}};
  if (p.motion) j["motion"] = sensor::to_string(*p.motion);
  if (p.environment) j["environment"] = sensor::to_string(*p.environment);
  if (p.summary) j["summary"] = *p.summary;
  return j;
}

nlohmann::json rpeaks_to_json(const std::string& instance_id, const RPeakParse& p) {
  return nlohmann::json{{"instance_id", instance_id}, {"peaks", p.peaks}, {"hallucinated", p.hallucinated}};
}

ActivityParse activity_from_json(const nlohmann::json& j) {
  ActivityParse p;
  if (j.contains("motion")) p.motion = sensor::motion_from_string(j["motion"].get<std::string>());
  if (j.contains("environment")) p.environment = sensor::environment_from_string(j["environment"].get<std::string>());
  if (j.contains("summary")) p.summary = j["summary"].get<std::string>();
  p.failed = !p.motion || !p.environment;
  return p;
}

RPeakParse rpeaks_from_json(const nlohmann::json& j) {
  RPeakParse p;
  p.hallucinated = j.at("hallucinated").get<bool>();
  if (!p.hallucinated) p.peaks = j.at("peaks").get<std::vector<double>>();
  return p;
}

}  // namespace sensorpen::parse
