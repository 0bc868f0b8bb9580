#pragma once

// Keyword extraction from model responses: activity states, R-peak lists
// and location claims.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sensorpen/sensor_model.hpp"

namespace sensorpen::parse {

struct ActivityParse {
  std::optional<sensor::Motion> motion;
  std::optional<sensor::Environment> environment;
  std::optional<std::string> summary;
  bool failed = true;

  friend bool operator==(const ActivityParse&, const ActivityParse&) = default;
};

struct RPeakParse {
  std::vector<double> peaks;
  bool hallucinated = true;

  friend bool operator==(const RPeakParse&, const RPeakParse&) = default;
};

// Last "Motion:", "Environment:" and "Summary:" lines win. Keys match
// case-insensitively after bullet or markdown prefixes. State words fold
// indoor/outdoor, moving/walking and still/stationary; anything else fails.
ActivityParse parse_activity(std::string_view text);

// "Summary: ...\nMotion: ...\nEnvironment: ..." for the fields present.
std::string render_activity(const ActivityParse& parse);

// Last "R-peaks:" followed by a well-formed bracketed numeric list.
// Total on arbitrary bytes.
RPeakParse parse_rpeaks(std::string_view text);

// The summary when it names something beyond motion/environment words.
std::optional<std::string> extract_location(const std::optional<std::string>& summary);

nlohmann::json activity_to_json(const std::string& instance_id, const ActivityParse& p);
nlohmann::json rpeaks_to_json(const std::string& instance_id, const RPeakParse& p);
ActivityParse activity_from_json(const nlohmann::json& j);
RPeakParse rpeaks_from_json(const nlohmann::json& j);

}  // namespace sensorpen::parse
