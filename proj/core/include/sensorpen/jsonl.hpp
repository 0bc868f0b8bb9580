#pragma once

// JSON Lines helpers for stage files.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sensorpen::jsonl {

// Blank lines are skipped. Throws Io or InvalidArgument (with line number).
std::vector<nlohmann::json> read(const std::string& path);
std::vector<nlohmann::json> parse(const std::string& text, const std::string& source = "<memory>");

// One compact object per line, keys sorted.
std::string dump(const std::vector<nlohmann::json>& rows);
void write(const std::string& path, const std::vector<nlohmann::json>& rows);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace sensorpen::jsonl
