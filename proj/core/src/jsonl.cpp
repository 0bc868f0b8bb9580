#include "sensorpen/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sensorpen/error.hpp"

namespace sensorpen::jsonl {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::vector<nlohmann::json> parse(const std::string& text, const std::string& source) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidArgument, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<nlohmann::json> read(const std::string& path) { return parse(read_text(path), path); }

std::string dump(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write(const std::string& path, const std::vector<nlohmann::json>& rows) { write_text(path, dump(rows)); }

}  // namespace sensorpen::jsonl
