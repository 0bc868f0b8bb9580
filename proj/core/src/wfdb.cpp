#include "sensorpen/wfdb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sensorpen/error.hpp"

namespace sensorpen::wfdb {
namespace {

constexpr int kSkip = 59;
constexpr int kNum = 60;
constexpr int kSub = 61;
constexpr int kChn = 62;
constexpr int kAux = 63;
constexpr int kNote = 22;

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedHeader, what);
}

int to_int(std::string_view s, const char* field) {
  int v = 0;
  if (!parse_number(s, v)) malformed(std::string("bad ") + field + " '" + std::string(s) + "'");
  return v;
}

double to_double(std::string_view s, const char* field) {
  double v = 0.0;
  if (!parse_number(s, v) || !std::isfinite(v)) {
    malformed(std::string("bad ") + field + " '" + std::string(s) + "'");
  }
  return v;
}

// "<gain>[(<baseline>)][/<units>]"
void parse_gain_field(std::string_view field, SignalSpec& sig, bool& has_baseline) {
  std::string_view gain = field;
  if (auto slash = field.find('/'); slash != std::string_view::npos) {
    sig.units = std::string(field.substr(slash + 1));
    gain = field.substr(0, slash);
  }
  if (auto open = gain.find('('); open != std::string_view::npos) {
    auto close = gain.find(')', open);
    if (close == std::string_view::npos) malformed("unterminated baseline in gain field");
    sig.baseline = to_int(gain.substr(open + 1, close - open - 1), "baseline");
    has_baseline = true;
    gain = gain.substr(0, open);
  }
  sig.adc_gain = to_double(gain, "adc gain");
  if (sig.adc_gain == 0.0) sig.adc_gain = 200.0;  // WFDB default for an unset gain
}

int sign_extend_12(int v) { return (v & 0x800) ? v - 0x1000 : v; }

}  // namespace

RecordHeader parse_header(std::string_view text) {
  std::vector<std::string> lines;
  RecordHeader h;
  {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == '#') {
        h.comments.push_back(line.substr(first + 1));
        continue;
      }
      lines.push_back(line);
    }
  }
  if (lines.empty()) malformed("empty header");

  const auto rec = split_ws(lines[0]);
  if (rec.size() < 2) malformed("record line needs a name and a signal count");
  if (rec[0].find('/') != std::string::npos) malformed("multi-segment records are not supported");
  h.record_name = rec[0];
  h.n_signals = to_int(rec[1], "signal count");
  if (h.n_signals < 1) malformed("record has no signals");
  h.sample_rate = 250.0;
  if (rec.size() > 2) {
    std::string_view fs = rec[2];
    fs = fs.substr(0, std::min(fs.find('/'), fs.find('(')));
    h.sample_rate = to_double(fs, "sampling frequency");
  }
  if (!(h.sample_rate > 0.0)) malformed("sampling frequency must be positive");
  if (rec.size() < 4) malformed("record line lacks a sample count");
  long long n = 0;
  if (!parse_number(std::string_view(rec[3]), n) || n <= 0) malformed("bad sample count");
  h.n_samples = static_cast<std::size_t>(n);

  if (static_cast<int>(lines.size()) - 1 < h.n_signals) malformed("missing signal specification lines");
  for (int i = 0; i < h.n_signals; ++i) {
    const auto tok = split_ws(lines[1 + i]);
    if (tok.size() < 2) malformed("signal line needs a file name and a format");
    SignalSpec sig;
    sig.file_name = tok[0];
    std::string_view fmt = tok[1];
    fmt = fmt.substr(0, fmt.find_first_of("x:+"));
    sig.format = to_int(fmt, "storage format");
    if (sig.format != 212) {
      throw Error(ErrorCode::UnsupportedFormat,
                  "signal " + std::to_string(i) + " uses format " + std::to_string(sig.format));
    }
    bool has_baseline = false;
    if (tok.size() > 2) parse_gain_field(tok[2], sig, has_baseline);
    if (tok.size() > 3) sig.adc_resolution = to_int(tok[3], "adc resolution");
    if (tok.size() > 4) sig.adc_zero = to_int(tok[4], "adc zero");
    if (!has_baseline) sig.baseline = sig.adc_zero;
    if (tok.size() > 5) sig.initial_value = to_int(tok[5], "initial value");
    if (tok.size() > 6) sig.checksum = to_int(tok[6], "checksum");
    // tok[7] is the block size; the description is the remainder of the line.
    if (tok.size() > 8) {
      std::string desc = tok[8];
      for (std::size_t k = 9; k < tok.size(); ++k) desc += " " + tok[k];
      sig.description = desc;
    }
    h.signals.push_back(std::move(sig));
  }
  return h;
}

Signals212 parse_212(std::span<const std::uint8_t> bytes, int n_signals) {
  if (n_signals < 1) throw Error(ErrorCode::InvalidArgument, "n_signals must be >= 1");
  Signals212 out;
  out.channels.resize(static_cast<std::size_t>(n_signals));
  const std::size_t groups = bytes.size() / 3;
  out.truncated = bytes.size() % 3 != 0;
  for (auto& ch : out.channels) ch.reserve(groups * 2 / static_cast<std::size_t>(n_signals) + 1);
  std::size_t k = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const int b0 = bytes[3 * g];
    const int b1 = bytes[3 * g + 1];
    const int b2 = bytes[3 * g + 2];
    out.channels[k++ % n_signals].push_back(sign_extend_12(((b1 & 0x0F) << 8) | b0));
    out.channels[k++ % n_signals].push_back(sign_extend_12(((b1 & 0xF0) << 4) | b2));
  }
  // A frame split across the last triplet leaves channels uneven; drop it.
  const auto shortest = std::min_element(out.channels.begin(), out.channels.end(),
                                         [](const auto& a, const auto& b) { return a.size() < b.size(); })
                            ->size();
  for (auto& ch : out.channels) ch.resize(shortest);
  return out;
}

std::vector<std::uint8_t> encode_212(const std::vector<std::vector<int>>& channels) {
  if (channels.empty()) return {};
  const std::size_t n = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != n) throw Error(ErrorCode::InvalidArgument, "channels differ in length");
  }
  std::vector<int> flat;
  flat.reserve(n * channels.size() + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& ch : channels) {
      if (ch[i] < -2048 || ch[i] > 2047) {
        throw Error(ErrorCode::InvalidArgument, "sample outside the 12-bit range");
      }
      flat.push_back(ch[i]);
    }
  }
  if (flat.size() % 2) flat.push_back(0);
  std::vector<std::uint8_t> out;
  out.reserve(flat.size() / 2 * 3);
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    const unsigned s1 = static_cast<unsigned>(flat[i]) & 0xFFF;
    const unsigned s2 = static_cast<unsigned>(flat[i + 1]) & 0xFFF;
    out.push_back(static_cast<std::uint8_t>(s1 & 0xFF));
    out.push_back(static_cast<std::uint8_t>(((s1 >> 8) & 0x0F) | ((s2 >> 4) & 0xF0)));
    out.push_back(static_cast<std::uint8_t>(s2 & 0xFF));
  }
  return out;
}

std::vector<Annotation> parse_annotation_stream(std::span<const std::uint8_t> bytes) {
  std::vector<Annotation> out;
  long long time = 0;
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw Error(ErrorCode::MalformedAnnotation, std::string("truncated ") + what + " at byte " +
                                                      std::to_string(pos));
    }
  };
  while (pos < bytes.size()) {
    need(2, "annotation word");
    const unsigned word = bytes[pos] | (static_cast<unsigned>(bytes[pos + 1]) << 8);
    pos += 2;
    const int code = static_cast<int>(word >> 10);
    const int interval = static_cast<int>(word & 0x3FF);
    switch (code) {
      case 0:
        // Code 0 carries time only (the writer emits one after a SKIP).
        if (interval == 0) return out;  // EOF
        time += interval;
        if (time < 0) throw Error(ErrorCode::MalformedAnnotation, "negative annotation time");
        break;
      case kSkip: {
        need(4, "SKIP interval");
        const std::uint32_t raw = (static_cast<std::uint32_t>(bytes[pos + 1]) << 24) |
                                  (static_cast<std::uint32_t>(bytes[pos]) << 16) |
                                  (static_cast<std::uint32_t>(bytes[pos + 3]) << 8) |
                                  static_cast<std::uint32_t>(bytes[pos + 2]);
        pos += 4;
        time += static_cast<std::int32_t>(raw);
        break;
      }
      case kNum:
      case kSub:
      case kChn:
        if (out.empty()) break;  // qualifies nothing yet
        if (code == kNum) out.back().num = interval;
        if (code == kSub) out.back().subtype = interval;
        if (code == kChn) out.back().chan = interval;
        break;
      case kAux: {
        const std::size_t padded = static_cast<std::size_t>(interval) + (interval & 1);
        need(padded, "AUX payload");
        if (!out.empty()) {
          auto& last = out.back();
          last.aux.assign(reinterpret_cast<const char*>(bytes.data() + pos), static_cast<std::size_t>(interval));
          // "## ..." notes at sample 0 define the file (time resolution,
          // custom labels) and are not annotations.
          if (last.code == kNote && last.sample == 0 && last.aux.starts_with("##")) out.pop_back();
        }
        pos += padded;
        break;
      }
      default:
        time += interval;
        if (time < 0) throw Error(ErrorCode::MalformedAnnotation, "negative annotation time");
        out.push_back(Annotation{static_cast<std::size_t>(time), code, 0, 0, 0, {}});
        break;
    }
  }
  return out;
}

bool is_beat_code(int code) noexcept {
  return (code >= 1 && code <= 13) || code == 25 || code == 34 || code == 35 || code == 38 ||
         code == 41;
}

std::vector<std::size_t> parse_annotations(std::span<const std::uint8_t> bytes) {
  std::vector<std::size_t> beats;
  for (const auto& a : parse_annotation_stream(bytes)) {
    if (!is_beat_code(a.code)) continue;
    if (!beats.empty() && a.sample <= beats.back()) {
      throw Error(ErrorCode::MalformedAnnotation,
                  "beat times not strictly increasing at sample " + std::to_string(a.sample));
    }
    beats.push_back(a.sample);
  }
  return beats;
}

EcgRecord load_record(const RecordHeader& header, std::span<const std::uint8_t> signal_bytes,
                      std::span<const std::uint8_t> annotation_bytes, std::string_view channel) {
  const auto wanted = channel.empty() ? kPreferredChannel : channel;
  auto it = std::find_if(header.signals.begin(), header.signals.end(),
                         [&](const SignalSpec& s) { return s.description == wanted; });
  if (it == header.signals.end() && channel.empty()) it = header.signals.begin();
  if (it == header.signals.end()) {
    throw Error(ErrorCode::ChannelNotFound,
                "no signal named '" + std::string(channel) + "' in " + header.record_name);
  }
  auto signals = parse_212(signal_bytes, header.n_signals);
  auto& chosen = signals.channels[static_cast<std::size_t>(it - header.signals.begin())];
  if (chosen.size() < header.n_samples) {
    throw Error(ErrorCode::MalformedHeader, "signal file holds " + std::to_string(chosen.size()) +
                                                " samples, header declares " +
                                                std::to_string(header.n_samples));
  }
  chosen.resize(header.n_samples);

  EcgRecord rec;
  rec.name = header.record_name;
  rec.sample_rate = header.sample_rate;
  rec.samples = std::move(chosen);
  rec.peak_indices = parse_annotations(annotation_bytes);
  if (!rec.peak_indices.empty() && rec.peak_indices.back() >= rec.samples.size()) {
    throw Error(ErrorCode::MalformedAnnotation, "beat annotation beyond the end of the signal");
  }
  return rec;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

EcgRecord read_record(const std::string& dir, const std::string& name, std::string_view channel,
                      const std::string& annotator) {
  const std::string base = dir.empty() ? name : dir + "/" + name;
  const auto hea = read_file_bytes(base + ".hea");
  const auto header = parse_header(std::string_view(reinterpret_cast<const char*>(hea.data()), hea.size()));
  for (const auto& s : header.signals) {
    if (s.file_name != header.signals.front().file_name) {
      throw Error(ErrorCode::UnsupportedFormat, "signals split across several files");
    }
  }
  const auto dat = read_file_bytes((dir.empty() ? "" : dir + "/") + header.signals.front().file_name);
  const auto atr = read_file_bytes(base + "." + annotator);
  return load_record(header, dat, atr, channel);
}

}  // namespace sensorpen::wfdb
