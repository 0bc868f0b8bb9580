#pragma once

// Reader for MIT-BIH style WFDB records: text header, format-212 signal file
// and MIT binary annotation file.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sensorpen::wfdb {

struct SignalSpec {
  std::string file_name;
  int format = 212;
  double adc_gain = 200.0;  // units per mV
  int baseline = 0;
  std::string units = "mV";
  int adc_resolution = 12;
  int adc_zero = 0;
  int initial_value = 0;
  int checksum = 0;
  std::string description;
};

struct RecordHeader {
  std::string record_name;
  int n_signals = 0;
  double sample_rate = 0.0;
  std::size_t n_samples = 0;
  std::vector<SignalSpec> signals;
  std::vector<std::string> comments;
};

// Throws MalformedHeader or UnsupportedFormat (any signal not stored as 212).
RecordHeader parse_header(std::string_view text);

struct Signals212 {
  std::vector<std::vector<int>> channels;
  bool truncated = false;  // a trailing partial byte triplet was dropped
};

// De-interleaves packed 12-bit samples into `n_signals` channels.
Signals212 parse_212(std::span<const std::uint8_t> bytes, int n_signals = 2);

// Inverse of parse_212 for equal-length channels of 12-bit two's-complement
// values. An odd total sample count is padded with a zero sample.
std::vector<std::uint8_t> encode_212(const std::vector<std::vector<int>>& channels);

struct Annotation {
  std::size_t sample = 0;
  int code = 0;
  int subtype = 0;
  int chan = 0;
  int num = 0;
  std::string aux;
};

// Full annotation stream, pseudo-codes (SKIP, NUM, SUB, CHN, AUX) folded
// into the annotations they qualify. Time-only code-0 words and "##"
// definition notes at sample 0 are dropped. Throws MalformedAnnotation.
std::vector<Annotation> parse_annotation_stream(std::span<const std::uint8_t> bytes);

// True for the codes treated as beats (QRS-bearing annotations).
bool is_beat_code(int code) noexcept;

// Strictly increasing sample times of beat annotations. Two beats at the
// same time raise MalformedAnnotation.
std::vector<std::size_t> parse_annotations(std::span<const std::uint8_t> bytes);

struct EcgRecord {
  std::string name;
  std::vector<int> samples;  // ADC units, one channel
  double sample_rate = 0.0;
  std::vector<std::size_t> peak_indices;
  std::size_t source_stride = 1;  // multiplier from sample index to source-rate index
};

// An empty channel name picks the preferred lead when present, otherwise the
// first signal (records 102 and 104 carry no MLII lead).
inline constexpr std::string_view kPreferredChannel = "MLII";
inline constexpr std::string_view kDefaultChannel = "";

// Throws ChannelNotFound when no signal description equals `channel`, and
// MalformedHeader when the signal file holds fewer samples than declared.
EcgRecord load_record(const RecordHeader& header, std::span<const std::uint8_t> signal_bytes,
                      std::span<const std::uint8_t> annotation_bytes,
                      std::string_view channel = kDefaultChannel);

// Reads <dir>/<name>.hea, the signal file named in the header and
// <dir>/<name>.<annotator>.
EcgRecord read_record(const std::string& dir, const std::string& name,
                      std::string_view channel = kDefaultChannel,
                      const std::string& annotator = "atr");

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace sensorpen::wfdb
