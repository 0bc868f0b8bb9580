#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "sensorpen/error.hpp"
#include "sensorpen/wfdb.hpp"
#include "test_support.hpp"

namespace sp = sensorpen;
using namespace sensorpen::wfdb;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

nlohmann::json reference_dump() {
  return nlohmann::json::parse(slurp(sp::testing::wfdb_fixtures() / "reference_dump.json"));
}

std::vector<std::uint8_t> words(const std::vector<std::uint16_t>& ws) {
  std::vector<std::uint8_t> out;
  for (auto w : ws) {
    out.push_back(static_cast<std::uint8_t>(w & 0xFF));
    out.push_back(static_cast<std::uint8_t>(w >> 8));
  }
  return out;
}

sp::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const sp::Error& e) {
    return e.code();
  }
  return sp::ErrorCode::Io;  // sentinel: nothing thrown
}

}  // namespace

TEST(Header, FirstLine) {
  const auto h = parse_header("100 2 360 650000\n100.dat 212 200 11 1024 995 -22131 0 MLII\n100.dat 212 200 11 1024 1011 20052 0 V5\n");
  EXPECT_EQ(h.record_name, "100");
  EXPECT_EQ(h.n_signals, 2);
  EXPECT_EQ(h.sample_rate, 360.0);
  EXPECT_EQ(h.n_samples, 650000u);
  ASSERT_EQ(h.signals.size(), 2u);
  EXPECT_EQ(h.signals[0].format, 212);
  EXPECT_EQ(h.signals[0].adc_gain, 200.0);
  EXPECT_EQ(h.signals[0].adc_zero, 1024);
  EXPECT_EQ(h.signals[0].initial_value, 995);
  EXPECT_EQ(h.signals[0].description, "MLII");
  EXPECT_EQ(h.signals[1].description, "V5");
}

TEST(Header, GainBaselineUnitsAndComments) {
  const auto h = parse_header("# leading comment\nrec 1 250/1 10\nrec.dat 212 200(1024)/mV 11 0 1 2 0 lead II\n# trailing\n");
  EXPECT_EQ(h.sample_rate, 250.0);
  EXPECT_EQ(h.signals[0].baseline, 1024);
  EXPECT_EQ(h.signals[0].units, "mV");
  EXPECT_EQ(h.signals[0].description, "lead II");
  EXPECT_EQ(h.comments.size(), 2u);
}

TEST(Header, Errors) {
  EXPECT_EQ(code_of([] { parse_header(""); }), sp::ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { parse_header("100 2 360 650000\n100.dat 16 200 11 1024 995 0 0 MLII\n100.dat 16 200 11 1024 995 0 0 V5\n"); }),
            sp::ErrorCode::UnsupportedFormat);
  EXPECT_EQ(code_of([] { parse_header("100 2 360 650000\n100.dat 212 200 11 1024 995 0 0 MLII\n"); }),
            sp::ErrorCode::MalformedHeader);
}

TEST(Format212, BitLayout) {
  const std::vector<std::uint8_t> a{0xE8, 0x03, 0x3F};
  const auto s = parse_212(a);
  EXPECT_EQ(s.channels[0], std::vector<int>{1000});
  EXPECT_EQ(s.channels[1], std::vector<int>{63});

  // Low nibble of the middle byte is the high half of the first sample, high
  // nibble the high half of the second.
  const std::vector<std::uint8_t> b{0x00, 0xF8, 0x00};
  const auto t = parse_212(b);
  EXPECT_EQ(t.channels[0], std::vector<int>{-2048});
  EXPECT_EQ(t.channels[1], std::vector<int>{-256});
  EXPECT_FALSE(t.truncated);
}

TEST(Format212, TrailingPartialTripletFlagged) {
  const std::vector<std::uint8_t> a{0xE8, 0x03, 0x3F, 0x01};
  const auto s = parse_212(a);
  EXPECT_TRUE(s.truncated);
  EXPECT_EQ(s.channels[0].size(), 1u);
}

TEST(Format212, RoundTripProperty) {
  std::mt19937_64 rng(212);
  std::uniform_int_distribution<int> v(-2048, 2047);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = rng() % 200;
    std::vector<std::vector<int>> ch(2, std::vector<int>(n));
    for (auto& c : ch) {
      for (auto& x : c) x = v(rng);
    }
    const auto bytes = encode_212(ch);
    ASSERT_EQ(bytes.size(), 3 * n);
    ASSERT_EQ(parse_212(bytes).channels, ch);
  }
}

TEST(Annotations, BitLayoutAndEof) {
  EXPECT_EQ(parse_annotations(words({0x0405})), std::vector<std::size_t>{5});
  EXPECT_EQ(parse_annotations(words({0x0405, 0x040A, 0x0000})), (std::vector<std::size_t>{5, 15}));
}

TEST(Annotations, DefinitionNotesAndTimeWordsAreDropped) {
  // NOTE at 0 with "## time resolution: 360", SKIP -1, code-0 word back to
  // sample 0, then a rhythm change at 0 and a beat at 126.
  const std::string note = "## time resolution: 360";
  std::vector<std::uint16_t> w{static_cast<std::uint16_t>(22 << 10),
                               static_cast<std::uint16_t>((63 << 10) | note.size())};
  for (std::size_t i = 0; i < note.size(); i += 2) {
    w.push_back(static_cast<std::uint16_t>(note[i] | ((i + 1 < note.size() ? note[i + 1] : 0) << 8)));
  }
  w.insert(w.end(), {static_cast<std::uint16_t>(59 << 10), 0xFFFF, 0xFFFF, 0x0001, static_cast<std::uint16_t>(28 << 10),
                     static_cast<std::uint16_t>((1 << 10) | 126), 0x0000});
  const auto all = parse_annotation_stream(words(w));
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].code, 28);
  EXPECT_EQ(all[0].sample, 0u);
  EXPECT_EQ(all[1].sample, 126u);
}

TEST(Annotations, SpecialCodesAreConsumed) {
  // SKIP 2000, NUM, SUB, CHN, AUX "(N" then a normal beat 3 later; a noise
  // annotation (code 14) is dropped.
  const auto bytes = words({static_cast<std::uint16_t>(59 << 10), 0x0000, 2000, static_cast<std::uint16_t>(1 << 10),
                            static_cast<std::uint16_t>((60 << 10) | 1), static_cast<std::uint16_t>((61 << 10) | 2),
                            static_cast<std::uint16_t>((62 << 10) | 1), static_cast<std::uint16_t>((63 << 10) | 2),
                            static_cast<std::uint16_t>('(' | ('N' << 8)), static_cast<std::uint16_t>((1 << 10) | 3),
                            static_cast<std::uint16_t>((14 << 10) | 4), 0x0000});
  const auto all = parse_annotation_stream(bytes);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].sample, 2000u);
  EXPECT_EQ(all[0].num, 1);
  EXPECT_EQ(all[0].subtype, 2);
  EXPECT_EQ(all[0].chan, 1);
  EXPECT_EQ(all[0].aux, "(N");
  EXPECT_EQ(all[1].sample, 2003u);
  EXPECT_EQ(all[2].code, 14);
  EXPECT_EQ(parse_annotations(bytes), (std::vector<std::size_t>{2000, 2003}));
}

TEST(Annotations, TruncationAndDuplicates) {
  const auto truncated_aux = words({static_cast<std::uint16_t>((63 << 10) | 6), 0x4141});
  EXPECT_EQ(code_of([&] { parse_annotations(truncated_aux); }), sp::ErrorCode::MalformedAnnotation);
  const auto truncated_skip = words({static_cast<std::uint16_t>(59 << 10), 0x0000});
  EXPECT_EQ(code_of([&] { parse_annotations(truncated_skip); }), sp::ErrorCode::MalformedAnnotation);
  const auto duplicate = words({0x0405, 0x0400});
  EXPECT_EQ(code_of([&] { parse_annotations(duplicate); }), sp::ErrorCode::MalformedAnnotation);
}

TEST(BeatCodes, CanonicalSet) {
  for (int c = 1; c <= 13; ++c) EXPECT_TRUE(is_beat_code(c)) << c;
  for (int c : {25, 34, 35, 38, 41}) EXPECT_TRUE(is_beat_code(c)) << c;
  for (int c : {0, 14, 16, 22, 28, 36, 37}) EXPECT_FALSE(is_beat_code(c)) << c;
}

// Every surrogate record against the dump written by the wfdb Python package.
TEST(ReferenceDump, SurrogateRecordsMatch) {
  for (const auto& ref : reference_dump()) {
    const auto name = ref["record"].get<std::string>();
    SCOPED_TRACE(name);
    const auto dir = sp::testing::wfdb_fixtures();
    const auto h = parse_header(slurp(dir / (name + ".hea")));
    EXPECT_EQ(h.n_signals, ref["n_signals"].get<int>());
    EXPECT_EQ(h.sample_rate, ref["fs"].get<double>());
    EXPECT_EQ(h.n_samples, ref["n_samples"].get<std::size_t>());
    for (int c = 0; c < h.n_signals; ++c) {
      const auto& rs = ref["signals"][c];
      EXPECT_EQ(h.signals[c].format, rs["format"].get<int>());
      EXPECT_EQ(h.signals[c].adc_gain, rs["adc_gain"].get<double>());
      EXPECT_EQ(h.signals[c].adc_zero, rs["adc_zero"].get<int>());
      EXPECT_EQ(h.signals[c].description, rs["description"].get<std::string>());
    }
    const auto sig = parse_212(read_file_bytes((dir / (name + ".dat")).string()), h.n_signals);
    for (int c = 0; c < h.n_signals; ++c) {
      ASSERT_EQ(sig.channels[c].size(), h.n_samples);
      const auto first = ref["first_samples"][c].get<std::vector<int>>();
      EXPECT_TRUE(std::equal(first.begin(), first.end(), sig.channels[c].begin()));
      long long total = 0;
      for (int v : sig.channels[c]) total += v;
      EXPECT_EQ(total, ref["total_per_channel"][c].get<long long>());
    }
    const auto ann_bytes = read_file_bytes((dir / (name + ".atr")).string());
    EXPECT_EQ(parse_annotation_stream(ann_bytes).size(), ref["annotation_count"].get<std::size_t>());
    EXPECT_EQ(parse_annotations(ann_bytes), ref["beat_times"].get<std::vector<std::size_t>>());
  }
}

TEST(LoadRecord, ChannelSelection) {
  const auto dir = sp::testing::wfdb_fixtures().string();
  const auto mlii = read_record(dir, "sur100");
  const auto v5 = read_record(dir, "sur100", "V5");
  const auto ref = reference_dump()[0];
  EXPECT_EQ(mlii.samples.front(), ref["first_samples"][0][0].get<int>());
  EXPECT_EQ(v5.samples.front(), ref["first_samples"][1][0].get<int>());
  EXPECT_EQ(mlii.sample_rate, 360.0);
  EXPECT_EQ(code_of([&] { read_record(dir, "sur100", "V9"); }), sp::ErrorCode::ChannelNotFound);
  for (std::size_t i = 1; i < mlii.peak_indices.size(); ++i) ASSERT_LT(mlii.peak_indices[i - 1], mlii.peak_indices[i]);
  EXPECT_LT(mlii.peak_indices.back(), mlii.samples.size());
}

TEST(LoadRecord, DefaultChannelFallsBackToFirstSignal) {
  const auto h = parse_header("102 2 360 2\n102.dat 212 200 11 1024 0 0 0 V5\n102.dat 212 200 11 1024 0 0 0 V2\n");
  const auto bytes = encode_212({{10, 11}, {20, 21}});
  const auto r = load_record(h, bytes, {});
  EXPECT_EQ(r.samples, (std::vector<int>{10, 11}));
  EXPECT_EQ(load_record(h, bytes, {}, "V2").samples, (std::vector<int>{20, 21}));
  EXPECT_EQ(code_of([&] { load_record(h, bytes, {}, "MLII"); }), sp::ErrorCode::ChannelNotFound);
}
