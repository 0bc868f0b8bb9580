#include <gtest/gtest.h>

#include <random>

#include "sensorpen/response_parser.hpp"
#include "test_support.hpp"

namespace sp = sensorpen;
using namespace sensorpen::parse;
using sensorpen::sensor::Environment;
using sensorpen::sensor::Motion;

TEST(ParseActivity, AppendixStyleAnswer) {
  const auto p = parse_activity(
      "Reasoning: many APs.\nSummary: The user is stationary, likely in an outdoor area near a McDonald "
      "restaurant in Singapore.\nMotion: stationary.\nEnvironment: indoors.");
  EXPECT_FALSE(p.failed);
  EXPECT_EQ(p.motion, Motion::Stationary);
  EXPECT_EQ(p.environment, Environment::Indoors);
  ASSERT_TRUE(p.summary.has_value());
  EXPECT_TRUE(p.summary->starts_with("The user is stationary"));
}

TEST(ParseActivity, FailuresAreData) {
  EXPECT_TRUE(parse_activity("Motion: unknown.\nEnvironment: indoors.").failed);
  EXPECT_TRUE(parse_activity("").failed);
  EXPECT_TRUE(parse_activity("Motion: walking.").failed);
  const auto p = parse_activity("Motion: walking.");
  EXPECT_EQ(p.motion, Motion::Walking);
  EXPECT_FALSE(p.environment.has_value());
}

TEST(ParseActivity, PrefixesCaseAndSynonyms) {
  const auto p = parse_activity("- **Motion:** Moving\n* environment: OUTDOOR\n");
  EXPECT_FALSE(p.failed);
  EXPECT_EQ(p.motion, Motion::Walking);
  EXPECT_EQ(p.environment, Environment::Outdoors);
  EXPECT_EQ(parse_activity("Motion: still\nEnvironment: indoor").motion, Motion::Stationary);
}

TEST(ParseActivity, LastOccurrenceWins) {
  const std::string skeleton = "Motion: choose one from either 'stationary' or 'walking'.\n";
  const auto p = parse_activity(skeleton + "Motion: stationary.\nEnvironment: indoors.\nMotion: walking");
  EXPECT_EQ(p.motion, Motion::Walking);
  const auto q = parse_activity("Motion: walking\nEnvironment: indoors\nMotion: unsure");
  EXPECT_TRUE(q.failed);
}

TEST(ParseActivity, CanonicalRenderingIsFixedPoint) {
  const std::vector<std::string> inputs{
      "Summary: The user is near Starbucks.\nMotion: walking\nEnvironment: outdoors",
      "Motion: stationary.\nEnvironment: indoors.",
      "Motion: unknown\nEnvironment: indoors",
      "",
      "blah\nSummary: x\n"};
  for (const auto& s : inputs) {
    const auto p = parse_activity(s);
    EXPECT_EQ(parse_activity(render_activity(p)), p) << s;
  }
}

TEST(ParseActivity, JsonRoundTrip) {
  const auto p = parse_activity("Summary: near a mall\nMotion: walking\nEnvironment: indoors");
  const auto j = activity_to_json("act-1", p);
  EXPECT_EQ(j["instance_id"], "act-1");
  EXPECT_EQ(j["motion"], "walking");
  EXPECT_EQ(j["failed"], false);
  EXPECT_EQ(activity_from_json(j), p);
  const auto f = parse_activity("nothing");
  EXPECT_EQ(activity_from_json(activity_to_json("x", f)), f);
}

TEST(ParseRpeaks, AppendixResponse) {
  const auto text = sp::testing::slurp(sp::testing::pipeline_fixtures() / "appendix_response.txt");
  const auto p = parse_rpeaks(text);
  EXPECT_FALSE(p.hallucinated);
  EXPECT_EQ(p.peaks, (std::vector<double>{1181, 1183, 1208, 1154, 1166, 1183}));
}

TEST(ParseRpeaks, Examples) {
  const auto none = parse_rpeaks("I cannot identify R-peaks in this data.");
  EXPECT_TRUE(none.hallucinated);
  EXPECT_TRUE(none.peaks.empty());
  const auto empty = parse_rpeaks("R-peaks: []");
  EXPECT_FALSE(empty.hallucinated);
  EXPECT_TRUE(empty.peaks.empty());
  EXPECT_EQ(parse_rpeaks("R-peaks: [1.5, -2, 3e2]").peaks, (std::vector<double>{1.5, -2, 300}));
  EXPECT_TRUE(parse_rpeaks("R-peaks: [R1, R2, R3]").hallucinated);
  EXPECT_TRUE(parse_rpeaks("R-peaks: [1, 2").hallucinated);
}

TEST(ParseRpeaks, LastWellFormedListAndDuplicates) {
  const auto p = parse_rpeaks("R-peaks: [R1, R2, R3]\n...\nR-peaks: [5, 5, 9]\n");
  EXPECT_EQ(p.peaks, (std::vector<double>{5, 5, 9}));
  EXPECT_EQ(parse_rpeaks("R-peaks: [1]\nR-peaks: [2, 3]").peaks, (std::vector<double>{2, 3}));
}

TEST(ParseRpeaks, TotalOnArbitraryBytesProperty) {
  std::mt19937_64 rng(1234);
  const std::string seeds[] = {"R-peaks: [", "]", ",", " ", "1", "-", ".", "e", "R-peaks:", "\n", "\0"};
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const auto n = rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 2) {
        s += static_cast<char>(rng() % 256);
      } else {
        s += seeds[rng() % std::size(seeds)];
      }
    }
    RPeakParse p;
    ASSERT_NO_THROW(p = parse_rpeaks(s));
    if (p.hallucinated) ASSERT_TRUE(p.peaks.empty());
    ASSERT_NO_THROW(parse_activity(s));
  }
}

TEST(ParseRpeaks, JsonRoundTrip) {
  const auto p = parse_rpeaks("R-peaks: [1, 2.5]");
  const auto j = rpeaks_to_json("q", p);
  EXPECT_EQ(j["hallucinated"], false);
  EXPECT_EQ(rpeaks_from_json(j), p);
}

TEST(ExtractLocation, Heuristic) {
  EXPECT_TRUE(extract_location(std::string(
                                   "The user is stationary, likely in an outdoor area near a McDonald restaurant in "
                                   "Singapore."))
                  .has_value());
  EXPECT_FALSE(extract_location(std::string("The user is walking indoors.")).has_value());
  EXPECT_FALSE(extract_location(std::nullopt).has_value());
  EXPECT_FALSE(extract_location(std::string("")).has_value());
}
