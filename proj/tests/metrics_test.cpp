#include <gtest/gtest.h>

#include "support.hpp"

using namespace svgtok;

namespace {

const AtomicVocab& vocab() {
  static const AtomicVocab v(784, 10);
  return v;
}

SvgDocument doc_with(std::string_view d) {
  return parse_svg(R"(<svg viewBox="0 0 784 784"><path d=")" + std::string(d) + R"("/></svg>)");
}

}  // namespace

TEST(Pretokens, Splits) {
  EXPECT_EQ(count_pretokens(""), 0u);
  EXPECT_EQ(count_pretokens("hello world"), 2u);
  // digits are single pre-tokens
  EXPECT_EQ(count_pretokens("M 12 34"), 7u);
  EXPECT_EQ(count_pretokens("<path d="), 3u);
  EXPECT_EQ(count_pretokens("a\n\nb"), 3u);
  EXPECT_EQ(count_pretokens("x   y"), 3u);
  EXPECT_EQ(count_pretokens("\"/>"), 1u);
  EXPECT_EQ(char_counter().count("abc d"), 5u);
}

TEST(Compression, Arithmetic) {
  SampleMetrics m;
  m.samples = 2;
  m.raw_tokens = 200;
  m.atomic_tokens = 80;
  m.segment_tokens = 40;
  m.paths = 3;
  m.commands = 11;
  auto r = compression_report(m, "x");
  EXPECT_DOUBLE_EQ(r.avg_raw_tokens, 100);
  EXPECT_DOUBLE_EQ(r.ratio_raw_to_at, 2.5);
  EXPECT_DOUBLE_EQ(r.ratio_at_to_st, 2.0);
  EXPECT_DOUBLE_EQ(r.paths_avg, 1.5);
  EXPECT_DOUBLE_EQ(r.cmds_avg, 5.5);
  EXPECT_THROW(compression_report(SampleMetrics{}, "x"), Error);
}

TEST(Compression, NoMergesMeansNoGain) {
  std::vector<SvgDocument> docs;
  for (std::size_t i = 0; i < 20; ++i) docs.push_back(preprocess(testing_support::icon_corpus()[i].text));
  SegmentVocab empty(vocab(), {0, 2});
  auto r = compression_report(docs, vocab(), &empty, pretokenizer_counter());
  EXPECT_DOUBLE_EQ(r.ratio_at_to_st, 1.0);
  auto r2 = compression_report(docs, vocab(), nullptr, pretokenizer_counter());
  EXPECT_DOUBLE_EQ(r2.ratio_at_to_st, 1.0);
  EXPECT_EQ(r.n_samples, 20u);
  EXPECT_GT(r.ratio_raw_to_at, 1.0);
}

TEST(Compression, SampleCountsByHand) {
  auto doc = doc_with("M 10 10 l 0 0 l 5 5");
  auto m = measure_sample(doc, vocab(), nullptr, char_counter());
  // <svg> Lit <path> M P P l d d </path> </svg>, with the literal counted in chars
  EXPECT_EQ(m.atomic_tokens, 10u + std::string("viewBox=0 0 784 784").size());
  EXPECT_EQ(m.raw_tokens, serialize_svg(doc).size());
  EXPECT_EQ(m.commands, 2u);
  EXPECT_EQ(m.paths, 1u);
  EXPECT_EQ(m.noise.total_removed(), 1u);
}

TEST(Partition, Boundaries) {
  EXPECT_EQ(assign_stage(100), Stage::S1);
  EXPECT_EQ(assign_stage(400), Stage::S2);
  EXPECT_EQ(assign_stage(800), Stage::S3);
  EXPECT_EQ(assign_stage(1200), Stage::Discard);
  EXPECT_EQ(assign_stage(29), Stage::Discard);
  EXPECT_EQ(assign_stage(30), Stage::S1);
  EXPECT_EQ(assign_stage(326), Stage::S2);
  EXPECT_EQ(assign_stage(605), Stage::S3);
  EXPECT_EQ(assign_stage(1000), Stage::S3);
  EXPECT_EQ(assign_stage(1001), Stage::Discard);
  StageBoundaries custom{{1, 2, 3, 4}};
  EXPECT_EQ(assign_stage(0, custom), Stage::Discard);
  EXPECT_EQ(assign_stage(2, custom), Stage::S2);

  auto b = partition_by_length({100, 400, 800, 1200, 5});
  EXPECT_EQ(b.counts, (std::array<std::size_t, 4>{1, 1, 1, 2}));
  auto j = to_json(b);
  EXPECT_EQ(j["counts"]["discard"], 2);
  EXPECT_EQ(j["boundaries"][1], 326);
}

TEST(Partition, UsesCleanedLength) {
  // the trailing zero move (three items) is dropped before measuring
  std::string d = "M 1 1";
  for (int i = 0; i < 8; ++i) d += " l 1 1";
  auto clean = doc_with(d);
  auto noisy = doc_with(d + " l 0 0");
  StageBoundaries sb{{0, 33, 1000, 1000}};
  auto b = partition_by_length(std::vector<SvgDocument>{clean, noisy}, vocab(), sb);
  const std::size_t len = 8 + 24;  // structure, literal and M, then eight l segments
  EXPECT_EQ(stage_length(clean_atomic(encode_atomic(clean, vocab()), vocab()).first), len);
  // the raw noisy sequence would be 35 items long
  EXPECT_EQ(count_tokens(encode_atomic(noisy, vocab())), len + 3);
  EXPECT_EQ(b.assignment[0], Stage::S1);
  EXPECT_EQ(b.assignment[1], Stage::S1);
}

TEST(Cleaning, ReportOnInjectedNoise) {
  std::vector<SvgDocument> docs;
  for (int i = 0; i < 4; ++i) docs.push_back(doc_with("M 10 10 l 5 5 l 0 0 l 5 5"));
  auto r = cleaning_report(docs, vocab());
  EXPECT_EQ(r.samples, 4u);
  EXPECT_EQ(r.removed_per_command, (std::map<char, double>{{'l', 1.0}}));
  EXPECT_DOUBLE_EQ(r.removed_per_sample, 1.0);
  EXPECT_DOUBLE_EQ(r.redundancy_mass.at("zero_move_command"), 1.0);
  EXPECT_DOUBLE_EQ(r.redundancy_mass.at("zero_delta_pair"), 0.0);
  auto j = to_json(r);
  EXPECT_EQ(j["removed_per_command"]["l"], 1.0);
}

TEST(Cleaning, CleanCorpusReportsNothing) {
  std::vector<SvgDocument> docs{doc_with("M 10 10 l 5 5 h 3 z"), doc_with("M 1 1 c 1 2 3 4 5 6")};
  auto r = cleaning_report(docs, vocab());
  EXPECT_TRUE(r.removed_per_command.empty());
  EXPECT_EQ(r.removed_per_sample, 0.0);
  for (auto& [name, mass] : r.redundancy_mass) EXPECT_EQ(mass, 0.0) << name;
}

TEST(Output, JsonAndTable) {
  SampleMetrics m;
  m.samples = 1;
  m.raw_tokens = 30;
  m.atomic_tokens = 10;
  m.segment_tokens = 5;
  auto r = compression_report(m, "pretok");
  auto j = to_json(r);
  EXPECT_EQ(j["counter"], "pretok");
  EXPECT_EQ(j["ratio_raw_to_at"], 3.0);
  EXPECT_NE(format_table(r).find("raw -> AT             3.000x"), std::string::npos);
}
