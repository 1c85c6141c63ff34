#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "svgtok/bindings.hpp"
#include "svgtok/cli.hpp"

using namespace svgtok;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "svgtok");
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("svgtok_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "in");
    const auto& corpus = testing_support::icon_corpus();
    for (std::size_t i = 0; i < 12; ++i)
      write_file_atomic(dir_ / "in" / corpus[i].path.filename(), corpus[i].text);
    sample_ = corpus[0];
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
  testing_support::CorpusFile sample_;
};

}  // namespace

TEST_F(Cli, BuildVocab) {
  auto r = run_cli({"build-vocab", "-o", p("vocab.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "2450 tokens (795 absolute, 1589 relative, 42 structure, 20 command, 4 flag)\n");
  EXPECT_EQ(atomic_vocab_from_json(read_file(p("vocab.json"))).size(), 2450u);
  auto small = run_cli({"--canvas", "100", "--tolerance", "0", "build-vocab"});
  EXPECT_EQ(small.out.substr(0, 10), "368 tokens");
}

TEST_F(Cli, EncodeDecodeRoundTrip) {
  const std::string in = p("in/" + sample_.path.filename().string());
  for (std::string format : {"text", "ids"}) {
    ASSERT_EQ(run_cli({"encode", in, "-o", p("tok." + format), "--format", format}).code, 0);
    auto r = run_cli({"decode", p("tok." + format), "-o", p("back_" + format + ".svg")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(p("back_" + format + ".svg")), serialize_svg(preprocess(sample_.text))) << format;
  }
  ASSERT_EQ(run_cli({"preprocess", in, "-o", p("pre.svg")}).code, 0);
  EXPECT_EQ(read_file(p("pre.svg")), serialize_svg(preprocess(sample_.text)));
}

TEST_F(Cli, SegmentPipeline) {
  auto t = run_cli({"train-segments", p("in"), "-o", p("seg.json"), "--merges", "40"});
  ASSERT_EQ(t.code, 0) << t.err;
  const AtomicVocab vocab(784, 10);
  auto sv = segment_vocab_from_json(read_file(p("seg.json")), vocab);
  EXPECT_LE(sv.merges().size(), 40u);
  EXPECT_GT(sv.merges().size(), 0u);

  ASSERT_EQ(run_cli({"encode", p("in"), "-o", p("all.jsonl"), "--segments", p("seg.json")}).code, 0);
  std::istringstream lines(read_file(p("all.jsonl")));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 12u);

  auto d = run_cli({"decode", p("all.jsonl"), "-o", p("out"), "--segments", p("seg.json")});
  ASSERT_EQ(d.code, 0) << d.err;
  for (const auto& f : collect_inputs({p("in")})) {
    // encoding with segments cleans first, so compare against the cleaned document
    auto cleaned = clean_atomic(encode_atomic(preprocess(read_file(f.path)), vocab), vocab).first;
    EXPECT_EQ(read_file(p("out/" + f.name)), serialize_svg(decode_atomic(cleaned, vocab))) << f.name;
  }
}

TEST_F(Cli, StatsAndPartition) {
  ASSERT_EQ(run_cli({"train-segments", p("in"), "-o", p("seg.json"), "--merges", "20"}).code, 0);
  auto s = run_cli({"stats", p("in"), "--segments", p("seg.json"), "--json", "-o", p("stats.json")});
  ASSERT_EQ(s.code, 0) << s.err;
  auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["compression"]["n_samples"], 12);
  EXPECT_GT(j["compression"]["ratio_at_to_st"].get<double>(), 1.0);
  EXPECT_EQ(j["compression"]["counter"], "pretok-qwen2-ascii");
  EXPECT_TRUE(j.contains("segments"));
  EXPECT_EQ(nlohmann::json::parse(read_file(p("stats.json"))), j);
  auto chars = run_cli({"stats", p("in"), "--counter", "chars"});
  ASSERT_EQ(chars.code, 0);
  EXPECT_NE(chars.out.find("baseline counter      chars"), std::string::npos);

  auto part = run_cli({"partition", p("in"), "-o", p("part.json")});
  ASSERT_EQ(part.code, 0) << part.err;
  EXPECT_NE(part.out.find("partitioned 12 samples, skipped 0"), std::string::npos);
  auto pj = nlohmann::json::parse(read_file(p("part.json")));
  EXPECT_EQ(pj["samples"].size(), 12u);
}

TEST_F(Cli, InitEmbeddings) {
  EmbeddingTable base(6, 16);
  for (std::size_t i = 0; i < base.data.size(); ++i) base.data[i] = static_cast<float>(i % 7) / 7.0f;
  write_file_atomic(p("base.bin"), matrix_to_binary(base));
  write_file_atomic(p("words.txt"), "path\nline\nmove\ncurve\ncoordinate\nsvg\n");
  // every token needs at least one description word; a manifest covers the rest
  nlohmann::json manifest = nlohmann::json::object();
  const AtomicVocab vocab(784, 10);
  for (TokenId id = 0; id < vocab.size(); ++id) manifest[vocab.token(id)] = {id % 6};
  write_file_atomic(p("desc.json"), manifest.dump());
  auto r = run_cli({"--seed", "3", "init-embeddings", "--base", p("base.bin"), "--words", p("words.txt"),
                    "--descriptions", p("desc.json"), "-o", p("emb.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = matrix_from_bytes(read_file(p("emb.bin")));
  EXPECT_EQ(m.rows, 2450u);
  EXPECT_EQ(m.cols, 16u);
  auto again = run_cli({"--seed", "3", "init-embeddings", "--base", p("base.bin"), "--descriptions", p("desc.json"),
                        "-o", p("emb2.bin")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(read_file(p("emb2.bin")), read_file(p("emb.bin")));
  EXPECT_TRUE(fs::exists(p("emb.bin.json")));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"encode", p("in")}).code, 2);  // missing -o
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  auto missing = run_cli({"encode", p("nope.svg"), "-o", p("x.txt")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_FALSE(missing.err.empty());
  write_file_atomic(p("bad.txt"), "<svg><cmd_l></svg>\n");
  EXPECT_EQ(run_cli({"decode", p("bad.txt"), "-o", p("bad.svg")}).code, 1);
  EXPECT_FALSE(fs::exists(p("bad.svg")));
}

TEST_F(Cli, BatchSkipsBadFiles) {
  write_file_atomic(p("in/broken.svg"), "<svg><g></svg>");
  auto r = run_cli({"preprocess", p("in"), "-o", p("pre")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("preprocessed 12 samples, skipped 1"), std::string::npos);
  EXPECT_NE(r.err.find("broken.svg"), std::string::npos);
}

TEST_F(Cli, BindingsMatchTheCli) {
  ASSERT_EQ(bindings::bound_train({p("in")}, 30, 2, p("seg.json")), p("seg.json"));
  ASSERT_EQ(run_cli({"encode", p("in"), "-o", p("all.jsonl"), "--segments", p("seg.json")}).code, 0);
  bindings::BoundTokenizer tok({}, p("seg.json"));
  std::istringstream lines(read_file(p("all.jsonl")));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    auto tokens = tok.bound_encode(read_file(p("in/" + j["source"].get<std::string>())));
    std::string joined;
    for (const auto& t : tokens) joined += t;
    EXPECT_EQ(joined, j["tokens"].get<std::string>());
    ++n;
  }
  EXPECT_EQ(n, 12u);

  bindings::BoundTokenizer atomic;
  auto tokens = atomic.bound_encode(sample_.text);
  EXPECT_EQ(atomic.bound_decode(tokens), serialize_svg(preprocess(sample_.text)));
  try {
    atomic.bound_decode({"<svg>", "<path>", "<cmd_l>", "</path>", "</svg>"});
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.name(), "ArityViolation");
  }
  EXPECT_EQ(bindings::version(), "1.0.0");
  EXPECT_THROW(bindings::bound_train({p("missing")}, 5, 2, p("x.json")), Error);
}
