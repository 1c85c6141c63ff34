#pragma once

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "svgtok/svgtok.hpp"

namespace svgtok::cli {

inline constexpr std::string_view kVersion = "1.0.0";

struct Options {
  // shared
  int canvas = 784;
  int tolerance = 10;
  std::string vocab_path;
  std::string segments_path;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  bool dark_background = false;
  std::vector<std::string> inputs;
  std::string output;
  // per command
  std::size_t merges = 500;
  std::uint64_t min_freq = 2;
  std::string format = "text";
  bool clean = false;
  std::string counter = "pretok";
  bool json = false;
  std::string base_path, words_path, descriptions_path;
  HmnParams hmn;
};

namespace detail {

inline std::string describe(const std::exception& e) { return e.what(); }

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  AtomicVocab vocab() const {
    if (!o_.vocab_path.empty()) return atomic_vocab_from_json(read_file(o_.vocab_path));
    return AtomicVocab(o_.canvas, o_.tolerance);
  }

  std::optional<SegmentVocab> segments(const AtomicVocab& vocab) const {
    if (o_.segments_path.empty()) return std::nullopt;
    return segment_vocab_from_json(read_file(o_.segments_path), vocab);
  }

  PreprocessConfig preprocess_config() const {
    PreprocessConfig cfg;
    cfg.canvas = vocab_canvas_;
    cfg.overflow_tolerance = vocab_tolerance_;
    cfg.dark_background = o_.dark_background;
    return cfg;
  }

  void bind(const AtomicVocab& v) {
    vocab_canvas_ = v.canvas();
    vocab_tolerance_ = v.tolerance();
  }

  /// Preprocessed, encoded and (optionally) cleaned atomic sequence.
  TokenSeq atomic_of(const fs::path& path, const AtomicVocab& vocab, bool clean) const {
    SvgDocument doc = preprocess(read_file(path), preprocess_config());
    TokenSeq seq = ::svgtok::detail::run_stage("encode", [&] { return encode_atomic(doc, vocab); });
    return clean ? clean_atomic(seq, vocab).first : seq;
  }

  /// Runs `work` over the inputs in chunks on o_.jobs threads and hands the
  /// results to `sink` in input order. Failures are reported and skipped.
  /// Returns the number of skipped inputs.
  template <typename R, typename Work, typename Sink>
  std::size_t batch(const std::vector<InputFile>& files, Work work, Sink sink) {
    const std::size_t chunk = std::max<std::size_t>(16, 4 * o_.jobs);
    std::size_t failed = 0;
    for (std::size_t start = 0; start < files.size(); start += chunk) {
      const std::size_t n = std::min(chunk, files.size() - start);
      std::vector<std::optional<R>> results(n);
      std::vector<std::string> errors(n);
      parallel_for(n, o_.jobs, [&](std::size_t i) {
        try {
          results[i].emplace(work(files[start + i]));
        } catch (const std::exception& e) {
          errors[i] = describe(e);
        }
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (results[i]) {
          sink(files[start + i], std::move(*results[i]));
        } else {
          ++failed;
          err_ << "skip " << files[start + i].path.string() << ": " << errors[i] << "\n";
        }
      }
    }
    return failed;
  }

  bool single_file_mode() const {
    if (o_.inputs.size() != 1 || o_.inputs[0].empty() || o_.inputs[0][0] == '@') return false;
    std::error_code ec;
    return !fs::is_directory(o_.inputs[0], ec);
  }

  int cmd_preprocess() {
    auto vocab = this->vocab();
    bind(vocab);
    if (single_file_mode() && !fs::is_directory(o_.output)) {
      SvgDocument doc = preprocess(read_file(o_.inputs[0]), preprocess_config());
      write_file_atomic(o_.output, serialize_svg(doc));
      out_ << "preprocessed 1 sample -> " << o_.output << "\n";
      return 0;
    }
    auto files = collect_inputs(o_.inputs);
    fs::create_directories(o_.output);
    std::size_t written = 0;
    std::size_t failed = batch<std::string>(
        files, [&](const InputFile& f) { return serialize_svg(preprocess(read_file(f.path), preprocess_config())); },
        [&](const InputFile& f, std::string svg) {
          fs::path dst = fs::path(o_.output) / f.name;
          fs::create_directories(dst.parent_path());
          write_file_atomic(dst, svg);
          ++written;
        });
    out_ << "preprocessed " << written << " samples, skipped " << failed << " -> " << o_.output << "\n";
    return 0;
  }

  int cmd_build_vocab() {
    auto vocab = this->vocab();
    if (!o_.output.empty()) write_file_atomic(o_.output, atomic_vocab_to_json(vocab));
    out_ << vocab.size() << " tokens (" << vocab.count(TokenCategory::CoordAbs) << " absolute, "
         << vocab.count(TokenCategory::CoordRel) << " relative, " << vocab.count(TokenCategory::Struct)
         << " structure, " << vocab.count(TokenCategory::Cmd) << " command, " << vocab.count(TokenCategory::Flag)
         << " flag)\n";
    return 0;
  }

  int cmd_train_segments() {
    auto vocab = this->vocab();
    bind(vocab);
    auto files = collect_inputs(o_.inputs);
    std::vector<TokenSeq> corpus;
    std::size_t failed = batch<TokenSeq>(
        files, [&](const InputFile& f) { return atomic_of(f.path, vocab, true); },
        [&](const InputFile&, TokenSeq seq) { corpus.push_back(std::move(seq)); });
    SegmentVocab sv = train_segments(corpus, vocab, {o_.merges, o_.min_freq});
    write_file_atomic(o_.output, segment_vocab_to_json(sv, vocab));
    out_ << "learned " << sv.merges().size() << " merges (" << sv.size() << " composites) from " << corpus.size()
         << " samples, skipped " << failed << " -> " << o_.output << "\n";
    return 0;
  }

  int cmd_encode() {
    auto vocab = this->vocab();
    bind(vocab);
    auto sv = segments(vocab);
    const bool clean = o_.clean || sv.has_value();
    auto comps = sv ? sv->composite_tokens() : std::vector<std::string>{};
    auto encode_one = [&](const fs::path& p) {
      TokenSeq seq = atomic_of(p, vocab, clean);
      return sv ? encode_segments(seq, vocab, *sv) : seq;
    };
    auto render = [&](const TokenSeq& seq) {
      return o_.format == "ids" ? to_id_lines(seq) : to_token_text(seq, vocab, comps) + "\n";
    };
    if (single_file_mode()) {
      TokenSeq seq = encode_one(o_.inputs[0]);
      write_file_atomic(o_.output, render(seq));
      out_ << "encoded 1 sample, " << count_tokens(seq) << " tokens -> " << o_.output << "\n";
      return 0;
    }
    auto files = collect_inputs(o_.inputs);
    AtomicWriter w(o_.output);
    std::size_t written = 0, tokens = 0;
    std::size_t failed = batch<TokenSeq>(
        files, [&](const InputFile& f) { return encode_one(f.path); },
        [&](const InputFile& f, TokenSeq seq) {
          nlohmann::ordered_json j;
          j["source"] = f.name;
          if (o_.format == "ids") {
            auto ids = nlohmann::ordered_json::array();
            for (const auto& item : seq) {
              if (is_tok(item)) ids.push_back(tok_id(item));
              else ids.push_back(std::get<Lit>(item).text);
            }
            j["ids"] = std::move(ids);
          } else {
            j["tokens"] = to_token_text(seq, vocab, comps);
          }
          w.write(j.dump() + "\n");
          tokens += count_tokens(seq);
          ++written;
        });
    w.commit();
    out_ << "encoded " << written << " samples, " << tokens << " tokens, skipped " << failed << " -> " << o_.output
         << "\n";
    return 0;
  }

  TokenSeq parse_tokens(std::string_view text, const AtomicVocab& vocab, const std::optional<SegmentVocab>& sv) const {
    auto comps = sv ? sv->composite_tokens() : std::vector<std::string>{};
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '<') return parse_token_text(text, vocab, comps);
    return parse_id_lines(text, vocab.size() + comps.size());
  }

  std::string decode_to_svg(const TokenSeq& seq, const AtomicVocab& vocab, const std::optional<SegmentVocab>& sv) const {
    TokenSeq atomic = sv ? expand_segments(seq, *sv) : seq;
    return serialize_svg(::svgtok::detail::run_stage("decode", [&] { return decode_atomic(atomic, vocab); }));
  }

  int cmd_decode() {
    auto vocab = this->vocab();
    auto sv = segments(vocab);
    if (o_.inputs.size() != 1) throw CLI::ValidationError("decode takes exactly one input");
    const fs::path in = o_.inputs[0];
    if (in.extension() != ".jsonl") {
      write_file_atomic(o_.output, decode_to_svg(parse_tokens(read_file(in), vocab, sv), vocab, sv));
      out_ << "decoded 1 sample -> " << o_.output << "\n";
      return 0;
    }
    fs::create_directories(o_.output);
    std::istringstream lines(read_file(in));
    std::string line;
    std::size_t written = 0, failed = 0, lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        TokenSeq seq;
        if (j.contains("ids")) {
          for (const auto& v : j.at("ids")) {
            if (v.is_string()) seq.push_back(Lit{v.get<std::string>()});
            else seq.push_back(Tok{v.get<TokenId>()});
          }
        } else {
          seq = parse_tokens(j.at("tokens").get<std::string>(), vocab, sv);
        }
        fs::path dst = fs::path(o_.output) / j.at("source").get<std::string>();
        fs::create_directories(dst.parent_path());
        write_file_atomic(dst, decode_to_svg(seq, vocab, sv));
        ++written;
      } catch (const std::exception& e) {
        ++failed;
        err_ << "skip " << in.string() << ":" << lineno << ": " << describe(e) << "\n";
      }
    }
    out_ << "decoded " << written << " samples, skipped " << failed << " -> " << o_.output << "\n";
    return 0;
  }

  BaselineCounter baseline() const { return o_.counter == "chars" ? char_counter() : pretokenizer_counter(); }

  int cmd_stats() {
    auto vocab = this->vocab();
    bind(vocab);
    auto sv = segments(vocab);
    const auto counter = baseline();
    auto files = collect_inputs(o_.inputs);
    SampleMetrics total;
    std::vector<TokenSeq> encoded;
    std::size_t failed = batch<std::pair<SampleMetrics, TokenSeq>>(
        files,
        [&](const InputFile& f) {
          SvgDocument doc = preprocess(read_file(f.path), preprocess_config());
          SampleMetrics m = measure_sample(doc, vocab, sv ? &*sv : nullptr, counter);
          TokenSeq enc;
          if (sv) enc = encode_segments(clean_atomic(encode_atomic(doc, vocab), vocab).first, vocab, *sv);
          return std::pair{m, std::move(enc)};
        },
        [&](const InputFile&, std::pair<SampleMetrics, TokenSeq> r) {
          total += r.first;
          if (sv) encoded.push_back(std::move(r.second));
        });
    auto report = compression_report(total, counter.name);
    auto noise = make_noise_report(total.noise);
    nlohmann::ordered_json j;
    j["compression"] = to_json(report);
    j["cleaning"] = to_json(noise);
    j["skipped"] = failed;
    std::optional<SegmentStats> st;
    if (sv) {
      st = segment_stats(*sv, vocab, encoded);
      nlohmann::ordered_json s;
      s["composites"] = sv->size();
      s["length_q1"] = st->length_q1;
      s["length_median"] = st->length_median;
      s["length_q3"] = st->length_q3;
      auto buckets = nlohmann::ordered_json::array();
      for (const auto& b : st->buckets) {
        nlohmann::ordered_json share = nlohmann::ordered_json::object();
        for (auto& [c, v] : b.command_share) share[std::string(1, c)] = v;
        buckets.push_back({{"bucket", b.name}, {"composites", b.composites}, {"command_share", share}});
      }
      s["buckets"] = std::move(buckets);
      j["segments"] = std::move(s);
    }
    if (!o_.output.empty()) write_file_atomic(o_.output, j.dump(1) + "\n");
    if (o_.json) {
      out_ << j.dump(1) << "\n";
    } else {
      out_ << format_table(report);
      out_ << "removed per sample    " << ::svgtok::detail::fixed(noise.removed_per_sample, 3) << "\n";
      for (auto& [k, v] : noise.redundancy_mass) out_ << "  " << k << " mass " << ::svgtok::detail::fixed(v, 3) << "\n";
      if (st)
        out_ << "composite length      median " << st->length_median << " (q1 " << st->length_q1 << ", q3 "
             << st->length_q3 << ")\n";
      out_ << "skipped               " << failed << "\n";
    }
    return 0;
  }

  int cmd_partition() {
    auto vocab = this->vocab();
    bind(vocab);
    auto files = collect_inputs(o_.inputs);
    std::vector<std::size_t> lengths;
    std::vector<std::string> names;
    std::size_t failed = batch<std::size_t>(
        files, [&](const InputFile& f) { return stage_length(atomic_of(f.path, vocab, true)); },
        [&](const InputFile& f, std::size_t len) {
          lengths.push_back(len);
          names.push_back(f.name);
        });
    StageBuckets b = partition_by_length(lengths);
    nlohmann::ordered_json j = to_json(b);
    auto samples = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < names.size(); ++i)
      samples.push_back({{"source", names[i]}, {"length", lengths[i]}, {"stage", stage_name(b.assignment[i])}});
    j["samples"] = std::move(samples);
    if (!o_.output.empty()) write_file_atomic(o_.output, j.dump(1) + "\n");
    for (Stage s : {Stage::S1, Stage::S2, Stage::S3, Stage::Discard})
      out_ << stage_name(s) << " " << b.counts[static_cast<std::size_t>(s)] << "\n";
    out_ << "partitioned " << lengths.size() << " samples, skipped " << failed << "\n";
    return 0;
  }

  int cmd_init_embeddings() {
    auto vocab = this->vocab();
    auto sv = segments(vocab);
    EmbeddingTable base = matrix_from_bytes(read_file(o_.base_path));
    WordIndex words = o_.words_path.empty() ? WordIndex() : WordIndex(read_file(o_.words_path));
    DescriptionManifest manifest;
    if (!o_.descriptions_path.empty()) manifest = description_manifest_from_json(read_file(o_.descriptions_path));
    auto metas = token_metas(vocab, sv ? &*sv : nullptr, words, manifest);
    HmnParams p = o_.hmn;
    p.seed = o_.seed;
    EmbeddingTable table(metas.size(), base.cols);
    HmnContext ctx(base, p);
    std::vector<std::string> errors(metas.size());
    parallel_for(metas.size(), o_.jobs, [&](std::size_t i) {
      try {
        auto e = init_token(metas[i], ctx);
        std::transform(e.begin(), e.end(), table.row(i), [](double x) { return static_cast<float>(x); });
      } catch (const std::exception& ex) {
        errors[i] = describe(ex);
      }
    });
    for (std::size_t i = 0; i < metas.size(); ++i)
      if (!errors[i].empty()) throw Error(Errc::EmptyDescription, "token " + metas[i].token + ": " + errors[i], "init");
    write_file_atomic(o_.output, matrix_to_binary(table));
    write_file_atomic(o_.output + ".json", embedding_manifest_json(metas, p, base.cols));
    out_ << "initialized " << table.rows << " x " << table.cols << " embeddings -> " << o_.output << "\n";
    return 0;
  }

 private:
  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  int vocab_canvas_ = 784, vocab_tolerance_ = 10;
};

}  // namespace detail

/// Entry point shared by the executable and the tests. Exit codes: 0 on
/// success, 1 on I/O or processing failure, 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Hierarchical SVG tokenizer"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto* vocab_opt = app.add_option("--vocab", o.vocab_path, "Atomic vocabulary file (overrides --canvas/--tolerance)")
                        ->check(CLI::ExistingFile);
  auto* canvas_opt = app.add_option("--canvas", o.canvas, "Canvas size")->check(CLI::Range(1, 1 << 20));
  auto* tol_opt = app.add_option("--tolerance", o.tolerance, "Overflow tolerance")->check(CLI::Range(0, 1 << 20));
  vocab_opt->excludes(canvas_opt)->excludes(tol_opt);
  app.add_option("--jobs,-j", o.jobs, "Worker threads")->envname("SVGTOK_JOBS")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", o.seed, "Random seed")->envname("SVGTOK_SEED");

  auto inputs = [&](CLI::App* sc, bool required = true) {
    auto* opt = sc->add_option("inputs", o.inputs, "Files, directories or @list files");
    if (required) opt->required();
  };

  auto* pre = app.add_subcommand("preprocess", "Canonicalize SVG files");
  inputs(pre);
  pre->add_option("-o,--output", o.output, "Output file (one input) or directory")->required();
  pre->add_flag("--dark-background", o.dark_background, "Add a full-canvas background path");

  auto* bv = app.add_subcommand("build-vocab", "Build the atomic vocabulary");
  bv->add_option("-o,--output", o.output, "Vocabulary JSON file");

  auto* ts = app.add_subcommand("train-segments", "Learn segment merges");
  inputs(ts);
  ts->add_option("-o,--output", o.output, "Segment vocabulary JSON file")->required();
  ts->add_option("--merges", o.merges, "Maximum merges")->check(CLI::NonNegativeNumber);
  ts->add_option("--min-freq", o.min_freq, "Merge only pairs seen more often than this")->check(CLI::PositiveNumber);
  ts->add_flag("--dark-background", o.dark_background, "Add a full-canvas background path");

  auto* enc = app.add_subcommand("encode", "Encode SVG files to tokens");
  inputs(enc);
  enc->add_option("-o,--output", o.output, "Token file (one input) or JSONL file")->required();
  enc->add_option("--segments", o.segments_path, "Segment vocabulary (implies --clean)")->check(CLI::ExistingFile);
  enc->add_option("--format", o.format, "text or ids")->check(CLI::IsMember({"text", "ids"}));
  enc->add_flag("--clean", o.clean, "Remove structural noise before output");
  enc->add_flag("--dark-background", o.dark_background, "Add a full-canvas background path");

  auto* dec = app.add_subcommand("decode", "Decode tokens back to SVG");
  inputs(dec);
  dec->add_option("-o,--output", o.output, "SVG file, or directory for JSONL input")->required();
  dec->add_option("--segments", o.segments_path, "Segment vocabulary")->check(CLI::ExistingFile);

  auto* st = app.add_subcommand("stats", "Compression and cleaning statistics");
  inputs(st);
  st->add_option("--segments", o.segments_path, "Segment vocabulary")->check(CLI::ExistingFile);
  st->add_option("--counter", o.counter, "Raw text counter: pretok or chars")->check(CLI::IsMember({"pretok", "chars"}));
  st->add_flag("--json", o.json, "Print JSON instead of a table");
  st->add_option("-o,--output", o.output, "Also write the JSON report here");

  auto* part = app.add_subcommand("partition", "Assign curriculum stages by length");
  inputs(part);
  part->add_option("-o,--output", o.output, "Per-sample JSON report");

  auto* ie = app.add_subcommand("init-embeddings", "Initialize embeddings for the new tokens");
  ie->add_option("--base", o.base_path, "Base embedding matrix")->required()->check(CLI::ExistingFile);
  auto* words_opt = ie->add_option("--words", o.words_path, "Base vocabulary word list, one per line")
                        ->check(CLI::ExistingFile);
  auto* desc_opt = ie->add_option("--descriptions", o.descriptions_path, "JSON map token -> base ids")
                       ->check(CLI::ExistingFile);
  ie->add_option("--segments", o.segments_path, "Segment vocabulary")->check(CLI::ExistingFile);
  ie->add_option("-o,--output", o.output, "Output matrix file (manifest written alongside)")->required();
  ie->add_option("--lambda-mu", o.hmn.lambda_mu)->check(CLI::NonNegativeNumber);
  ie->add_option("--lambda-n", o.hmn.lambda_n)->check(CLI::NonNegativeNumber);
  ie->add_option("--w-sem", o.hmn.w_sem)->check(CLI::NonNegativeNumber);
  ie->add_option("--w-num", o.hmn.w_num)->check(CLI::NonNegativeNumber);
  ie->add_option("--rbf-count", o.hmn.rbf_count)->check(CLI::Range(1, 4096));
  ie->add_option("--poly-degree", o.hmn.poly_degree)->check(CLI::Range(0, 16));

  try {
    app.parse(argc, argv);
    if (ie->parsed() && words_opt->count() == 0 && desc_opt->count() == 0)
      throw CLI::RequiredError("--words or --descriptions");
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 2;
  }

  detail::Runner r(o, out, err);
  try {
    if (pre->parsed()) return r.cmd_preprocess();
    if (bv->parsed()) return r.cmd_build_vocab();
    if (ts->parsed()) return r.cmd_train_segments();
    if (enc->parsed()) return r.cmd_encode();
    if (dec->parsed()) return r.cmd_decode();
    if (st->parsed()) return r.cmd_stats();
    if (part->parsed()) return r.cmd_partition();
    if (ie->parsed()) return r.cmd_init_embeddings();
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace svgtok::cli
