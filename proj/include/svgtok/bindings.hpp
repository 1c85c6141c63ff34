#pragma once

// Surface for scripting hosts. A host module wraps BoundTokenizer and the two
// free functions one to one; no logic lives on the host side. Tokens cross
// the boundary as strings (one per sequence item, literal spans as their
// text) and documents as SVG text.

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svgtok/cli.hpp"
#include "svgtok/svgtok.hpp"

namespace svgtok::bindings {

inline std::string_view version() { return cli::kVersion; }

/// Immutable vocabulary pair; safe to share across threads for encode and
/// decode.
class BoundTokenizer {
 public:
  /// `vocab_path` empty means the default 784/10 vocabulary; `segments_path`
  /// empty means atomic tokens only.
  explicit BoundTokenizer(const std::string& vocab_path = {}, const std::string& segments_path = {})
      : vocab_(vocab_path.empty() ? AtomicVocab(784, 10) : atomic_vocab_from_json(read_file(vocab_path))) {
    if (!segments_path.empty()) segments_ = segment_vocab_from_json(read_file(segments_path), vocab_);
    if (segments_) composites_ = segments_->composite_tokens();
  }

  const AtomicVocab& vocab() const { return vocab_; }
  const std::optional<SegmentVocab>& segments() const { return segments_; }

  /// Same pipeline as `svgtok encode`: preprocess, atomic encoding, and
  /// cleaning plus merging when segments are loaded.
  std::vector<std::string> bound_encode(std::string_view svg_text) const {
    PreprocessConfig cfg;
    cfg.canvas = vocab_.canvas();
    cfg.overflow_tolerance = vocab_.tolerance();
    TokenSeq seq = encode_atomic(preprocess(svg_text, cfg), vocab_);
    if (segments_) seq = encode_segments(clean_atomic(seq, vocab_).first, vocab_, *segments_);
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (const auto& item : seq) {
      if (!is_tok(item)) out.push_back(std::get<Lit>(item).text);
      else if (tok_id(item) < vocab_.size()) out.push_back(vocab_.token(tok_id(item)));
      else out.push_back(composites_.at(tok_id(item) - vocab_.size()));
    }
    return out;
  }

  std::string bound_decode(const std::vector<std::string>& tokens) const {
    std::string text;
    for (const auto& t : tokens) text += t;
    TokenSeq seq = parse_token_text(text, vocab_, composites_);
    if (segments_) seq = expand_segments(seq, *segments_);
    return serialize_svg(decode_atomic(seq, vocab_));
  }

 private:
  AtomicVocab vocab_;
  std::optional<SegmentVocab> segments_;
  std::vector<std::string> composites_;
};

namespace detail {

inline void call_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "svgtok");
  std::ostringstream out, err;
  if (int code = cli::run(args, out, err); code != 0) {
    std::string msg = err.str();
    while (!msg.empty() && msg.back() == '\n') msg.pop_back();
    throw Error(code == 2 ? Errc::DomainError : Errc::Io, msg, "bindings");
  }
}

}  // namespace detail

/// Trains segment merges over files or directories; returns `output`.
inline std::string bound_train(const std::vector<std::string>& corpus, std::size_t merges, std::uint64_t min_freq,
                               const std::string& output) {
  std::vector<std::string> args{"train-segments"};
  args.insert(args.end(), corpus.begin(), corpus.end());
  args.insert(args.end(), {"-o", output, "--merges", std::to_string(merges), "--min-freq", std::to_string(min_freq)});
  detail::call_cli(std::move(args));
  return output;
}

struct InitOptions {
  std::string words_path, descriptions_path, segments_path;
  HmnParams params;
};

/// Writes the initialized matrix (and its manifest) to `output`; returns it.
inline std::string bound_init_embeddings(const std::string& base_path, const InitOptions& o, const std::string& output) {
  std::vector<std::string> args{"--seed", std::to_string(o.params.seed), "init-embeddings", "--base", base_path,
                                "-o", output};
  if (!o.words_path.empty()) args.insert(args.end(), {"--words", o.words_path});
  if (!o.descriptions_path.empty()) args.insert(args.end(), {"--descriptions", o.descriptions_path});
  if (!o.segments_path.empty()) args.insert(args.end(), {"--segments", o.segments_path});
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  args.insert(args.end(), {"--lambda-mu", num(o.params.lambda_mu), "--lambda-n", num(o.params.lambda_n), "--w-sem",
                           num(o.params.w_sem), "--w-num", num(o.params.w_num), "--rbf-count",
                           std::to_string(o.params.rbf_count), "--poly-degree", std::to_string(o.params.poly_degree)});
  detail::call_cli(std::move(args));
  return output;
}

}  // namespace svgtok::bindings
