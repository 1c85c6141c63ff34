#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "svgtok/atomic.hpp"
#include "svgtok/hash.hpp"
#include "svgtok/segments.hpp"

namespace svgtok {

using Expansion = std::vector<TokenId>;

struct MergeRule {
  Expansion left, right;
  std::size_t result = 0;  // composite index
  std::uint64_t count = 0;
};

struct SegmentParams {
  std::size_t merges = 500;
  std::uint64_t min_freq = 2;
};

/// Learned merge list. Composite k is the token "<seg_k>" with id
/// atomic_size + k and expands to a concatenation of whole segments. A
/// symbol is identified by its expansion, so two merges producing the same
/// atoms share one composite.
class SegmentVocab {
 public:
  SegmentVocab() = default;
  SegmentVocab(const AtomicVocab& vocab, SegmentParams params)
      : canvas_(vocab.canvas()), tolerance_(vocab.tolerance()), atomic_size_(vocab.size()), params_(params) {}

  int canvas() const noexcept { return canvas_; }
  int tolerance() const noexcept { return tolerance_; }
  std::size_t atomic_size() const noexcept { return atomic_size_; }
  const SegmentParams& params() const noexcept { return params_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  const std::vector<Expansion>& composites() const noexcept { return composites_; }
  std::size_t size() const noexcept { return composites_.size(); }

  TokenId composite_id(std::size_t k) const { return static_cast<TokenId>(atomic_size_ + k); }
  bool is_composite(TokenId id) const { return id >= atomic_size_ && id - atomic_size_ < composites_.size(); }
  const Expansion& expansion(TokenId id) const {
    if (!is_composite(id)) throw Error(Errc::UnknownComposite, "token id " + std::to_string(id) + " is not a composite");
    return composites_[id - atomic_size_];
  }
  static std::string composite_token(std::size_t k) { return "<seg_" + std::to_string(k) + ">"; }
  std::vector<std::string> composite_tokens() const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < composites_.size(); ++k) out.push_back(composite_token(k));
    return out;
  }

  void check_compatible(const AtomicVocab& vocab) const {
    if (vocab.canvas() != canvas_ || vocab.tolerance() != tolerance_ || vocab.size() != atomic_size_)
      throw Error(Errc::BadFormat, "segment vocabulary was trained for a different atomic vocabulary");
  }

  /// Appends a merge; returns the composite index of its result.
  std::size_t add_merge(Expansion left, Expansion right, std::uint64_t count) {
    Expansion joined = left;
    joined.insert(joined.end(), right.begin(), right.end());
    auto it = composite_index_.find(joined);
    std::size_t k;
    if (it != composite_index_.end()) {
      k = it->second;
    } else {
      k = composites_.size();
      composite_index_.emplace(joined, k);
      composites_.push_back(std::move(joined));
    }
    merges_.push_back({std::move(left), std::move(right), k, count});
    return k;
  }

  void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

 private:
  int canvas_ = 0, tolerance_ = 0;
  std::size_t atomic_size_ = 0;
  SegmentParams params_;
  std::string fingerprint_;
  std::vector<MergeRule> merges_;
  std::vector<Expansion> composites_;
  std::map<Expansion, std::size_t> composite_index_;
};

namespace detail {

using Sym = std::uint32_t;
inline constexpr Sym kNoSym = std::numeric_limits<Sym>::max();

inline std::uint64_t pair_key(Sym a, Sym b) { return (static_cast<std::uint64_t>(a) << 32) | b; }
inline Sym key_left(std::uint64_t k) { return static_cast<Sym>(k >> 32); }
inline Sym key_right(std::uint64_t k) { return static_cast<Sym>(k & 0xffffffffu); }

/// Interns expansions as dense symbol ids.
class SymbolTable {
 public:
  Sym intern(const Expansion& e) {
    auto [it, fresh] = index_.try_emplace(e, static_cast<Sym>(exps_.size()));
    if (fresh) exps_.push_back(e);
    return it->second;
  }
  Sym find(const Expansion& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? kNoSym : it->second;
  }
  const Expansion& expansion(Sym s) const { return exps_[s]; }

 private:
  std::map<Expansion, Sym> index_;
  std::vector<Expansion> exps_;
};

// Replaces (a, b) by r left to right without overlap. Returns true if any.
inline bool replace_pair(std::vector<Sym>& s, Sym a, Sym b, Sym r) {
  bool any = false;
  std::size_t w = 0;
  for (std::size_t i = 0; i < s.size();) {
    if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
      s[w++] = r;
      i += 2;
      any = true;
    } else {
      s[w++] = s[i++];
    }
  }
  s.resize(w);
  return any;
}

inline std::string corpus_fingerprint(const std::vector<TokenSeq>& corpus) {
  std::uint64_t h = kFnvOffset;
  for (const auto& seq : corpus) h = fnv1a64(to_id_lines(seq) + "\x1e", h);
  return "fnv1a64:" + hex64(h);
}

}  // namespace detail

/// Cleaned per-path segment lists of a corpus, the training input.
inline std::vector<SegmentList> training_paths(const std::vector<TokenSeq>& corpus, const AtomicVocab& vocab) {
  std::vector<SegmentList> out;
  for (const auto& seq : corpus)
    for (auto& segs : extract_segments(seq, vocab)) out.push_back(clean_segments(segs, vocab).segments);
  return out;
}

/// Learns up to `params.merges` merges of adjacent segment symbols within
/// paths. Each round picks the pair with the highest count (overlapping
/// occurrences counted), ties going to the smallest (left expansion, right
/// expansion) in lexicographic atom-id order, and stops once the best count
/// is not above min_freq. Occurrences are then replaced left to right.
/// Counts are maintained incrementally: only sequences that contain the
/// merged pair are recounted.
inline SegmentVocab train_segments(const std::vector<TokenSeq>& corpus, const AtomicVocab& vocab,
                                   SegmentParams params = {}) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "no training sequences");
  if (params.min_freq < 1) throw Error(Errc::DomainError, "min_freq must be >= 1");
  SegmentVocab sv(vocab, params);
  sv.set_fingerprint(detail::corpus_fingerprint(corpus));

  using detail::Sym;
  detail::SymbolTable table;
  std::map<std::vector<Sym>, std::uint64_t> dedup;
  for (const auto& segs : training_paths(corpus, vocab)) {
    if (segs.size() < 2) continue;
    std::vector<Sym> s;
    s.reserve(segs.size());
    for (const auto& seg : segs) s.push_back(table.intern(seg.atoms()));
    ++dedup[s];
  }
  std::vector<std::vector<Sym>> seqs;
  std::vector<std::uint64_t> weight;
  for (auto& [s, w] : dedup) {
    seqs.push_back(s);
    weight.push_back(w);
  }

  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
  auto account = [&](std::uint32_t i, std::int64_t sign) {
    const auto& s = seqs[i];
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      auto key = detail::pair_key(s[k], s[k + 1]);
      auto& c = counts[key];
      c += sign * static_cast<std::int64_t>(weight[i]);
      if (c == 0) counts.erase(key);
      if (sign > 0) where[key].push_back(i);
    }
  };
  for (std::uint32_t i = 0; i < seqs.size(); ++i) account(i, +1);

  auto better = [&](std::uint64_t a, std::int64_t ca, std::uint64_t b, std::int64_t cb) {
    if (ca != cb) return ca > cb;
    const auto& la = table.expansion(detail::key_left(a));
    const auto& lb = table.expansion(detail::key_left(b));
    if (la != lb) return la < lb;
    return table.expansion(detail::key_right(a)) < table.expansion(detail::key_right(b));
  };

  while (sv.merges().size() < params.merges) {
    std::uint64_t best = 0;
    std::int64_t best_count = 0;
    for (auto& [key, c] : counts)
      if (best_count == 0 || better(key, c, best, best_count)) {
        best = key;
        best_count = c;
      }
    if (best_count <= static_cast<std::int64_t>(params.min_freq)) break;
    const Sym a = detail::key_left(best), b = detail::key_right(best);
    Expansion left = table.expansion(a), right = table.expansion(b);
    Expansion joined = left;
    joined.insert(joined.end(), right.begin(), right.end());
    const Sym r = table.intern(joined);
    sv.add_merge(std::move(left), std::move(right), static_cast<std::uint64_t>(best_count));

    std::vector<std::uint32_t> affected = std::move(where[best]);
    where.erase(best);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (std::uint32_t i : affected) {
      std::vector<Sym> next = seqs[i];
      if (!detail::replace_pair(next, a, b, r)) continue;
      account(i, -1);
      seqs[i] = std::move(next);
      account(i, +1);
    }
  }
  return sv;
}

namespace detail {

/// Symbol-level view of a SegmentVocab used for encoding.
struct MergeIndex {
  SymbolTable table;
  struct Step {
    Sym left, right, result;
  };
  std::vector<Step> steps;
  std::vector<TokenId> composite_of;  // per symbol; kNoSym when atomic

  explicit MergeIndex(const SegmentVocab& sv) {
    for (const auto& m : sv.merges()) {
      Sym l = table.intern(m.left), r = table.intern(m.right);
      Sym res = table.intern(sv.composites()[m.result]);
      steps.push_back({l, r, res});
      if (composite_of.size() <= res) composite_of.resize(res + 1, kNoSym);
      composite_of[res] = sv.composite_id(m.result);
    }
  }
};

inline void encode_body(const SegmentList& segs, const MergeIndex& idx, TokenSeq& out) {
  std::vector<Sym> syms;
  syms.reserve(segs.size());
  for (const auto& s : segs) syms.push_back(idx.table.find(s.atoms()));
  std::vector<Sym> present(syms);
  std::sort(present.begin(), present.end());
  for (const auto& st : idx.steps) {
    if (syms.size() < 2) break;
    if (!std::binary_search(present.begin(), present.end(), st.left)) continue;
    if (replace_pair(syms, st.left, st.right, st.result)) {
      present = syms;
      std::sort(present.begin(), present.end());
    }
  }
  // Symbols that never merged are rebuilt from their source segments.
  std::size_t src = 0;
  for (Sym s : syms) {
    if (s != kNoSym && s < idx.composite_of.size() && idx.composite_of[s] != kNoSym) {
      out.push_back(Tok{idx.composite_of[s]});
      std::size_t atoms = idx.table.expansion(s).size();
      while (atoms > 0) {
        atoms -= 1 + segs[src].params.size();
        ++src;
      }
    } else {
      for (TokenId t : segs[src].atoms()) out.push_back(Tok{t});
      ++src;
    }
  }
}

}  // namespace detail

/// Applies the merges of `sv` in learned order inside every path. The input
/// is used as is; callers that want cleaned output run clean_atomic first
/// (training sees cleaned paths), which keeps expand_segments an exact
/// inverse.
inline TokenSeq encode_segments(const TokenSeq& seq, const AtomicVocab& vocab, const SegmentVocab& sv) {
  sv.check_compatible(vocab);
  if (sv.merges().empty()) return seq;
  detail::MergeIndex idx(sv);
  TokenSeq out;
  std::size_t pos = 0;
  for (PathBody b : path_bodies(seq, vocab)) {
    out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(pos), seq.begin() + static_cast<std::ptrdiff_t>(b.begin));
    detail::encode_body(parse_segments(seq, b, vocab), idx, out);
    pos = b.end;
  }
  out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(pos), seq.end());
  return out;
}

/// Replaces every composite by its atoms.
inline TokenSeq expand_segments(const TokenSeq& seq, const SegmentVocab& sv) {
  TokenSeq out;
  out.reserve(seq.size());
  for (const auto& item : seq) {
    if (is_tok(item) && tok_id(item) >= sv.atomic_size()) {
      for (TokenId t : sv.expansion(tok_id(item))) out.push_back(Tok{t});
    } else {
      out.push_back(item);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Composite statistics

struct BucketStats {
  std::string name;
  std::size_t composites = 0;
  std::map<char, double> command_share;  // lowercase command letter -> fraction
};

struct SegmentStats {
  std::vector<BucketStats> buckets;  // top 50, 51-200, rest
  double length_median = 0, length_q1 = 0, length_q3 = 0;
  std::vector<std::uint64_t> usage;  // per composite, over the corpus
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Composites ranked by how often they occur in the encoded corpus; per rank
/// bucket the share of each command type inside their expansions, and the
/// quartiles of expansion length in atoms.
inline SegmentStats segment_stats(const SegmentVocab& sv, const AtomicVocab& vocab,
                                  const std::vector<TokenSeq>& encoded_corpus) {
  SegmentStats st;
  st.usage.assign(sv.size(), 0);
  for (const auto& seq : encoded_corpus)
    for (const auto& item : seq)
      if (is_tok(item) && sv.is_composite(tok_id(item))) ++st.usage[tok_id(item) - sv.atomic_size()];
  std::vector<std::size_t> order(sv.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return st.usage[a] > st.usage[b]; });
  const std::pair<const char*, std::size_t> ranges[] = {{"top_50", 50}, {"51_200", 200}, {"rest", SIZE_MAX}};
  std::size_t rank = 0;
  for (auto [name, upto] : ranges) {
    BucketStats b;
    b.name = name;
    std::map<char, std::size_t> cmds;
    std::size_t total = 0;
    for (; rank < order.size() && rank < upto; ++rank) {
      ++b.composites;
      for (TokenId t : sv.composites()[order[rank]])
        if (vocab.category(t) == TokenCategory::Cmd) {
          ++cmds[op_letter(vocab.command_of(t).first, true)];
          ++total;
        }
    }
    for (auto& [c, n] : cmds) b.command_share[c] = static_cast<double>(n) / static_cast<double>(total);
    st.buckets.push_back(std::move(b));
  }
  std::vector<double> lengths;
  for (const auto& e : sv.composites()) lengths.push_back(static_cast<double>(e.size()));
  st.length_q1 = detail::quantile(lengths, 0.25);
  st.length_median = detail::quantile(lengths, 0.5);
  st.length_q3 = detail::quantile(lengths, 0.75);
  return st;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kSegmentFormat = "svgtok-segments";
inline constexpr int kSegmentFormatVersion = 1;

namespace detail {

inline nlohmann::ordered_json tokens_json(const Expansion& e, const AtomicVocab& vocab) {
  auto arr = nlohmann::ordered_json::array();
  for (TokenId t : e) arr.push_back(vocab.token(t));
  return arr;
}

inline Expansion tokens_from_json(const nlohmann::json& arr, const AtomicVocab& vocab) {
  Expansion e;
  for (const auto& t : arr) {
    auto id = vocab.find(t.get<std::string>());
    if (!id) throw Error(Errc::UnknownToken, "unknown token " + t.get<std::string>());
    e.push_back(*id);
  }
  return e;
}

}  // namespace detail

inline std::string segment_vocab_to_json(const SegmentVocab& sv, const AtomicVocab& vocab) {
  sv.check_compatible(vocab);
  nlohmann::ordered_json j;
  j["format"] = kSegmentFormat;
  j["version"] = kSegmentFormatVersion;
  j["canvas"] = sv.canvas();
  j["tolerance"] = sv.tolerance();
  j["atomic_size"] = sv.atomic_size();
  j["params"] = {{"merges", sv.params().merges}, {"min_freq", sv.params().min_freq}};
  j["corpus_fingerprint"] = sv.fingerprint();
  auto comps = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < sv.size(); ++k)
    comps.push_back({{"token", SegmentVocab::composite_token(k)},
                     {"id", sv.composite_id(k)},
                     {"expansion", detail::tokens_json(sv.composites()[k], vocab)}});
  j["composites"] = std::move(comps);
  auto merges = nlohmann::ordered_json::array();
  for (const auto& m : sv.merges())
    merges.push_back({{"left", detail::tokens_json(m.left, vocab)},
                      {"right", detail::tokens_json(m.right, vocab)},
                      {"result", SegmentVocab::composite_token(m.result)},
                      {"count", m.count}});
  j["merges"] = std::move(merges);
  return j.dump(1) + "\n";
}

inline SegmentVocab segment_vocab_from_json(std::string_view text, const AtomicVocab& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("segment vocabulary: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kSegmentFormat)
      throw Error(Errc::BadFormat, "not a segment vocabulary file");
    if (j.at("version").get<int>() != kSegmentFormatVersion)
      throw Error(Errc::BadFormat, "unsupported segment vocabulary version");
    if (j.at("canvas").get<int>() != vocab.canvas() || j.at("tolerance").get<int>() != vocab.tolerance())
      throw Error(Errc::BadFormat, "segment vocabulary canvas/tolerance differ from the atomic vocabulary");
    SegmentParams p{j.at("params").at("merges").get<std::size_t>(), j.at("params").at("min_freq").get<std::uint64_t>()};
    SegmentVocab sv(vocab, p);
    sv.set_fingerprint(j.value("corpus_fingerprint", ""));
    for (const auto& m : j.at("merges")) {
      std::size_t k = sv.add_merge(detail::tokens_from_json(m.at("left"), vocab),
                                   detail::tokens_from_json(m.at("right"), vocab), m.at("count").get<std::uint64_t>());
      if (m.at("result").get<std::string>() != SegmentVocab::composite_token(k))
        throw Error(Errc::BadFormat, "merge result " + m.at("result").get<std::string>() + " does not match its expansion");
    }
    const auto& comps = j.at("composites");
    if (comps.size() != sv.size()) throw Error(Errc::BadFormat, "composite list does not match the merges");
    for (std::size_t k = 0; k < comps.size(); ++k)
      if (detail::tokens_from_json(comps[k].at("expansion"), vocab) != sv.composites()[k])
        throw Error(Errc::BadFormat, "composite " + std::to_string(k) + " expansion mismatch");
    return sv;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("segment vocabulary: ") + e.what());
  }
}

}  // namespace svgtok
