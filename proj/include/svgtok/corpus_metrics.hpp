#pragma once

#include <array>
#include <cstdio>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "svgtok/atomic.hpp"
#include "svgtok/segment_learner.hpp"
#include "svgtok/segments.hpp"
#include "svgtok/svg_ir.hpp"

namespace svgtok {

/// A named text -> token count function standing in for a host LLM tokenizer.
struct BaselineCounter {
  std::string name;
  std::function<std::size_t(std::string_view)> count;
};

namespace detail {

inline bool pt_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }
inline bool pt_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool pt_newline(unsigned char c) { return c == '\n' || c == '\r'; }
inline bool pt_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
inline bool pt_other(unsigned char c) { return !pt_letter(c) && !pt_digit(c) && !pt_space(c); }

}  // namespace detail

/// Counts pre-tokens under the GPT-style split used by Qwen2-family
/// tokenizers, ASCII approximation: an optional leading symbol plus a letter
/// run, single digits, an optional space plus a symbol run (with trailing
/// newlines), newline runs, and whitespace runs. Contractions are not split
/// out. Real subword tokenizers never merge across these boundaries, so this
/// is a lower bound on their token count.
inline std::size_t count_pretokens(std::string_view s) {
  using namespace detail;
  std::size_t n = 0, i = 0;
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  while (i < s.size()) {
    const unsigned char c = at(i);
    ++n;
    if (pt_letter(c)) {
      while (i < s.size() && pt_letter(at(i))) ++i;
    } else if (!pt_newline(c) && !pt_digit(c) && i + 1 < s.size() && pt_letter(at(i + 1))) {
      ++i;
      while (i < s.size() && pt_letter(at(i))) ++i;
    } else if (pt_digit(c)) {
      ++i;
    } else if ((c == ' ' && i + 1 < s.size() && pt_other(at(i + 1))) || pt_other(c)) {
      if (c == ' ') ++i;
      while (i < s.size() && pt_other(at(i))) ++i;
      while (i < s.size() && pt_newline(at(i))) ++i;
    } else {
      // whitespace: a run ending in newlines, or a run of blanks that leaves
      // the last blank to prefix the next word
      std::size_t j = i;
      while (j < s.size() && pt_space(at(j))) ++j;
      std::size_t last_nl = std::string_view::npos;
      for (std::size_t k = i; k < j; ++k)
        if (pt_newline(at(k))) last_nl = k;
      if (last_nl != std::string_view::npos) i = last_nl + 1;
      else if (j < s.size() && j - i > 1) i = j - 1;
      else i = j;
    }
  }
  return n;
}

inline BaselineCounter pretokenizer_counter() { return {"pretok-qwen2-ascii", count_pretokens}; }
inline BaselineCounter char_counter() {
  return {"chars", [](std::string_view s) { return s.size(); }};
}

// ---------------------------------------------------------------------------
// Per-sample measurements. All fields are sums, so shards reduce by +=.

struct SampleMetrics {
  std::size_t samples = 0;
  std::size_t raw_tokens = 0;
  std::size_t atomic_tokens = 0;
  std::size_t segment_tokens = 0;
  std::size_t paths = 0;
  std::size_t commands = 0;
  NoiseCounts noise;

  SampleMetrics& operator+=(const SampleMetrics& o) {
    samples += o.samples;
    raw_tokens += o.raw_tokens;
    atomic_tokens += o.atomic_tokens;
    segment_tokens += o.segment_tokens;
    paths += o.paths;
    commands += o.commands;
    noise += o.noise;
    return *this;
  }
};

/// Vocabulary tokens count one each; literal spans count through `counter`.
inline std::size_t count_with_baseline(const TokenSeq& seq, const BaselineCounter& counter) {
  std::size_t n = 0;
  for (const auto& item : seq) n += is_tok(item) ? 1 : counter.count(std::get<Lit>(item).text);
  return n;
}

/// Raw: the canonical serialization of the preprocessed document under the
/// baseline counter. Atomic: the cleaned atomic sequence. Segment: that
/// sequence after merging (equal to atomic when `sv` is null or empty).
inline SampleMetrics measure_sample(const SvgDocument& preprocessed, const AtomicVocab& vocab, const SegmentVocab* sv,
                                    const BaselineCounter& counter) {
  SampleMetrics m;
  m.samples = 1;
  m.raw_tokens = counter.count(serialize_svg(preprocessed));
  auto [atomic, noise] = clean_atomic(encode_atomic(preprocessed, vocab), vocab);
  m.noise = std::move(noise);
  m.atomic_tokens = count_with_baseline(atomic, counter);
  m.segment_tokens = sv ? count_with_baseline(encode_segments(atomic, vocab, *sv), counter) : m.atomic_tokens;
  m.paths = count_paths(atomic, vocab);
  m.commands = count_commands(atomic, vocab);
  return m;
}

struct CompressionReport {
  std::string counter;
  std::size_t n_samples = 0;
  double avg_raw_tokens = 0;
  double avg_atomic_tokens = 0;
  double avg_segment_tokens = 0;
  double ratio_raw_to_at = 0;
  double ratio_at_to_st = 0;
  double paths_avg = 0;
  double cmds_avg = 0;
};

inline CompressionReport compression_report(const SampleMetrics& total, std::string counter_name) {
  if (total.samples == 0) throw Error(Errc::EmptyCorpus, "no samples measured");
  CompressionReport r;
  r.counter = std::move(counter_name);
  r.n_samples = total.samples;
  const double n = static_cast<double>(total.samples);
  r.avg_raw_tokens = static_cast<double>(total.raw_tokens) / n;
  r.avg_atomic_tokens = static_cast<double>(total.atomic_tokens) / n;
  r.avg_segment_tokens = static_cast<double>(total.segment_tokens) / n;
  r.ratio_raw_to_at = total.atomic_tokens ? static_cast<double>(total.raw_tokens) / static_cast<double>(total.atomic_tokens) : 0;
  r.ratio_at_to_st = total.segment_tokens
                         ? static_cast<double>(total.atomic_tokens) / static_cast<double>(total.segment_tokens)
                         : 0;
  r.paths_avg = static_cast<double>(total.paths) / n;
  r.cmds_avg = static_cast<double>(total.commands) / n;
  return r;
}

inline CompressionReport compression_report(const std::vector<SvgDocument>& corpus, const AtomicVocab& vocab,
                                            const SegmentVocab* sv, const BaselineCounter& counter) {
  SampleMetrics total;
  for (const auto& doc : corpus) total += measure_sample(doc, vocab, sv, counter);
  return compression_report(total, counter.name);
}

// ---------------------------------------------------------------------------
// Curriculum stages

enum class Stage { S1, S2, S3, Discard };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::S1: return "S1";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
    case Stage::Discard: return "discard";
  }
  return "?";
}

/// S1 = [b0, b1), S2 = [b1, b2), S3 = [b2, b3]; anything else is discarded.
struct StageBoundaries {
  std::array<std::size_t, 4> b{30, 326, 605, 1000};
};

inline Stage assign_stage(std::size_t length, const StageBoundaries& sb = {}) {
  const auto& b = sb.b;
  if (length < b[0] || length > b[3]) return Stage::Discard;
  if (length < b[1]) return Stage::S1;
  if (length < b[2]) return Stage::S2;
  return Stage::S3;
}

struct StageBuckets {
  StageBoundaries boundaries;
  std::vector<Stage> assignment;
  std::array<std::size_t, 4> counts{};
};

/// Lengths are atomic sequence lengths with each attribute span as one item.
inline StageBuckets partition_by_length(const std::vector<std::size_t>& lengths, const StageBoundaries& sb = {}) {
  StageBuckets out;
  out.boundaries = sb;
  for (auto len : lengths) {
    Stage s = assign_stage(len, sb);
    out.assignment.push_back(s);
    ++out.counts[static_cast<std::size_t>(s)];
  }
  return out;
}

inline std::size_t stage_length(const TokenSeq& cleaned_atomic) { return count_tokens(cleaned_atomic, LitCount::Items); }

/// Stage assignment of preprocessed documents by cleaned atomic length.
inline StageBuckets partition_by_length(const std::vector<SvgDocument>& corpus, const AtomicVocab& vocab,
                                        const StageBoundaries& sb = {}) {
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& doc : corpus) lengths.push_back(stage_length(clean_atomic(encode_atomic(doc, vocab), vocab).first));
  return partition_by_length(lengths, sb);
}

/// Noise statistics aggregated over preprocessed documents.
inline NoiseReport cleaning_report(const std::vector<SvgDocument>& corpus, const AtomicVocab& vocab) {
  NoiseCounts total;
  for (const auto& doc : corpus) total += clean_atomic(encode_atomic(doc, vocab), vocab).second;
  return make_noise_report(total);
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::ordered_json to_json(const CompressionReport& r) {
  return {{"counter", r.counter},
          {"n_samples", r.n_samples},
          {"avg_raw_tokens", r.avg_raw_tokens},
          {"avg_atomic_tokens", r.avg_atomic_tokens},
          {"avg_segment_tokens", r.avg_segment_tokens},
          {"ratio_raw_to_at", r.ratio_raw_to_at},
          {"ratio_at_to_st", r.ratio_at_to_st},
          {"paths_avg", r.paths_avg},
          {"cmds_avg", r.cmds_avg}};
}

inline nlohmann::ordered_json to_json(const NoiseReport& r) {
  nlohmann::ordered_json removed = nlohmann::ordered_json::object();
  for (auto& [k, v] : r.removed_per_command) removed[std::string(1, k)] = v;
  nlohmann::ordered_json mass = nlohmann::ordered_json::object();
  for (auto& [k, v] : r.redundancy_mass) mass[k] = v;
  return {{"samples", r.samples},
          {"removed_per_sample", r.removed_per_sample},
          {"removed_per_command", removed},
          {"redundancy_mass", mass}};
}

inline nlohmann::ordered_json to_json(const StageBuckets& b) {
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (Stage s : {Stage::S1, Stage::S2, Stage::S3, Stage::Discard})
    counts[std::string(stage_name(s))] = b.counts[static_cast<std::size_t>(s)];
  return {{"boundaries", b.boundaries.b}, {"counts", counts}};
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline std::string format_table(const CompressionReport& r) {
  std::string out;
  auto row = [&](std::string_view k, const std::string& v) {
    out += std::string(k);
    out.append(k.size() < 22 ? 22 - k.size() : 1, ' ');
    out += v + "\n";
  };
  row("samples", std::to_string(r.n_samples));
  row("baseline counter", r.counter);
  row("avg raw tokens", detail::fixed(r.avg_raw_tokens));
  row("avg atomic tokens", detail::fixed(r.avg_atomic_tokens));
  row("avg segment tokens", detail::fixed(r.avg_segment_tokens));
  row("raw -> AT", detail::fixed(r.ratio_raw_to_at, 3) + "x");
  row("AT -> ST", detail::fixed(r.ratio_at_to_st, 3) + "x");
  row("paths per sample", detail::fixed(r.paths_avg));
  row("commands per sample", detail::fixed(r.cmds_avg));
  return out;
}

}  // namespace svgtok
