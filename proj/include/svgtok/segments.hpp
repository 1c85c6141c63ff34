#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "svgtok/atomic.hpp"

namespace svgtok {

/// A command token with its full parameter list (flags included for arcs).
struct Segment {
  TokenId command = 0;
  std::vector<TokenId> params;

  std::vector<TokenId> atoms() const {
    std::vector<TokenId> out{command};
    out.insert(out.end(), params.begin(), params.end());
    return out;
  }
  bool operator==(const Segment&) const = default;
};

using SegmentList = std::vector<Segment>;

/// Item range [begin, end) of a path's command stream inside a sequence.
struct PathBody {
  std::size_t begin = 0, end = 0;
};

/// Command streams of every <path>, in document order. A body starts after
/// the opening tag and its attribute span and runs up to the first
/// structure token or literal.
inline std::vector<PathBody> path_bodies(const TokenSeq& seq, const AtomicVocab& vocab) {
  std::vector<PathBody> out;
  const TokenId open = *vocab.open_tag("path");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!is_tok(seq[i]) || tok_id(seq[i]) != open) continue;
    std::size_t b = i + 1;
    if (b < seq.size() && !is_tok(seq[b])) ++b;
    std::size_t e = b;
    while (e < seq.size() && is_tok(seq[e]) &&
           (tok_id(seq[e]) >= vocab.size() || vocab.category(tok_id(seq[e])) != TokenCategory::Struct))
      ++e;
    out.push_back({b, e});
    i = e - 1;
  }
  return out;
}

inline std::size_t segment_arity(PathOp op) { return arity(op) + (op == PathOp::A ? 2 : 0); }

/// Splits an atomic command stream into segments.
inline SegmentList parse_segments(const TokenSeq& seq, PathBody body, const AtomicVocab& vocab) {
  SegmentList out;
  std::size_t i = body.begin;
  while (i < body.end) {
    TokenId id = tok_id(seq[i]);
    if (id >= vocab.size()) throw Error(Errc::UnknownToken, "composite id " + std::to_string(id) + " in atomic stream");
    if (vocab.category(id) != TokenCategory::Cmd)
      throw Error(Errc::ArityViolation, vocab.token(id) + " is not preceded by a command");
    Segment seg{id, {}};
    const std::size_t n = segment_arity(vocab.command_of(id).first);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t j = i + 1 + k;
      if (j >= body.end) throw Error(Errc::ArityViolation, vocab.token(id) + " is missing parameters");
      TokenId p = tok_id(seq[j]);
      if (p >= vocab.size() || vocab.category(p) == TokenCategory::Cmd)
        throw Error(Errc::ArityViolation, vocab.token(id) + " is missing parameters");
      seg.params.push_back(p);
    }
    i += 1 + n;
    out.push_back(std::move(seg));
  }
  return out;
}

/// One segment list per path; no adjacency spans two paths.
inline std::vector<SegmentList> extract_segments(const TokenSeq& seq, const AtomicVocab& vocab) {
  std::vector<SegmentList> out;
  for (PathBody b : path_bodies(seq, vocab)) out.push_back(parse_segments(seq, b, vocab));
  return out;
}

// ---------------------------------------------------------------------------
// Structural noise

enum class Motif { ZeroDeltaPair, ZeroMoveCommand, DegenerateArc };
inline constexpr std::array<Motif, 3> kMotifs = {Motif::ZeroDeltaPair, Motif::ZeroMoveCommand, Motif::DegenerateArc};

inline std::string_view motif_name(Motif m) {
  switch (m) {
    case Motif::ZeroDeltaPair: return "zero_delta_pair";
    case Motif::ZeroMoveCommand: return "zero_move_command";
    case Motif::DegenerateArc: return "degenerate_arc";
  }
  return "?";
}

/// Additive counts; merge shards with +=.
struct NoiseCounts {
  std::size_t samples = 0;
  std::map<char, std::size_t> removed;  // by command letter
  std::array<std::size_t, 3> motifs{};

  std::size_t motif(Motif m) const { return motifs[static_cast<std::size_t>(m)]; }
  std::size_t total_removed() const {
    std::size_t n = 0;
    for (auto& [_, c] : removed) n += c;
    return n;
  }
  NoiseCounts& operator+=(const NoiseCounts& o) {
    samples += o.samples;
    for (auto& [k, c] : o.removed) removed[k] += c;
    for (std::size_t i = 0; i < motifs.size(); ++i) motifs[i] += o.motifs[i];
    return *this;
  }
  bool operator==(const NoiseCounts&) const = default;
};

struct NoiseReport {
  std::size_t samples = 0;
  std::map<char, double> removed_per_command;  // average removals per sample
  std::map<std::string, double> redundancy_mass;
  double removed_per_sample = 0;
};

inline NoiseReport make_noise_report(const NoiseCounts& c) {
  NoiseReport r;
  r.samples = c.samples;
  const double n = c.samples ? static_cast<double>(c.samples) : 1.0;
  for (auto& [k, v] : c.removed) r.removed_per_command[k] = static_cast<double>(v) / n;
  r.removed_per_sample = static_cast<double>(c.total_removed()) / n;
  std::size_t total = 0;
  for (auto v : c.motifs) total += v;
  for (Motif m : kMotifs)
    r.redundancy_mass[std::string(motif_name(m))] = total ? static_cast<double>(c.motif(m)) / total : 0.0;
  return r;
}

struct CleanResult {
  SegmentList segments;
  NoiseCounts counts;
};

namespace detail {

inline bool is_smooth(const AtomicVocab& vocab, const Segment& s) {
  auto op = vocab.command_of(s.command).first;
  return op == PathOp::S || op == PathOp::T;
}

inline bool is_move_or_close(const AtomicVocab& vocab, const Segment& s) {
  auto op = vocab.command_of(s.command).first;
  return op == PathOp::M || op == PathOp::Z;
}

// Point-aligned (x, y) parameter pairs of a command.
inline std::size_t point_pairs(PathOp op) {
  switch (op) {
    case PathOp::M: case PathOp::L: case PathOp::T: return 1;
    case PathOp::S: case PathOp::Q: return 2;
    case PathOp::C: return 3;
    default: return 0;
  }
}

}  // namespace detail

/// Removes zero-move commands (relative l/c/s/q/t/h/v with all-zero
/// offsets) and degenerate arcs. An arc with a zero endpoint offset is
/// dropped; one with a zero radius but a real endpoint renders as a straight
/// line and is rewritten to `l dx dy`. A removal that would change how the
/// path renders is skipped: before a smooth command (s/t reflect the previous
/// control point) and when the command is the only drawing step of its
/// subpath (a zero-length subpath still paints line caps). Skipped motifs are
/// still counted as detected. Zero-offset point pairs in the segments that
/// remain are counted as zero_delta_pair.
inline CleanResult clean_segments(const SegmentList& segs, const AtomicVocab& vocab) {
  CleanResult r;
  const TokenId zero = vocab.zero_offset();
  auto& motifs = r.counts.motifs;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& s = segs[i];
    auto [op, relative] = vocab.command_of(s.command);
    const Segment* next = i + 1 < segs.size() ? &segs[i + 1] : nullptr;
    const Segment* prev = r.segments.empty() ? nullptr : &r.segments.back();
    const bool before_smooth = next && detail::is_smooth(vocab, *next);
    const bool lone_step = prev && vocab.command_of(prev->command).first == PathOp::M &&
                           (!next || detail::is_move_or_close(vocab, *next));
    bool zero_move = false;
    if (relative && op != PathOp::M && op != PathOp::A && op != PathOp::Z) {
      zero_move = true;
      for (TokenId p : s.params) zero_move = zero_move && p == zero;
    }
    if (zero_move) {
      ++motifs[static_cast<std::size_t>(Motif::ZeroMoveCommand)];
      if (!before_smooth && !lone_step) {
        ++r.counts.removed[op_letter(op, true)];
        continue;
      }
      r.segments.push_back(s);
      continue;
    }
    if (relative && op == PathOp::A) {
      const bool zero_end = s.params[5] == zero && s.params[6] == zero;
      const bool zero_radius = s.params[0] == zero || s.params[1] == zero;
      if (zero_end || zero_radius) {
        ++motifs[static_cast<std::size_t>(Motif::DegenerateArc)];
        if (zero_end && !before_smooth && !lone_step) {
          ++r.counts.removed['a'];
          continue;
        }
        if (!zero_end) {
          ++r.counts.removed['a'];
          r.segments.push_back(Segment{vocab.command(PathOp::L, true), {s.params[5], s.params[6]}});
          continue;
        }
        r.segments.push_back(s);
        continue;
      }
    }
    if (relative) {
      for (std::size_t k = 0; k < detail::point_pairs(op); ++k)
        if (s.params[2 * k] == zero && s.params[2 * k + 1] == zero)
          ++motifs[static_cast<std::size_t>(Motif::ZeroDeltaPair)];
    }
    r.segments.push_back(s);
  }
  return r;
}

inline TokenSeq flatten_segments(const SegmentList& segs) {
  TokenSeq out;
  for (const auto& s : segs)
    for (TokenId t : s.atoms()) out.push_back(Tok{t});
  return out;
}

/// Cleans every path of an atomic sequence. counts.samples is 1.
inline std::pair<TokenSeq, NoiseCounts> clean_atomic(const TokenSeq& seq, const AtomicVocab& vocab) {
  TokenSeq out;
  NoiseCounts counts;
  counts.samples = 1;
  std::size_t pos = 0;
  for (PathBody b : path_bodies(seq, vocab)) {
    out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(pos), seq.begin() + static_cast<std::ptrdiff_t>(b.begin));
    CleanResult c = clean_segments(parse_segments(seq, b, vocab), vocab);
    TokenSeq flat = flatten_segments(c.segments);
    out.insert(out.end(), flat.begin(), flat.end());
    counts += c.counts;
    pos = b.end;
  }
  out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(pos), seq.end());
  counts.samples = 1;
  return {std::move(out), std::move(counts)};
}

/// Absolute end point after each segment, consecutive repeats collapsed.
inline std::vector<std::pair<long, long>> endpoint_trace(const SegmentList& segs, const AtomicVocab& vocab) {
  std::vector<std::pair<long, long>> out;
  long x = 0, y = 0, sx = 0, sy = 0;
  for (const auto& s : segs) {
    auto [op, rel] = vocab.command_of(s.command);
    auto v = [&](std::size_t k) { return static_cast<long>(vocab.coord_value(s.params[k])); };
    const long bx = rel ? x : 0, by = rel ? y : 0;
    switch (op) {
      case PathOp::M: x = bx + v(0); y = by + v(1); sx = x; sy = y; break;
      case PathOp::H: x = bx + v(0); break;
      case PathOp::V: y = by + v(0); break;
      case PathOp::Z: x = sx; y = sy; break;
      case PathOp::A: x = bx + v(5); y = by + v(6); break;
      default: {
        const std::size_t n = s.params.size();
        x = bx + v(n - 2);
        y = by + v(n - 1);
      }
    }
    if (out.empty() || out.back() != std::pair{x, y}) out.emplace_back(x, y);
  }
  return out;
}

}  // namespace svgtok
