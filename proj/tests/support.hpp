#pragma once

// Test-side helpers: corpus loading, independent oracles and synthetic
// fixture generators. Nothing here calls into the code paths it is used to
// check.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "svgtok/svgtok.hpp"

#ifndef SVGTOK_TEST_DATA
#define SVGTOK_TEST_DATA "tests/data"
#endif

namespace testing_support {

using namespace svgtok;

inline std::filesystem::path data_dir() { return SVGTOK_TEST_DATA; }

struct CorpusFile {
  std::filesystem::path path;
  std::string text;
};

/// Every *.svg under data/icons, sorted by path.
inline const std::vector<CorpusFile>& icon_corpus() {
  static const std::vector<CorpusFile> files = [] {
    std::vector<CorpusFile> out;
    for (auto& f : collect_inputs({(data_dir() / "icons").string()})) out.push_back({f.path, read_file(f.path)});
    return out;
  }();
  return files;
}

// ---------------------------------------------------------------------------
// Brute-force merge oracle. Symbols are plain atom vectors; every round
// recounts all adjacent pairs from scratch and scans an ordered map, so the
// first maximum is the lexicographically smallest (left, right).

using Atoms = std::vector<TokenId>;

struct OracleMerge {
  Atoms left, right;
  std::uint64_t count;
  std::size_t tied = 1;  // pairs sharing the winning count
};

inline std::vector<OracleMerge> oracle_train(std::vector<std::vector<Atoms>> paths, std::size_t merges,
                                             std::uint64_t min_freq) {
  std::vector<OracleMerge> out;
  while (out.size() < merges) {
    std::map<std::pair<Atoms, Atoms>, std::uint64_t> counts;
    for (const auto& p : paths)
      for (std::size_t i = 0; i + 1 < p.size(); ++i) ++counts[{p[i], p[i + 1]}];
    const std::pair<Atoms, Atoms>* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [k, c] : counts)
      if (c > best_count) {
        best = &k;
        best_count = c;
      }
    if (!best || best_count <= min_freq) break;
    std::size_t tied = 0;
    for (const auto& kv : counts) tied += kv.second == best_count;
    OracleMerge m{best->first, best->second, best_count, tied};
    Atoms joined = m.left;
    joined.insert(joined.end(), m.right.begin(), m.right.end());
    for (auto& p : paths) {
      std::vector<Atoms> next;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i + 1 < p.size() && p[i] == m.left && p[i + 1] == m.right) {
          next.push_back(joined);
          ++i;
        } else {
          next.push_back(p[i]);
        }
      }
      p = std::move(next);
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic token-level corpora

/// Hand-built segment: command letter plus integer parameters (arc flags
/// given as 0/1 in positions 3 and 4).
struct SegSpec {
  char letter;
  std::vector<int> params;
};

inline Atoms seg_atoms(const SegSpec& s, const AtomicVocab& v, bool first) {
  auto [op, rel] = *op_from_letter(s.letter);
  Atoms out{v.command(op, rel)};
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    if (op == PathOp::A && i == 3) out.push_back(v.large_flag(s.params[i] != 0));
    else if (op == PathOp::A && i == 4) out.push_back(v.sweep_flag(s.params[i] != 0));
    else out.push_back(first ? *v.abs_coord(s.params[i]) : *v.rel_coord(s.params[i]));
  }
  return out;
}

/// <svg><path>...</path>...</svg> with one path per entry.
inline TokenSeq build_sequence(const std::vector<std::vector<SegSpec>>& paths, const AtomicVocab& v) {
  TokenSeq seq{Tok{*v.open_tag("svg")}, Lit{"viewBox=0 0 784 784"}};
  for (const auto& p : paths) {
    seq.push_back(Tok{*v.open_tag("path")});
    for (std::size_t i = 0; i < p.size(); ++i)
      for (TokenId t : seg_atoms(p[i], v, i == 0)) seq.push_back(Tok{t});
    seq.push_back(Tok{v.close_tag_of(*v.open_tag("path"))});
  }
  seq.push_back(Tok{v.close_tag_of(*v.open_tag("svg"))});
  return seq;
}

/// Small segment alphabet so that pair counts collide and ties occur. No
/// parameter is zero, so cleaning leaves these corpora unchanged.
inline std::vector<SegSpec> segment_alphabet(std::mt19937& rng, std::size_t n) {
  const char letters[] = {'l', 'c', 'h', 'v', 'q', 'a'};
  std::uniform_int_distribution<int> delta(1, 9);
  std::vector<SegSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    char c = letters[rng() % std::size(letters)];
    SegSpec s{c, {}};
    std::size_t n_params = arity(op_from_letter(c)->first);
    for (std::size_t k = 0; k < n_params; ++k) s.params.push_back(delta(rng) * (rng() % 2 ? 1 : -1));
    if (c == 'a') {
      s.params[0] = std::abs(s.params[0]);
      s.params[1] = std::abs(s.params[1]);
      s.params[2] = 0;
      s.params.insert(s.params.begin() + 3, {static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct RandomCorpus {
  std::vector<TokenSeq> sequences;
  std::vector<std::vector<Atoms>> paths;  // per path, segment atoms (oracle input)
};

inline RandomCorpus random_corpus(std::uint32_t seed, std::size_t max_sequences = 100) {
  std::mt19937 rng(seed);
  const AtomicVocab v(784, 10);
  auto alphabet = segment_alphabet(rng, 3 + rng() % 5);
  RandomCorpus c;
  const std::size_t n = 1 + rng() % max_sequences;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::vector<SegSpec>> paths(1 + rng() % 3);
    for (auto& p : paths) {
      p.push_back({'M', {static_cast<int>(rng() % 700), static_cast<int>(rng() % 700)}});
      const std::size_t len = rng() % 12;
      for (std::size_t i = 0; i < len; ++i) p.push_back(alphabet[rng() % alphabet.size()]);
      std::vector<Atoms> atoms;
      for (std::size_t i = 0; i < p.size(); ++i) atoms.push_back(seg_atoms(p[i], v, i == 0));
      c.paths.push_back(std::move(atoms));
    }
    c.sequences.push_back(build_sequence(paths, v));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Noise injection

struct InjectedNoise {
  std::vector<std::vector<SegSpec>> clean_paths;  // before injection
  std::vector<std::vector<SegSpec>> noisy_paths;
  std::map<char, std::size_t> removals;           // expected removed_per_command counts
  std::size_t zero_move = 0, zero_pair = 0, degenerate_arc = 0;
};

/// Paths of non-zero l/c/q segments with motifs inserted at known places:
/// zero-move commands of every relative type, segments holding exactly one
/// zero point pair, zero-radius arcs and zero-endpoint arcs. Insertions never
/// precede a smooth command and never sit directly after the moveto.
inline InjectedNoise inject_noise(std::uint32_t seed, std::size_t n_paths) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> delta(1, 20);
  auto nz = [&] { return delta(rng) * (rng() % 2 ? 1 : -1); };
  InjectedNoise r;
  for (std::size_t p = 0; p < n_paths; ++p) {
    std::vector<SegSpec> base{{'M', {static_cast<int>(100 + rng() % 500), static_cast<int>(100 + rng() % 500)}}};
    const std::size_t len = 3 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) {
      switch (rng() % 3) {
        case 0: base.push_back({'l', {nz(), nz()}}); break;
        case 1: base.push_back({'c', {nz(), nz(), nz(), nz(), nz(), nz()}}); break;
        default: base.push_back({'q', {nz(), nz(), nz(), nz()}}); break;
      }
    }
    std::vector<SegSpec> noisy{base[0], base[1]};
    for (std::size_t i = 2; i < base.size(); ++i) {
      const int kind = static_cast<int>(rng() % 6);
      switch (kind) {
        case 0: {
          const char zm[] = {'l', 'c', 's', 'q', 't', 'h', 'v'};
          char c = zm[rng() % std::size(zm)];
          noisy.push_back({c, std::vector<int>(arity(op_from_letter(c)->first), 0)});
          ++r.zero_move;
          ++r.removals[c];
          break;
        }
        case 1:
          noisy.push_back({'c', {0, 0, nz(), nz(), nz(), nz()}});
          ++r.zero_pair;
          break;
        case 2:
          noisy.push_back({'a', {0, std::abs(nz()), 0, 0, 1, nz(), nz()}});
          ++r.degenerate_arc;
          ++r.removals['a'];
          break;
        case 3:
          noisy.push_back({'a', {std::abs(nz()), std::abs(nz()), 0, 1, 0, 0, 0}});
          ++r.degenerate_arc;
          ++r.removals['a'];
          break;
        default: break;
      }
      noisy.push_back(base[i]);
    }
    r.clean_paths.push_back(std::move(base));
    r.noisy_paths.push_back(std::move(noisy));
  }
  return r;
}

/// Absolute end points of a segment list, repeats collapsed; computed from
/// the specs directly.
inline std::vector<std::pair<long, long>> spec_endpoints(const std::vector<SegSpec>& segs) {
  std::vector<std::pair<long, long>> out;
  long x = 0, y = 0;
  for (const auto& s : segs) {
    const auto& p = s.params;
    switch (s.letter) {
      case 'M': x = p[0]; y = p[1]; break;
      case 'h': x += p[0]; break;
      case 'v': y += p[0]; break;
      case 'a': x += p[5]; y += p[6]; break;
      default: x += p[p.size() - 2]; y += p[p.size() - 1]; break;
    }
    if (out.empty() || out.back() != std::pair{x, y}) out.emplace_back(x, y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transform fixtures

struct Mat {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;
  Mat then(const Mat& o) const {  // o applied after *this
    return {o.a * a + o.c * b, o.b * a + o.d * b, o.a * c + o.c * d,
            o.b * c + o.d * d, o.a * e + o.c * f + o.e, o.b * e + o.d * f + o.f};
  }
  std::pair<double, double> map(double x, double y) const { return {a * x + c * y + e, b * x + d * y + f}; }
};

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double printed(double v) { return std::strtod(num(v).c_str(), nullptr); }

/// Random transform list: the SVG string and its matrix. Parameters are
/// rounded to their printed form first so text and matrix agree exactly.
inline std::pair<std::string, Mat> random_transform(std::mt19937& rng) {
  std::uniform_real_distribution<double> u_raw(0, 1);
  auto u = [&](std::mt19937& g) { return u_raw(g); };
  std::string text;
  Mat m;  // accumulated; list items apply right to left
  const int n = 1 + static_cast<int>(rng() % 3);
  std::vector<std::pair<std::string, Mat>> items;
  for (int i = 0; i < n; ++i) {
    const double r = std::numbers::pi / 180.0;
    switch (rng() % 6) {
      case 0: {
        double tx = printed(u(rng) * 80 - 40), ty = printed(u(rng) * 80 - 40);
        items.push_back({"translate(" + num(tx) + " " + num(ty) + ")", {1, 0, 0, 1, tx, ty}});
        break;
      }
      case 1: {
        double sx = printed(0.3 + u(rng) * 2), sy = printed(0.3 + u(rng) * 2);
        if (rng() % 4 == 0) sx = -sx;
        items.push_back({"scale(" + num(sx) + "," + num(sy) + ")", {sx, 0, 0, sy, 0, 0}});
        break;
      }
      case 2: {
        double a = printed(u(rng) * 360 - 180);
        double cs = std::cos(a * r), sn = std::sin(a * r);
        items.push_back({"rotate(" + num(a) + ")", {cs, sn, -sn, cs, 0, 0}});
        break;
      }
      case 3: {
        double a = printed(u(rng) * 360 - 180), cx = printed(u(rng) * 50), cy = printed(u(rng) * 50);
        double cs = std::cos(a * r), sn = std::sin(a * r);
        Mat rot{cs, sn, -sn, cs, 0, 0};
        Mat mm = Mat{1, 0, 0, 1, -cx, -cy}.then(rot).then(Mat{1, 0, 0, 1, cx, cy});
        items.push_back({"rotate(" + num(a) + " " + num(cx) + " " + num(cy) + ")", mm});
        break;
      }
      case 4: {
        double a = printed(u(rng) * 60 - 30);
        if (rng() % 2)
          items.push_back({"skewX(" + num(a) + ")", {1, 0, std::tan(a * r), 1, 0, 0}});
        else
          items.push_back({"skewY(" + num(a) + ")", {1, std::tan(a * r), 0, 1, 0, 0}});
        break;
      }
      default: {
        Mat mm{printed(0.5 + u(rng)), printed(u(rng) - 0.5), printed(u(rng) - 0.5),
               printed(0.5 + u(rng)), printed(u(rng) * 20), printed(u(rng) * 20)};
        items.push_back({"matrix(" + num(mm.a) + " " + num(mm.b) + " " + num(mm.c) + " " + num(mm.d) + " " +
                             num(mm.e) + " " + num(mm.f) + ")",
                         mm});
      }
    }
  }
  // "A B C" maps p to A(B(C(p)))
  for (auto it = items.rbegin(); it != items.rend(); ++it) m = m.then(it->second);
  for (std::size_t i = 0; i < items.size(); ++i) text += (i ? " " : "") + items[i].first;
  return {text, m};
}

struct TransformFixture {
  std::string svg;
  std::vector<std::vector<std::pair<double, double>>> expected;  // per command, canvas-space points
};

/// One path with absolute M/L/C/Q/H/V commands under a group transform and
/// a path transform. The viewBox encloses the transformed geometry, so the
/// expected canvas positions never need clamping.
inline TransformFixture transform_fixture(std::uint32_t seed, int canvas = 784) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coord(0, 100);
  auto [gtext, gm] = random_transform(rng);
  auto [ptext, pm] = random_transform(rng);
  const Mat total = pm.then(gm);  // path transform first, then group

  struct Cmd {
    char letter;
    std::vector<std::pair<double, double>> pts;  // source points
  };
  std::vector<Cmd> cmds;
  double cx = coord(rng), cy = coord(rng);
  cmds.push_back({'M', {{cx, cy}}});
  const int n = 3 + static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) {
    switch (rng() % 5) {
      case 0: cmds.push_back({'L', {{coord(rng), coord(rng)}}}); break;
      case 1: cmds.push_back({'C', {{coord(rng), coord(rng)}, {coord(rng), coord(rng)}, {coord(rng), coord(rng)}}}); break;
      case 2: cmds.push_back({'Q', {{coord(rng), coord(rng)}, {coord(rng), coord(rng)}}}); break;
      case 3: cmds.push_back({'H', {{coord(rng), 0}}}); break;
      default: cmds.push_back({'V', {{0, coord(rng)}}}); break;
    }
    auto& c = cmds.back();
    if (c.letter == 'H') c.pts[0].second = cy;
    if (c.letter == 'V') c.pts[0].first = cx;
    cx = c.pts.back().first;
    cy = c.pts.back().second;
  }
  std::string d;
  for (const auto& c : cmds) {
    d += c.letter;
    for (auto [x, y] : c.pts) {
      if (c.letter == 'H') d += " " + num(x);
      else if (c.letter == 'V') d += " " + num(y);
      else d += " " + num(x) + " " + num(y);
    }
    d += " ";
  }
  // Bounding box of the transformed points, using the same %.6g values the
  // document carries.
  auto parsed = [](double v) { return std::strtod(num(v).c_str(), nullptr); };
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  std::vector<std::vector<std::pair<double, double>>> world;
  for (const auto& c : cmds) {
    std::vector<std::pair<double, double>> w;
    for (auto [x, y] : c.pts) {
      auto p = total.map(parsed(x), parsed(y));
      minx = std::min(minx, p.first);
      maxx = std::max(maxx, p.first);
      miny = std::min(miny, p.second);
      maxy = std::max(maxy, p.second);
      w.push_back(p);
    }
    world.push_back(std::move(w));
  }
  const double vx = std::floor(minx) - 2, vy = std::floor(miny) - 2;
  const double vw = std::ceil(maxx - vx) + 2, vh = std::ceil(maxy - vy) + 2;
  const double s = canvas / std::max(vw, vh);
  TransformFixture fx;
  for (auto& w : world) {
    for (auto& [x, y] : w) {
      x = (x - vx) * s;
      y = (y - vy) * s;
    }
    fx.expected.push_back(std::move(w));
  }
  fx.svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(vx) + " " + num(vy) + " " + num(vw) + " " +
           num(vh) + "\"><g transform=\"" + gtext + "\"><path transform=\"" + ptext + "\" d=\"" + d +
           "\"/></g></svg>";
  return fx;
}

/// Absolute positions of every point of every command in a quantized path,
/// accumulated from the integer parameters.
inline std::vector<std::vector<std::pair<double, double>>> reconstruct_points(const PathData& path) {
  std::vector<std::vector<std::pair<double, double>>> out;
  double x = 0, y = 0;
  for (const auto& cmd : path) {
    const auto& p = cmd.params();
    const double bx = cmd.relative() ? x : 0, by = cmd.relative() ? y : 0;
    std::vector<std::pair<double, double>> pts;
    switch (cmd.op()) {
      case PathOp::H: x = bx + p[0]; pts.push_back({x, y}); break;
      case PathOp::V: y = by + p[0]; pts.push_back({x, y}); break;
      case PathOp::Z: break;
      default:
        for (std::size_t i = 0; i + 1 < p.size(); i += 2) pts.push_back({bx + p[i], by + p[i + 1]});
        x = pts.back().first;
        y = pts.back().second;
    }
    out.push_back(std::move(pts));
  }
  return out;
}

inline const Element* first_path(const Element& e) {
  if (e.tag == "path") return &e;
  for (const auto& c : e.children)
    if (auto* p = first_path(c)) return p;
  return nullptr;
}

}  // namespace testing_support
