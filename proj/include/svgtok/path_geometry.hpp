#pragma once

#include <vector>

#include "svgtok/svg_ir.hpp"
#include "svgtok/transform.hpp"

namespace svgtok {

/// Rewrites every command in absolute form. H/V stay H/V.
inline PathData to_absolute(const PathData& path) {
  PathData out;
  out.reserve(path.size());
  Point cur, start;
  for (const auto& cmd : path) {
    const auto& p = cmd.params();
    const bool rel = cmd.relative();
    auto px = [&](double v) { return rel ? cur.x + v : v; };
    auto py = [&](double v) { return rel ? cur.y + v : v; };
    switch (cmd.op()) {
      case PathOp::M:
        cur = {px(p[0]), py(p[1])};
        start = cur;
        out.emplace_back(PathOp::M, false, std::vector<double>{cur.x, cur.y});
        break;
      case PathOp::L:
      case PathOp::T:
        cur = {px(p[0]), py(p[1])};
        out.emplace_back(cmd.op(), false, std::vector<double>{cur.x, cur.y});
        break;
      case PathOp::H:
        cur.x = px(p[0]);
        out.emplace_back(PathOp::H, false, std::vector<double>{cur.x});
        break;
      case PathOp::V:
        cur.y = py(p[0]);
        out.emplace_back(PathOp::V, false, std::vector<double>{cur.y});
        break;
      case PathOp::C: {
        std::vector<double> q{px(p[0]), py(p[1]), px(p[2]), py(p[3]), px(p[4]), py(p[5])};
        cur = {q[4], q[5]};
        out.emplace_back(PathOp::C, false, std::move(q));
        break;
      }
      case PathOp::S:
      case PathOp::Q: {
        std::vector<double> q{px(p[0]), py(p[1]), px(p[2]), py(p[3])};
        cur = {q[2], q[3]};
        out.emplace_back(cmd.op(), false, std::move(q));
        break;
      }
      case PathOp::A: {
        std::vector<double> q{p[0], p[1], p[2], px(p[3]), py(p[4])};
        cur = {q[3], q[4]};
        out.emplace_back(PathOp::A, false, std::move(q), cmd.flags());
        break;
      }
      case PathOp::Z:
        cur = start;
        out.emplace_back(PathOp::Z, false, std::vector<double>{});
        break;
    }
  }
  return out;
}

/// Absolute path under an affine map. H/V become L unless the map keeps
/// axes aligned; arc radii and rotation follow the transformed ellipse and
/// the sweep flag flips for orientation-reversing maps.
inline PathData transform_path(const PathData& path, const TransformMatrix& m) {
  PathData abs = to_absolute(path);
  PathData out;
  out.reserve(abs.size());
  Point cur, start;
  const bool aligned = m.axis_aligned();
  for (const auto& cmd : abs) {
    const auto& p = cmd.params();
    auto map_pts = [&](std::size_t n) {
      std::vector<double> q;
      for (std::size_t i = 0; i < n; i += 2) {
        Point t = m.apply({p[i], p[i + 1]});
        q.push_back(t.x);
        q.push_back(t.y);
      }
      return q;
    };
    switch (cmd.op()) {
      case PathOp::M:
        cur = start = {p[0], p[1]};
        out.emplace_back(PathOp::M, false, map_pts(2));
        break;
      case PathOp::L: case PathOp::T: case PathOp::C: case PathOp::S: case PathOp::Q:
        cur = {p[p.size() - 2], p[p.size() - 1]};
        out.emplace_back(cmd.op(), false, map_pts(p.size()));
        break;
      case PathOp::H:
      case PathOp::V: {
        Point end = cmd.op() == PathOp::H ? Point{p[0], cur.y} : Point{cur.x, p[0]};
        Point t = m.apply(end);
        cur = end;
        if (aligned)
          out.emplace_back(cmd.op(), false, std::vector<double>{cmd.op() == PathOp::H ? t.x : t.y});
        else
          out.emplace_back(PathOp::L, false, std::vector<double>{t.x, t.y});
        break;
      }
      case PathOp::A: {
        EllipseShape e = transform_ellipse({std::abs(p[0]), std::abs(p[1]), p[2]}, m);
        Point t = m.apply({p[3], p[4]});
        ArcFlags f = *cmd.flags();
        if (m.determinant() < 0) f.sweep = !f.sweep;
        cur = {p[3], p[4]};
        out.emplace_back(PathOp::A, false, std::vector<double>{e.rx, e.ry, e.rotation_deg, t.x, t.y}, f);
        break;
      }
      case PathOp::Z:
        cur = start;
        out.emplace_back(PathOp::Z, false, std::vector<double>{});
        break;
    }
  }
  return out;
}

/// Absolute end point after each command, Z resolving to the subpath start.
inline std::vector<Point> end_points(const PathData& path) {
  std::vector<Point> out;
  Point cur, start;
  for (const auto& cmd : to_absolute(path)) {
    const auto& p = cmd.params();
    switch (cmd.op()) {
      case PathOp::M: cur = start = {p[0], p[1]}; break;
      case PathOp::H: cur.x = p[0]; break;
      case PathOp::V: cur.y = p[0]; break;
      case PathOp::Z: cur = start; break;
      default: cur = {p[p.size() - 2], p[p.size() - 1]}; break;
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace svgtok
