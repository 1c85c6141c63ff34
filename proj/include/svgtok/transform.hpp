#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "svgtok/error.hpp"
#include "svgtok/svg_ir.hpp"

namespace svgtok {

struct Point {
  double x = 0, y = 0;
  bool operator==(const Point&) const = default;
};

/// 2x3 affine matrix in SVG order: [a c e; b d f; 0 0 1].
struct TransformMatrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  static TransformMatrix identity() { return {}; }
  static TransformMatrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
  static TransformMatrix scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
  static TransformMatrix rotate(double degrees) {
    double r = degrees * std::numbers::pi / 180.0;
    double cs = std::cos(r), sn = std::sin(r);
    return {cs, sn, -sn, cs, 0, 0};
  }
  static TransformMatrix skew_x(double degrees) { return {1, 0, std::tan(degrees * std::numbers::pi / 180.0), 1, 0, 0}; }
  static TransformMatrix skew_y(double degrees) { return {1, std::tan(degrees * std::numbers::pi / 180.0), 0, 1, 0, 0}; }

  /// (*this * rhs) applies rhs first.
  TransformMatrix operator*(const TransformMatrix& r) const {
    return {a * r.a + c * r.b,     b * r.a + d * r.b,     a * r.c + c * r.d,
            b * r.c + d * r.d,     a * r.e + c * r.f + e, b * r.e + d * r.f + f};
  }

  Point apply(Point p) const { return {a * p.x + c * p.y + e, b * p.x + d * p.y + f}; }
  Point apply_vector(Point v) const { return {a * v.x + c * v.y, b * v.x + d * v.y}; }
  double determinant() const { return a * d - b * c; }
  bool is_identity() const { return a == 1 && b == 0 && c == 0 && d == 1 && e == 0 && f == 0; }
  /// No rotation or skew: horizontal lines stay horizontal.
  bool axis_aligned() const { return b == 0 && c == 0; }

  bool operator==(const TransformMatrix&) const = default;
};

/// Parses an SVG transform list ("translate(10,20) rotate(45 5 5) ...").
inline TransformMatrix parse_transform(std::string_view s) {
  TransformMatrix m;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Errc::MalformedMarkup, "transform \"" + std::string(s) + "\": " + why);
  };
  auto skip = [&] {
    while (pos < s.size() && (detail::is_space(s[pos]) || s[pos] == ',')) ++pos;
  };
  skip();
  while (pos < s.size()) {
    std::size_t b = pos;
    while (pos < s.size() && ((s[pos] >= 'a' && s[pos] <= 'z') || (s[pos] >= 'A' && s[pos] <= 'Z'))) ++pos;
    std::string_view name = s.substr(b, pos - b);
    while (pos < s.size() && detail::is_space(s[pos])) ++pos;
    if (pos >= s.size() || s[pos] != '(') fail("expected '('");
    auto close = s.find(')', pos);
    if (close == std::string_view::npos) fail("missing ')'");
    std::vector<double> args;
    try {
      args = parse_number_list(s.substr(pos + 1, close - pos - 1));
    } catch (const Error&) {
      fail("bad arguments");
    }
    pos = close + 1;
    auto n = args.size();
    TransformMatrix t;
    if (name == "matrix" && n == 6) {
      t = {args[0], args[1], args[2], args[3], args[4], args[5]};
    } else if (name == "translate" && (n == 1 || n == 2)) {
      t = TransformMatrix::translate(args[0], n == 2 ? args[1] : 0.0);
    } else if (name == "scale" && (n == 1 || n == 2)) {
      t = TransformMatrix::scale(args[0], n == 2 ? args[1] : args[0]);
    } else if (name == "rotate" && (n == 1 || n == 3)) {
      t = TransformMatrix::rotate(args[0]);
      if (n == 3)
        t = TransformMatrix::translate(args[1], args[2]) * t * TransformMatrix::translate(-args[1], -args[2]);
    } else if (name == "skewX" && n == 1) {
      t = TransformMatrix::skew_x(args[0]);
    } else if (name == "skewY" && n == 1) {
      t = TransformMatrix::skew_y(args[0]);
    } else {
      fail("unsupported function " + std::string(name) + " with " + std::to_string(n) + " arguments");
    }
    m = m * t;
    skip();
  }
  return m;
}

struct EllipseShape {
  double rx = 0, ry = 0, rotation_deg = 0;
};

/// Image of an ellipse (radii + x-axis rotation) under the linear part of
/// `m`. Radii come from the eigen-decomposition of A·Aᵀ where A maps the
/// unit circle onto the transformed ellipse.
inline EllipseShape transform_ellipse(const EllipseShape& el, const TransformMatrix& m) {
  double r = el.rotation_deg * std::numbers::pi / 180.0;
  double cs = std::cos(r), sn = std::sin(r);
  // A = L * R(rot) * diag(rx, ry)
  double a00 = (m.a * cs + m.c * sn) * el.rx;
  double a01 = (-m.a * sn + m.c * cs) * el.ry;
  double a10 = (m.b * cs + m.d * sn) * el.rx;
  double a11 = (-m.b * sn + m.d * cs) * el.ry;
  double s00 = a00 * a00 + a01 * a01;
  double s01 = a00 * a10 + a01 * a11;
  double s11 = a10 * a10 + a11 * a11;
  double mean = (s00 + s11) / 2;
  double diff = (s00 - s11) / 2;
  double disc = std::sqrt(diff * diff + s01 * s01);
  double l1 = mean + disc, l2 = std::max(mean - disc, 0.0);
  double angle = 0.5 * std::atan2(2 * s01, s00 - s11);
  double deg = angle * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return {std::sqrt(l1), std::sqrt(l2), deg};
}

}  // namespace svgtok
