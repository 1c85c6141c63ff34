#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "svgtok/color.hpp"
#include "svgtok/error.hpp"
#include "svgtok/path_geometry.hpp"
#include "svgtok/svg_ir.hpp"
#include "svgtok/transform.hpp"

namespace svgtok {

struct PreprocessConfig {
  int canvas = 784;
  int overflow_tolerance = 10;
  std::set<std::string> reject_tags = {"script", "image"};
  std::set<std::string> drop_tags = {"foreignObject"};
  bool dark_background = false;

  void validate() const {
    if (canvas < 1) throw Error(Errc::DomainError, "canvas must be >= 1");
    if (overflow_tolerance < 0) throw Error(Errc::DomainError, "overflow tolerance must be >= 0");
  }
};

/// Fill applied to paths that inherit no fill at all.
inline constexpr std::string_view kDefaultFill = "#000000";

namespace detail {

inline const std::set<std::string_view>& inheritable_properties() {
  static const std::set<std::string_view> s = {
      "fill",         "fill-opacity",     "fill-rule",         "stroke",      "stroke-width",
      "stroke-opacity", "stroke-linecap", "stroke-linejoin",   "stroke-miterlimit", "stroke-dasharray",
      "stroke-dashoffset", "clip-rule",   "color",             "font-family", "font-size",
      "font-weight",  "font-style",       "text-anchor",       "visibility",  "paint-order"};
  return s;
}

inline const std::set<std::string_view>& other_presentation_properties() {
  static const std::set<std::string_view> s = {"opacity",   "display",    "clip-path", "mask",
                                               "stop-color", "stop-opacity", "transform"};
  return s;
}

inline bool is_presentation(std::string_view name) {
  return inheritable_properties().count(name) || other_presentation_properties().count(name);
}

inline bool is_paint_property(std::string_view name) {
  return name == "fill" || name == "stroke" || name == "stop-color" || name == "color";
}

// Geometry and reference attributes each element keeps through cleaning.
inline bool is_element_attribute(std::string_view tag, std::string_view name) {
  static const std::map<std::string_view, std::set<std::string_view>> table = {
      {"use", {"href", "xlink:href", "x", "y", "width", "height"}},
      {"rect", {"x", "y", "width", "height", "rx", "ry"}},
      {"circle", {"cx", "cy", "r"}},
      {"ellipse", {"cx", "cy", "rx", "ry"}},
      {"line", {"x1", "y1", "x2", "y2"}},
      {"polyline", {"points"}},
      {"polygon", {"points"}},
      {"svg", {"x", "y", "width", "height"}},
      {"linearGradient", {"x1", "y1", "x2", "y2", "gradientUnits", "gradientTransform", "spreadMethod", "href", "xlink:href"}},
      {"radialGradient", {"cx", "cy", "r", "fx", "fy", "fr", "gradientUnits", "gradientTransform", "spreadMethod", "href", "xlink:href"}},
      {"stop", {"offset"}},
      {"clipPath", {"clipPathUnits"}},
      {"mask", {"maskUnits", "maskContentUnits", "x", "y", "width", "height"}},
      {"pattern", {"patternUnits", "patternContentUnits", "patternTransform", "x", "y", "width", "height", "viewBox"}},
      {"symbol", {"viewBox"}},
      {"text", {"x", "y", "dx", "dy"}},
  };
  auto it = table.find(tag);
  return it != table.end() && it->second.count(name);
}

inline std::string strip_css_comments(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.substr(i, 2) == "/*") {
      auto e = s.find("*/", i + 2);
      if (e == std::string_view::npos) break;
      i = e + 1;
      continue;
    }
    out += s[i];
  }
  return out;
}

inline std::vector<Attribute> parse_declarations(std::string_view block) {
  std::vector<Attribute> out;
  std::string s = strip_css_comments(block);
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto semi = s.find(';', pos);
    if (semi == std::string::npos) semi = s.size();
    std::string_view decl(s.data() + pos, semi - pos);
    pos = semi + 1;
    auto colon = decl.find(':');
    if (colon == std::string_view::npos) continue;
    std::string name = lower(trim(decl.substr(0, colon)));
    std::string value = trim(decl.substr(colon + 1));
    if (auto imp = value.find("!important"); imp != std::string::npos) value = trim(value.substr(0, imp));
    if (!name.empty() && !value.empty()) out.push_back({name, value});
  }
  return out;
}

struct CssRule {
  std::string tag;    // empty: any
  std::string klass;  // empty: none required
  std::string id;     // empty: none required
  int specificity = 0;
  std::vector<Attribute> declarations;
};

// Only simple selectors (tag, .class, #id and their compounds) are honoured.
inline std::vector<CssRule> parse_stylesheet(std::string_view sheet) {
  std::vector<CssRule> rules;
  std::string s = strip_css_comments(sheet);
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto open = s.find('{', pos);
    if (open == std::string::npos) break;
    auto close = s.find('}', open);
    if (close == std::string::npos) break;
    std::string selectors = s.substr(pos, open - pos);
    auto decls = parse_declarations(std::string_view(s).substr(open + 1, close - open - 1));
    pos = close + 1;
    std::size_t sp = 0;
    while (sp <= selectors.size()) {
      auto comma = selectors.find(',', sp);
      if (comma == std::string::npos) comma = selectors.size();
      std::string sel = trim(std::string_view(selectors).substr(sp, comma - sp));
      sp = comma + 1;
      if (sel.empty() || sel.find_first_of(" >+~:[*") != std::string::npos) continue;
      CssRule rule;
      rule.declarations = decls;
      std::size_t i = 0;
      auto read_ident = [&] {
        std::size_t b = i;
        while (i < sel.size() && sel[i] != '.' && sel[i] != '#') ++i;
        return sel.substr(b, i - b);
      };
      rule.tag = read_ident();
      bool ok = true;
      while (i < sel.size()) {
        char kind = sel[i++];
        std::string ident = read_ident();
        if (ident.empty()) { ok = false; break; }
        if (kind == '.') {
          if (!rule.klass.empty()) { ok = false; break; }
          rule.klass = ident;
        } else {
          rule.id = ident;
        }
      }
      if (!ok) continue;
      rule.specificity = (rule.id.empty() ? 0 : 100) + (rule.klass.empty() ? 0 : 10) + (rule.tag.empty() ? 0 : 1);
      rules.push_back(std::move(rule));
    }
  }
  std::stable_sort(rules.begin(), rules.end(),
                   [](const CssRule& a, const CssRule& b) { return a.specificity < b.specificity; });
  return rules;
}

inline bool has_class(const Element& e, std::string_view klass) {
  const std::string* c = e.attr("class");
  if (!c) return false;
  std::size_t pos = 0;
  while (pos < c->size()) {
    auto sp = c->find_first_of(" \t\n", pos);
    if (sp == std::string::npos) sp = c->size();
    if (std::string_view(*c).substr(pos, sp - pos) == klass) return true;
    pos = sp + 1;
  }
  return false;
}

inline bool matches(const CssRule& r, const Element& e) {
  if (!r.tag.empty() && r.tag != e.tag) return false;
  if (!r.klass.empty() && !has_class(e, r.klass)) return false;
  if (!r.id.empty()) {
    const std::string* id = e.attr("id");
    if (!id || *id != r.id) return false;
  }
  return true;
}

inline std::string href_target(const Element& e) {
  const std::string* h = e.attr("href");
  if (!h) h = e.attr("xlink:href");
  if (!h || h->empty() || (*h)[0] != '#') return {};
  return h->substr(1);
}

inline void collect_url_refs(std::string_view value, std::set<std::string>& out) {
  std::size_t pos = 0;
  while ((pos = value.find("url(", pos)) != std::string_view::npos) {
    auto close = value.find(')', pos);
    if (close == std::string_view::npos) return;
    std::string inner = trim(value.substr(pos + 4, close - pos - 4));
    if (!inner.empty() && (inner.front() == '"' || inner.front() == '\'')) inner = inner.substr(1, inner.size() - 2);
    if (!inner.empty() && inner[0] == '#') out.insert(inner.substr(1));
    pos = close;
  }
}

inline std::set<std::string> referenced_ids(const Element& root, bool include_use) {
  std::set<std::string> out;
  for_each_element(root, [&](const Element& e) {
    for (const auto& a : e.attributes) collect_url_refs(a.value, out);
    if (include_use || e.tag != "use") {
      if (auto t = href_target(e); !t.empty()) out.insert(t);
    }
  });
  return out;
}

inline double length_attr(const Element& e, std::string_view name, double fallback = 0.0) {
  const std::string* v = e.attr(name);
  return v ? parse_length(*v) : fallback;
}

inline std::vector<double> pts(std::initializer_list<double> v) { return std::vector<double>(v); }

// Basic shape as an equivalent path; nullopt when the shape renders nothing.
inline std::optional<PathData> shape_to_path(const Element& e) {
  PathData d;
  auto arc = [&](double rx, double ry, bool large, bool sweep, double x, double y) {
    d.emplace_back(PathOp::A, false, pts({rx, ry, 0, x, y}), ArcFlags{large, sweep});
  };
  if (e.tag == "rect") {
    double x = length_attr(e, "x"), y = length_attr(e, "y");
    double w = length_attr(e, "width"), h = length_attr(e, "height");
    if (w <= 0 || h <= 0) return std::nullopt;
    const std::string* rxs = e.attr("rx");
    const std::string* rys = e.attr("ry");
    double rx = rxs ? parse_length(*rxs) : -1, ry = rys ? parse_length(*rys) : -1;
    if (rx < 0) rx = ry;
    if (ry < 0) ry = rx;
    rx = std::clamp(rx, 0.0, w / 2);
    ry = std::clamp(ry, 0.0, h / 2);
    if (rx <= 0 || ry <= 0) {
      d.emplace_back(PathOp::M, false, pts({x, y}));
      d.emplace_back(PathOp::H, false, pts({x + w}));
      d.emplace_back(PathOp::V, false, pts({y + h}));
      d.emplace_back(PathOp::H, false, pts({x}));
      d.emplace_back(PathOp::Z, false, pts({}));
    } else {
      d.emplace_back(PathOp::M, false, pts({x + rx, y}));
      d.emplace_back(PathOp::H, false, pts({x + w - rx}));
      arc(rx, ry, false, true, x + w, y + ry);
      d.emplace_back(PathOp::V, false, pts({y + h - ry}));
      arc(rx, ry, false, true, x + w - rx, y + h);
      d.emplace_back(PathOp::H, false, pts({x + rx}));
      arc(rx, ry, false, true, x, y + h - ry);
      d.emplace_back(PathOp::V, false, pts({y + ry}));
      arc(rx, ry, false, true, x + rx, y);
      d.emplace_back(PathOp::Z, false, pts({}));
    }
    return d;
  }
  if (e.tag == "circle" || e.tag == "ellipse") {
    double cx = length_attr(e, "cx"), cy = length_attr(e, "cy");
    double rx, ry;
    if (e.tag == "circle") {
      rx = ry = length_attr(e, "r");
    } else {
      const std::string* rxs = e.attr("rx");
      const std::string* rys = e.attr("ry");
      rx = rxs ? parse_length(*rxs) : (rys ? parse_length(*rys) : 0);
      ry = rys ? parse_length(*rys) : rx;
    }
    if (rx <= 0 || ry <= 0) return std::nullopt;
    d.emplace_back(PathOp::M, false, pts({cx - rx, cy}));
    arc(rx, ry, true, false, cx + rx, cy);
    arc(rx, ry, true, false, cx - rx, cy);
    d.emplace_back(PathOp::Z, false, pts({}));
    return d;
  }
  if (e.tag == "line") {
    d.emplace_back(PathOp::M, false, pts({length_attr(e, "x1"), length_attr(e, "y1")}));
    d.emplace_back(PathOp::L, false, pts({length_attr(e, "x2"), length_attr(e, "y2")}));
    return d;
  }
  // polyline / polygon
  const std::string* p = e.attr("points");
  std::vector<double> v = p ? parse_number_list(*p) : std::vector<double>{};
  if (v.size() % 2) v.pop_back();
  if (v.size() < 2) return std::nullopt;
  d.emplace_back(PathOp::M, false, pts({v[0], v[1]}));
  for (std::size_t i = 2; i + 1 < v.size(); i += 2) d.emplace_back(PathOp::L, false, pts({v[i], v[i + 1]}));
  if (e.tag == "polygon") d.emplace_back(PathOp::Z, false, pts({}));
  return d;
}

inline bool is_basic_shape(std::string_view tag) {
  return tag == "rect" || tag == "circle" || tag == "ellipse" || tag == "line" || tag == "polyline" ||
         tag == "polygon";
}

struct CleanContext {
  const PreprocessConfig& cfg;
  std::vector<CssRule> rules;
  std::set<std::string> keep_ids;
};

inline void check_rejected(const Element& e, const PreprocessConfig& cfg) {
  for_each_element(e, [&](const Element& x) {
    if (cfg.reject_tags.count(x.tag)) throw Error(Errc::RejectedContent, "<" + x.tag + "> is not accepted");
  });
}

inline void gather_styles(const Element& e, std::string& sheet) {
  for_each_element(e, [&](const Element& x) {
    if (x.tag == "style") sheet += x.text + "\n";
  });
}

// Nested <svg> viewports become groups positioned by x/y and viewBox.
inline void flatten_nested_svg(Element& e) {
  double x = length_attr(e, "x"), y = length_attr(e, "y");
  TransformMatrix m = TransformMatrix::translate(x, y);
  if (const std::string* vb = e.attr("viewBox")) {
    ViewBox v = parse_viewbox(*vb);
    const std::string* ws = e.attr("width");
    const std::string* hs = e.attr("height");
    if (v.width > 0 && v.height > 0 && ws && hs) {
      double s = std::min(parse_length(*ws, true) / v.width, parse_length(*hs, true) / v.height);
      m = m * TransformMatrix::scale(s, s) * TransformMatrix::translate(-v.min_x, -v.min_y);
    }
  }
  e.tag = "g";
  for (auto n : {"x", "y", "width", "height", "viewBox", "preserveAspectRatio"}) e.erase_attr(n);
  if (!m.is_identity()) {
    std::string t = "matrix(" + format_number(m.a) + " " + format_number(m.b) + " " + format_number(m.c) + " " +
                    format_number(m.d) + " " + format_number(m.e) + " " + format_number(m.f) + ")";
    const std::string* own = e.attr("transform");
    e.set_attr("transform", own ? *own + " " + t : t);
  }
}

inline void clean_element(Element& e, CleanContext& ctx, const std::string& current_color, bool is_root) {
  if (!is_root && e.tag == "svg") flatten_nested_svg(e);

  // stylesheet rules, then the inline style attribute, override attributes
  std::vector<Attribute> css;
  for (const auto& r : ctx.rules)
    if (matches(r, e)) css.insert(css.end(), r.declarations.begin(), r.declarations.end());
  if (const std::string* st = e.attr("style")) {
    auto inl = parse_declarations(*st);
    css.insert(css.end(), inl.begin(), inl.end());
  }
  for (const auto& d : css)
    if (is_presentation(d.name) && d.name != "transform") e.set_attr(d.name, d.value);

  std::vector<Attribute> kept;
  for (auto& a : e.attributes) {
    if (a.name == "id") {
      if (ctx.keep_ids.count(a.value)) kept.push_back(a);
      continue;
    }
    if (is_presentation(a.name) || is_element_attribute(e.tag, a.name)) kept.push_back(a);
  }
  e.attributes = std::move(kept);

  std::string color = current_color;
  if (const std::string* c = e.attr("color")) {
    std::string n = normalize_color(*c, current_color);
    e.set_attr("color", n);
    color = n;
  }
  for (auto& a : e.attributes)
    if (is_paint_property(a.name) && a.name != "color") a.value = normalize_color(a.value, color);

  if (is_basic_shape(e.tag)) {
    auto path = shape_to_path(e);
    std::vector<Attribute> presentation;
    for (auto& a : e.attributes)
      if (!is_element_attribute(e.tag, a.name)) presentation.push_back(a);
    e.tag = path ? "path" : "";
    e.attributes = std::move(presentation);
    e.path_data = std::move(path);
    e.children.clear();
    e.text.clear();
  }

  std::vector<Element> children;
  for (auto& c : e.children) {
    if (ctx.cfg.drop_tags.count(c.tag) || !is_structure_element(c.tag)) continue;
    clean_element(c, ctx, color, false);
    if (c.tag.empty()) continue;
    children.push_back(std::move(c));
  }
  e.children = std::move(children);
}

inline void repair_fill(Element& e, bool inherited_fill) {
  if (e.tag == "defs" || e.tag == "symbol" || e.tag == "clipPath" || e.tag == "mask" || e.tag == "pattern") return;
  bool has = inherited_fill || e.attr("fill") != nullptr;
  if (e.tag == "path" && !has) {
    e.set_attr("fill", std::string(kDefaultFill));
    has = true;
  }
  for (auto& c : e.children) repair_fill(c, has);
}

}  // namespace detail

/// Removes unsupported and unsafe content and normalises attributes: CSS
/// inlined, colors in 6-digit hex, basic shapes rewritten as paths, root
/// reduced to its viewBox, missing fills repaired.
inline SvgDocument clean_document(const SvgDocument& input, const PreprocessConfig& cfg) {
  detail::check_rejected(input.root, cfg);
  SvgDocument doc = input;

  if (!doc.viewbox) {
    const std::string* w = doc.root.attr("width");
    const std::string* h = doc.root.attr("height");
    if (w && h) {
      try {
        doc.viewbox = ViewBox{0, 0, parse_length(*w, true), parse_length(*h, true)};
      } catch (const Error&) {
        throw Error(Errc::DegenerateViewBox, "no viewBox and unusable width/height");
      }
    }
  }

  std::string sheet;
  detail::gather_styles(doc.root, sheet);
  detail::CleanContext ctx{cfg, detail::parse_stylesheet(sheet), detail::referenced_ids(doc.root, true)};
  detail::clean_element(doc.root, ctx, std::string(kDefaultFill), true);

  // Root keeps only its viewBox; inheritable presentation moves to a group.
  std::vector<Attribute> inherited;
  for (const auto& a : doc.root.attributes)
    if (detail::inheritable_properties().count(a.name)) inherited.push_back(a);
  doc.root.attributes.clear();
  doc.root.text.clear();
  if (!inherited.empty() && !doc.root.children.empty()) {
    Element g;
    g.tag = "g";
    g.attributes = std::move(inherited);
    g.children = std::move(doc.root.children);
    doc.root.children.clear();
    doc.root.children.push_back(std::move(g));
  }
  detail::repair_fill(doc.root, false);
  return doc;
}

namespace detail {

inline void strip_ids(Element& e) {
  for_each_element(e, [](Element& x) { x.erase_attr("id"); });
}

inline void index_ids(const Element& e, std::unordered_map<std::string, const Element*>& out) {
  for_each_element(e, [&](const Element& x) {
    if (const std::string* id = x.attr("id")) out.emplace(*id, &x);
  });
}

inline Element expand_use_element(const Element& use, const std::unordered_map<std::string, const Element*>& ids,
                                  int depth);

inline void expand_in(Element& e, const std::unordered_map<std::string, const Element*>& ids, int depth) {
  for (auto& c : e.children) {
    if (c.tag == "use") c = expand_use_element(c, ids, depth);
    else expand_in(c, ids, depth);
  }
}

inline Element expand_use_element(const Element& use, const std::unordered_map<std::string, const Element*>& ids,
                                  int depth) {
  if (depth > 32) throw Error(Errc::MalformedMarkup, "<use> references nest too deeply (cycle?)");
  std::string target = href_target(use);
  auto it = ids.find(target);
  if (target.empty() || it == ids.end())
    throw Error(Errc::DanglingReference, "<use> references missing id \"" + target + "\"");
  Element copy = *it->second;
  strip_ids(copy);
  if (copy.tag == "symbol") {
    TransformMatrix m;
    if (const std::string* vb = copy.attr("viewBox")) {
      ViewBox v = parse_viewbox(*vb);
      const std::string* ws = use.attr("width");
      const std::string* hs = use.attr("height");
      if (v.width > 0 && v.height > 0 && ws && hs) {
        double s = std::min(parse_length(*ws) / v.width, parse_length(*hs) / v.height);
        m = TransformMatrix::scale(s, s) * TransformMatrix::translate(-v.min_x, -v.min_y);
      }
    }
    copy.tag = "g";
    copy.erase_attr("viewBox");
    if (!m.is_identity())
      copy.set_attr("transform", "matrix(" + format_number(m.a) + " " + format_number(m.b) + " " +
                                     format_number(m.c) + " " + format_number(m.d) + " " + format_number(m.e) +
                                     " " + format_number(m.f) + ")");
  }
  if (copy.tag == "use") copy = expand_use_element(copy, ids, depth + 1);
  else expand_in(copy, ids, depth + 1);

  Element g;
  g.tag = "g";
  for (const auto& a : use.attributes) {
    if (a.name == "href" || a.name == "xlink:href" || a.name == "x" || a.name == "y" || a.name == "width" ||
        a.name == "height" || a.name == "transform" || a.name == "id")
      continue;
    g.attributes.push_back(a);
  }
  double x = length_attr(use, "x"), y = length_attr(use, "y");
  std::string transform;
  if (const std::string* t = use.attr("transform")) transform = *t;
  if (x != 0 || y != 0) {
    if (!transform.empty()) transform += " ";
    transform += "translate(" + format_number(x) + "," + format_number(y) + ")";
  }
  if (!transform.empty()) g.set_attr("transform", transform);
  g.children.push_back(std::move(copy));
  return g;
}

inline void prune_use_targets(Element& e, const std::set<std::string>& targets, const std::set<std::string>& urls,
                              bool in_defs) {
  std::vector<Element> kept;
  for (auto& c : e.children) {
    if (c.tag == "symbol") continue;
    const std::string* id = c.attr("id");
    if (in_defs && id && targets.count(*id) && !urls.count(*id)) continue;
    prune_use_targets(c, targets, urls, in_defs || c.tag == "defs");
    if (c.tag == "defs" && c.children.empty()) continue;
    kept.push_back(std::move(c));
  }
  e.children = std::move(kept);
}

}  // namespace detail

/// Inlines every <use> as a group holding a copy of its target, offset by
/// the use element's x/y. Targets living in <defs> (and all <symbol>s) are
/// removed afterwards unless something else still references them.
inline SvgDocument expand_use(const SvgDocument& input) {
  bool any = false;
  for_each_element(input.root, [&](const Element& e) { any = any || e.tag == "use"; });
  if (!any) return input;

  SvgDocument doc = input;
  std::unordered_map<std::string, const Element*> ids;
  detail::index_ids(input.root, ids);
  std::set<std::string> targets;
  for_each_element(input.root, [&](const Element& e) {
    if (e.tag == "use") targets.insert(detail::href_target(e));
  });
  detail::expand_in(doc.root, ids, 0);
  std::set<std::string> urls = detail::referenced_ids(doc.root, false);
  detail::prune_use_targets(doc.root, targets, urls, false);
  return doc;
}

namespace detail {

inline constexpr double kSingularTolerance = 1e-9;

struct ScaledProperty {
  std::string_view name;
  double initial;
  std::string_view applies_to;  // element that receives an explicit value when inheriting would change it
};

// Stroke width and font size are lengths in local units. When an element's
// coordinate system collapses into the root's, the rendered length is kept
// by rewriting explicit values and pinning inherited ones where they land.
inline constexpr ScaledProperty kScaledProperties[] = {{"stroke-width", 1.0, "path"}, {"font-size", 16.0, "text"}};

struct PropertyState {
  double specified[2];  // inherited value, in the element's original units
  double flattened[2];  // inherited value after flattening
  bool stroked = false;
};

inline void apply_affine(Element& e, const TransformMatrix& parent, PropertyState state, bool consume_transform) {
  TransformMatrix m = parent;
  if (consume_transform) {
    if (const std::string* t = e.attr("transform")) {
      m = parent * parse_transform(*t);
      e.erase_attr("transform");
    }
  }
  if (std::abs(m.determinant()) < kSingularTolerance)
    throw Error(Errc::SingularTransform, "transform on <" + e.tag + "> has zero determinant");
  const double scale = std::sqrt(std::abs(m.determinant()));
  if (const std::string* s = e.attr("stroke")) state.stroked = *s != "none";

  for (int i = 0; i < 2; ++i) {
    const auto& prop = kScaledProperties[i];
    const std::string* own = e.attr(prop.name);
    if (own) {
      try {
        state.specified[i] = parse_length(*own);
      } catch (const Error&) {
        continue;  // unit-bearing or keyword values are left alone
      }
    }
    const double rendered = state.specified[i] * scale;
    const bool drifted = std::abs(rendered - state.flattened[i]) > 1e-9 * std::max(1.0, rendered);
    const bool needed = e.tag == prop.applies_to && (prop.name != "stroke-width" || state.stroked);
    if ((own && scale != 1.0) || (!own && drifted && needed)) e.set_attr(prop.name, format_number(rendered));
    if (own || (drifted && needed)) state.flattened[i] = rendered;
  }

  if (e.path_data && !m.is_identity()) e.path_data = transform_path(*e.path_data, m);
  if (e.tag == "text" && !m.is_identity()) {
    auto first = [](const std::string* s) {
      if (!s) return 0.0;
      auto v = parse_number_list(*s);
      return v.empty() ? 0.0 : v.front();
    };
    Point p = m.apply({first(e.attr("x")), first(e.attr("y"))});
    e.set_attr("x", format_number(p.x));
    e.set_attr("y", format_number(p.y));
  }
  for (auto& c : e.children) apply_affine(c, m, state, consume_transform);
}

inline PropertyState initial_property_state() {
  return {{kScaledProperties[0].initial, kScaledProperties[1].initial},
          {kScaledProperties[0].initial, kScaledProperties[1].initial},
          false};
}

}  // namespace detail

/// Composes every ancestor transform into path coordinates and removes all
/// transform attributes. Must run after expand_use.
inline SvgDocument bake_transforms(const SvgDocument& input) {
  SvgDocument doc = input;
  detail::apply_affine(doc.root, TransformMatrix::identity(), detail::initial_property_state(), true);
  return doc;
}

/// Maps the viewBox onto (0, 0, canvas, canvas): translate by the negated
/// origin, then scale uniformly by canvas / max(width, height).
inline SvgDocument normalize_viewbox(const SvgDocument& input, const PreprocessConfig& cfg) {
  ViewBox vb;
  if (input.viewbox) {
    vb = *input.viewbox;
  } else {
    const std::string* w = input.root.attr("width");
    const std::string* h = input.root.attr("height");
    if (!w || !h) throw Error(Errc::DegenerateViewBox, "document has no viewBox");
    vb = {0, 0, parse_length(*w, true), parse_length(*h, true)};
  }
  if (!(vb.width > 0) || !(vb.height > 0))
    throw Error(Errc::DegenerateViewBox, "viewBox \"" + format_viewbox(vb) + "\" has non-positive size");
  const double s = cfg.canvas / std::max(vb.width, vb.height);
  TransformMatrix m = TransformMatrix::scale(s, s) * TransformMatrix::translate(-vb.min_x, -vb.min_y);
  SvgDocument doc = input;
  if (!m.is_identity()) detail::apply_affine(doc.root, m, detail::initial_property_state(), false);
  doc.viewbox = ViewBox{0, 0, static_cast<double>(cfg.canvas), static_cast<double>(cfg.canvas)};
  return doc;
}

/// Full-canvas dark rectangle inserted as the first child of the root.
inline SvgDocument add_dark_background(const SvgDocument& input) {
  SvgDocument doc = input;
  ViewBox vb = doc.viewbox.value_or(ViewBox{});
  Element bg;
  bg.tag = "path";
  bg.attributes.push_back({"fill", std::string(kDefaultFill)});
  bg.path_data = PathData{
      PathCommand(PathOp::M, false, {vb.min_x, vb.min_y}), PathCommand(PathOp::H, true, {vb.width}),
      PathCommand(PathOp::V, true, {vb.height}),          PathCommand(PathOp::H, true, {-vb.width}),
      PathCommand(PathOp::Z, true, {})};
  doc.root.children.insert(doc.root.children.begin(), std::move(bg));
  return doc;
}

namespace detail {

struct Quantizer {
  double canvas;
  double tol;

  double pos(double v) const { return std::clamp(std::round(v), -tol, canvas + tol); }
  double start(double v) const { return std::clamp(std::round(v), 0.0, canvas + tol); }
  double delta(double v) const { return std::clamp(v, -(canvas + tol), canvas + tol); }
};

inline void rounded_points(const PathCommand& cmd, Point cur, std::vector<Point>& out) {
  const auto& p = cmd.params();
  switch (cmd.op()) {
    case PathOp::H: out.push_back({std::round(p[0]), std::round(cur.y)}); break;
    case PathOp::V: out.push_back({std::round(cur.x), std::round(p[0])}); break;
    case PathOp::Z: break;
    case PathOp::A: out.push_back({std::round(p[3]), std::round(p[4])}); break;
    default:
      for (std::size_t i = 0; i + 1 < p.size(); i += 2) out.push_back({std::round(p[i]), std::round(p[i + 1])});
  }
}

inline PathData quantize_path(const PathData& path, const Quantizer& q) {
  PathData abs = to_absolute(path);
  // split into subpaths and drop those lying entirely outside the canvas
  std::vector<std::pair<std::size_t, std::size_t>> subpaths;
  for (std::size_t i = 0; i < abs.size(); ++i) {
    if (abs[i].op() == PathOp::M || subpaths.empty()) subpaths.push_back({i, i});
    subpaths.back().second = i + 1;
  }
  std::vector<bool> keep(abs.size(), false);
  {
    Point cur;
    for (auto [b, e] : subpaths) {
      std::vector<Point> points;
      for (std::size_t i = b; i < e; ++i) {
        rounded_points(abs[i], cur, points);
        const auto& p = abs[i].params();
        if (abs[i].op() == PathOp::H) cur.x = p[0];
        else if (abs[i].op() == PathOp::V) cur.y = p[0];
        else if (abs[i].op() == PathOp::A) cur = {p[3], p[4]};
        else if (!p.empty()) cur = {p[p.size() - 2], p[p.size() - 1]};
        if (abs[i].op() == PathOp::Z) cur = {abs[b].params()[0], abs[b].params()[1]};
      }
      bool inside = false;
      for (const auto& pt : points)
        if (pt.x >= -q.tol && pt.x <= q.canvas + q.tol && pt.y >= -q.tol && pt.y <= q.canvas + q.tol) {
          inside = true;
          break;
        }
      if (!inside) {
        double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
        for (const auto& pt : points) {
          minx = std::min(minx, pt.x); maxx = std::max(maxx, pt.x);
          miny = std::min(miny, pt.y); maxy = std::max(maxy, pt.y);
        }
        // bounding box overlap, e.g. a segment crossing the canvas
        inside = !points.empty() && !(maxx < -q.tol || minx > q.canvas + q.tol || maxy < -q.tol ||
                                      miny > q.canvas + q.tol);
      }
      for (std::size_t i = b; i < e; ++i) keep[i] = inside;
    }
  }

  PathData out;
  Point emitted, sub_start;
  auto rel_to = [&](double target, double from) { return q.delta(target - from); };
  for (std::size_t i = 0; i < abs.size(); ++i) {
    if (!keep[i]) continue;
    const auto& cmd = abs[i];
    const auto& p = cmd.params();
    switch (cmd.op()) {
      case PathOp::M:
        if (out.empty()) {
          emitted = {q.start(p[0]), q.start(p[1])};
          out.emplace_back(PathOp::M, false, pts({emitted.x, emitted.y}));
        } else {
          double dx = rel_to(q.pos(p[0]), emitted.x), dy = rel_to(q.pos(p[1]), emitted.y);
          emitted = {emitted.x + dx, emitted.y + dy};
          out.emplace_back(PathOp::M, true, pts({dx, dy}));
        }
        sub_start = emitted;
        break;
      case PathOp::H: {
        double dx = rel_to(q.pos(p[0]), emitted.x);
        emitted.x += dx;
        out.emplace_back(PathOp::H, true, pts({dx}));
        break;
      }
      case PathOp::V: {
        double dy = rel_to(q.pos(p[0]), emitted.y);
        emitted.y += dy;
        out.emplace_back(PathOp::V, true, pts({dy}));
        break;
      }
      case PathOp::A: {
        double rx = std::clamp(std::round(std::abs(p[0])), 0.0, q.canvas + q.tol);
        double ry = std::clamp(std::round(std::abs(p[1])), 0.0, q.canvas + q.tol);
        double rot = std::fmod(std::round(p[2]), 180.0);
        if (rot < 0) rot += 180.0;
        double dx = rel_to(q.pos(p[3]), emitted.x), dy = rel_to(q.pos(p[4]), emitted.y);
        emitted = {emitted.x + dx, emitted.y + dy};
        out.emplace_back(PathOp::A, true, pts({rx, ry, rot, dx, dy}), cmd.flags());
        break;
      }
      case PathOp::Z:
        emitted = sub_start;
        out.emplace_back(PathOp::Z, true, pts({}));
        break;
      default: {
        std::vector<double> d;
        for (std::size_t k = 0; k + 1 < p.size(); k += 2) {
          d.push_back(rel_to(q.pos(p[k]), emitted.x));
          d.push_back(rel_to(q.pos(p[k + 1]), emitted.y));
        }
        emitted = {emitted.x + d[d.size() - 2], emitted.y + d[d.size() - 1]};
        out.emplace_back(cmd.op(), true, std::move(d));
      }
    }
    // a subpath cut away in front of us leaves the pen elsewhere
    if (out.size() == 1 && out.front().op() != PathOp::M) out.clear();
  }
  return out;
}

inline std::size_t quantize_element(Element& e, const Quantizer& q) {
  std::size_t commands = 0;
  for (auto n : {"stroke-width", "font-size", "x", "y"}) {
    if (n[0] != 's' && n[0] != 'f' && e.tag != "text") continue;
    if (const std::string* v = e.attr(n)) {
      try {
        e.set_attr(n, format_number(parse_length(*v), 2));
      } catch (const Error&) {
      }
    }
  }
  if (e.path_data) {
    *e.path_data = quantize_path(*e.path_data, q);
    commands += e.path_data->size();
  }
  std::vector<Element> kept;
  for (auto& c : e.children) {
    commands += quantize_element(c, q);
    if (c.tag == "path" && c.path_data->empty()) continue;
    kept.push_back(std::move(c));
  }
  e.children = std::move(kept);
  return commands;
}

}  // namespace detail

/// Rounds geometry to integers (half away from zero) and rewrites each path
/// as one absolute moveto followed by relative commands. Deltas are taken
/// between quantized absolute positions, so rounding error never
/// accumulates. Subpaths entirely outside the canvas (plus tolerance) are
/// dropped; remaining positions are clamped into range.
inline SvgDocument quantize_and_relativize(const SvgDocument& input, const PreprocessConfig& cfg) {
  SvgDocument doc = input;
  detail::Quantizer q{static_cast<double>(cfg.canvas), static_cast<double>(cfg.overflow_tolerance)};
  if (detail::quantize_element(doc.root, q) == 0)
    throw Error(Errc::UnstableSample, "no geometry left after clipping");
  return doc;
}

namespace detail {

template <typename F>
auto run_stage(std::string_view stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage(std::string(stage)) : e;
  }
}

}  // namespace detail

/// parse → clean → expand_use → bake_transforms → normalize_viewbox →
/// quantize_and_relativize. Errors carry the failing stage name.
inline SvgDocument preprocess(std::string_view text, const PreprocessConfig& cfg = {}) {
  cfg.validate();
  SvgDocument doc = detail::run_stage("parse", [&] { return parse_svg(text); });
  doc = detail::run_stage("clean", [&] { return clean_document(doc, cfg); });
  doc = detail::run_stage("expand_use", [&] { return expand_use(doc); });
  if (cfg.dark_background) doc = add_dark_background(doc);
  doc = detail::run_stage("bake_transforms", [&] { return bake_transforms(doc); });
  doc = detail::run_stage("normalize_viewbox", [&] { return normalize_viewbox(doc, cfg); });
  doc = detail::run_stage("quantize", [&] { return quantize_and_relativize(doc, cfg); });
  return doc;
}

}  // namespace svgtok
