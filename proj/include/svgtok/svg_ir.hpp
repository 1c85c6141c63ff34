#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svgtok/error.hpp"

namespace svgtok {

inline constexpr std::string_view kSvgNamespace = "http://www.w3.org/2000/svg";

// Element names that carry structure tokens. Order fixes token ids.
inline constexpr std::array<std::string_view, 21> kStructureElements = {
    "svg",      "path",  "g",         "rect",           "circle",         "ellipse", "line",
    "polyline", "polygon", "defs",    "use",            "linearGradient", "radialGradient", "stop",
    "clipPath", "mask",  "pattern",   "symbol",         "text",           "title",   "desc"};

inline bool is_structure_element(std::string_view tag) {
  return std::find(kStructureElements.begin(), kStructureElements.end(), tag) !=
         kStructureElements.end();
}

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal form that round-trips; integral values print without a
/// fraction and negative zero prints as "0".
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Rounds to `digits` decimal places, then formats.
inline std::string format_number(double v, int digits) {
  double scale = std::pow(10.0, digits);
  return format_number(std::round(v * scale) / scale);
}

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Scans an SVG number at `pos`; returns nullopt if none starts there.
inline std::optional<double> scan_number(std::string_view s, std::size_t& pos) {
  std::size_t i = pos;
  std::size_t start = i;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  bool digits = false;
  while (i < s.size() && is_digit(s[i])) { ++i; digits = true; }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) { ++i; digits = true; }
  }
  if (!digits) return std::nullopt;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    if (j < s.size() && is_digit(s[j])) {
      while (j < s.size() && is_digit(s[j])) ++j;
      i = j;
    }
  }
  std::string_view lexeme = s.substr(start, i - start);
  if (!lexeme.empty() && lexeme.front() == '+') lexeme.remove_prefix(1);
  // from_chars rejects a leading '.', so prepend a zero when needed.
  std::string tmp;
  if (!lexeme.empty() && (lexeme.front() == '.' || (lexeme.front() == '-' && lexeme.size() > 1 && lexeme[1] == '.'))) {
    tmp = std::string(lexeme);
    tmp.insert(tmp.front() == '-' ? 1 : 0, "0");
    lexeme = tmp;
  }
  double value = 0.0;
  auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
  if (res.ec != std::errc()) return std::nullopt;
  pos = i;
  return value;
}

inline void skip_separators(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && is_space(s[pos])) ++pos;
  if (pos < s.size() && s[pos] == ',') {
    ++pos;
    while (pos < s.size() && is_space(s[pos])) ++pos;
  }
}

}  // namespace detail

/// Parses a whitespace/comma separated list of unit-less numbers
/// (points="...", viewBox="..."). Throws BadPathData on anything else.
inline std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size() && detail::is_space(s[pos])) ++pos;
  while (pos < s.size()) {
    auto v = detail::scan_number(s, pos);
    if (!v) throw Error(Errc::BadPathData, "expected number in \"" + std::string(s) + "\"");
    out.push_back(*v);
    detail::skip_separators(s, pos);
  }
  return out;
}

/// Parses a single unit-less length. `allow_px` tolerates a trailing "px"
/// (root width/height only); any other unit is BadPathData.
inline double parse_length(std::string_view s, bool allow_px = false) {
  std::size_t b = 0, e = s.size();
  while (b < e && detail::is_space(s[b])) ++b;
  while (e > b && detail::is_space(s[e - 1])) --e;
  s = s.substr(b, e - b);
  if (allow_px && s.size() > 2 && s.substr(s.size() - 2) == "px") s.remove_suffix(2);
  std::size_t pos = 0;
  auto v = detail::scan_number(s, pos);
  if (!v || pos != s.size()) throw Error(Errc::BadPathData, "not a unit-less number: \"" + std::string(s) + "\"");
  return *v;
}

// ---------------------------------------------------------------------------
// Path commands

enum class PathOp : std::uint8_t { M, L, H, V, C, S, Q, T, A, Z };

inline constexpr std::array<PathOp, 10> kPathOps = {PathOp::M, PathOp::L, PathOp::H, PathOp::V, PathOp::C,
                                                    PathOp::S, PathOp::Q, PathOp::T, PathOp::A, PathOp::Z};

/// Numeric parameter count. Arcs additionally carry two flags.
inline constexpr std::size_t arity(PathOp op) {
  switch (op) {
    case PathOp::M: case PathOp::L: case PathOp::T: return 2;
    case PathOp::H: case PathOp::V: return 1;
    case PathOp::C: return 6;
    case PathOp::S: case PathOp::Q: return 4;
    case PathOp::A: return 5;
    case PathOp::Z: return 0;
  }
  return 0;
}

inline constexpr char op_letter(PathOp op, bool relative) {
  constexpr char upper[] = {'M', 'L', 'H', 'V', 'C', 'S', 'Q', 'T', 'A', 'Z'};
  char c = upper[static_cast<int>(op)];
  return relative ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::optional<std::pair<PathOp, bool>> op_from_letter(char c) {
  bool relative = c >= 'a' && c <= 'z';
  char u = relative ? static_cast<char>(c - 'a' + 'A') : c;
  for (PathOp op : kPathOps)
    if (op_letter(op, false) == u) return std::pair{op, relative};
  return std::nullopt;
}

struct ArcFlags {
  bool large_arc = false;
  bool sweep = false;
  bool operator==(const ArcFlags&) const = default;
};

/// One path command with exactly its arity of numeric parameters. Arc
/// parameters are ordered rx, ry, x-axis-rotation, x, y; the two flags sit
/// between rotation and endpoint in the SVG syntax and are held separately.
class PathCommand {
 public:
  PathCommand(PathOp op, bool relative, std::vector<double> params, std::optional<ArcFlags> flags = std::nullopt)
      : op_(op), relative_(relative), params_(std::move(params)), flags_(flags) {
    if (params_.size() != arity(op_))
      throw Error(Errc::BadPathData, std::string("command ") + letter() + " takes " +
                                         std::to_string(arity(op_)) + " parameters, got " +
                                         std::to_string(params_.size()));
    if ((op_ == PathOp::A) != flags_.has_value())
      throw Error(Errc::BadPathData, std::string("arc flags belong to A commands only (") + letter() + ")");
  }

  PathOp op() const noexcept { return op_; }
  bool relative() const noexcept { return relative_; }
  char letter() const noexcept { return op_letter(op_, relative_); }
  const std::vector<double>& params() const noexcept { return params_; }
  const std::optional<ArcFlags>& flags() const noexcept { return flags_; }

  bool operator==(const PathCommand&) const = default;

 private:
  PathOp op_;
  bool relative_;
  std::vector<double> params_;
  std::optional<ArcFlags> flags_;
};

using PathData = std::vector<PathCommand>;

/// SVG 1.1 path grammar: implicit repetition, comma/whitespace separators,
/// and arc flags glued to neighbouring numbers are accepted.
inline PathData parse_path_data(std::string_view d) {
  PathData out;
  std::size_t pos = 0;
  auto skip_ws = [&] { while (pos < d.size() && detail::is_space(d[pos])) ++pos; };
  auto fail = [&](const std::string& why) {
    throw Error(Errc::BadPathData, why + " at offset " + std::to_string(pos) + " in \"" + std::string(d) + "\"");
  };
  skip_ws();
  std::optional<std::pair<PathOp, bool>> current;
  while (pos < d.size()) {
    bool explicit_letter = false;
    if (auto cmd = op_from_letter(d[pos])) {
      current = cmd;
      ++pos;
      explicit_letter = true;
      skip_ws();
    } else if (!current) {
      fail("path data must start with a command");
    } else if (current->first == PathOp::Z) {
      fail("unexpected parameters after Z");
    }
    if (out.empty() && current->first != PathOp::M) fail("path data must start with M");
    auto [op, relative] = *current;
    if (op == PathOp::Z) {
      out.emplace_back(op, relative, std::vector<double>{});
      skip_ws();
      continue;
    }
    std::vector<double> params;
    std::optional<ArcFlags> flags;
    const std::size_t n = arity(op);
    for (std::size_t i = 0; i < n + (op == PathOp::A ? 2 : 0); ++i) {
      if (i > 0) detail::skip_separators(d, pos);
      if (op == PathOp::A && (i == 3 || i == 4)) {
        if (pos >= d.size() || (d[pos] != '0' && d[pos] != '1')) fail("bad arc flag");
        if (!flags) flags = ArcFlags{};
        (i == 3 ? flags->large_arc : flags->sweep) = d[pos] == '1';
        ++pos;
        continue;
      }
      auto v = detail::scan_number(d, pos);
      if (!v) {
        if (i == 0 && !explicit_letter) fail("unexpected character");
        fail(std::string("command ") + op_letter(op, relative) + " is missing parameters");
      }
      params.push_back(*v);
    }
    out.emplace_back(op, relative, std::move(params), flags);
    detail::skip_separators(d, pos);
    // moveto followed by extra pairs continues as lineto
    if (op == PathOp::M) current = std::pair{PathOp::L, relative};
  }
  return out;
}

/// Longhand, space separated form: "M 1 2 L 3 4 Z".
inline std::string format_path_data(const PathData& path) {
  std::string out;
  for (const auto& cmd : path) {
    if (!out.empty()) out += ' ';
    out += cmd.letter();
    const auto& p = cmd.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (cmd.op() == PathOp::A && i == 3) {
        out += cmd.flags()->large_arc ? " 1" : " 0";
        out += cmd.flags()->sweep ? " 1" : " 0";
      }
      out += ' ';
      out += format_number(p[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Document tree

struct ViewBox {
  double min_x = 0, min_y = 0, width = 0, height = 0;
  bool operator==(const ViewBox&) const = default;
};

inline std::string format_viewbox(const ViewBox& vb) {
  return format_number(vb.min_x) + " " + format_number(vb.min_y) + " " + format_number(vb.width) + " " +
         format_number(vb.height);
}

inline ViewBox parse_viewbox(std::string_view s) {
  std::vector<double> v;
  try {
    v = parse_number_list(s);
  } catch (const Error&) {
    throw Error(Errc::DegenerateViewBox, "unparsable viewBox \"" + std::string(s) + "\"");
  }
  if (v.size() != 4) throw Error(Errc::DegenerateViewBox, "viewBox needs 4 numbers: \"" + std::string(s) + "\"");
  return ViewBox{v[0], v[1], v[2], v[3]};
}

struct Attribute {
  std::string name;
  std::string value;
  bool operator==(const Attribute&) const = default;
};

struct Element {
  std::string tag;
  std::vector<Attribute> attributes;
  /// Engaged exactly when tag == "path"; holds the parsed `d` attribute.
  std::optional<PathData> path_data;
  /// Direct character data, trimmed (text, title, desc, style).
  std::string text;
  std::vector<Element> children;

  bool operator==(const Element&) const = default;

  const std::string* attr(std::string_view name) const {
    for (const auto& a : attributes)
      if (a.name == name) return &a.value;
    return nullptr;
  }
  void set_attr(std::string_view name, std::string value) {
    for (auto& a : attributes)
      if (a.name == name) { a.value = std::move(value); return; }
    attributes.push_back({std::string(name), std::move(value)});
  }
  bool erase_attr(std::string_view name) {
    auto it = std::find_if(attributes.begin(), attributes.end(), [&](const Attribute& a) { return a.name == name; });
    if (it == attributes.end()) return false;
    attributes.erase(it);
    return true;
  }
};

struct SvgDocument {
  /// Absent when the source root carried no viewBox attribute.
  std::optional<ViewBox> viewbox;
  Element root;

  bool operator==(const SvgDocument&) const = default;
};

template <typename F>
void for_each_element(Element& e, F&& f) {
  f(e);
  for (auto& c : e.children) for_each_element(c, f);
}

template <typename F>
void for_each_element(const Element& e, F&& f) {
  f(e);
  for (const auto& c : e.children) for_each_element(c, f);
}

// ---------------------------------------------------------------------------
// Markup reader

namespace detail {

inline bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' ||
         static_cast<unsigned char>(c) >= 0x80;
}
inline bool is_name_char(char c) { return is_name_start(c) || is_digit(c) || c == '-' || c == '.'; }

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') { out += s[i]; continue; }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos) throw Error(Errc::MalformedMarkup, "unterminated entity");
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      std::string_view digits = ent.substr(hex ? 2 : 1);
      auto r = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (digits.empty() || r.ec != std::errc() || r.ptr != digits.data() + digits.size())
        throw Error(Errc::MalformedMarkup, "bad character reference &" + std::string(ent) + ";");
      append_utf8(out, cp);
    } else {
      throw Error(Errc::MalformedMarkup, "unknown entity &" + std::string(ent) + ";");
    }
    i = semi;
  }
  return out;
}

inline std::string escape_markup(std::string_view s, bool attribute) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': if (attribute) { out += "&quot;"; break; } [[fallthrough]];
      default: out += c;
    }
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

class MarkupReader {
 public:
  explicit MarkupReader(std::string_view text) : s_(text) {}

  Element read_document() {
    skip_prolog();
    if (!at('<')) fail("expected root element");
    Element root = read_element();
    skip_misc();
    if (pos_ != s_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::MalformedMarkup, why + " at offset " + std::to_string(pos_));
  }
  bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }
  void skip_ws() { while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_; }

  void skip_until(std::string_view terminator) {
    auto e = s_.find(terminator, pos_);
    if (e == std::string_view::npos) fail("unterminated construct");
    pos_ = e + terminator.size();
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts("<!--")) skip_until("-->");
      else if (starts("<?")) skip_until("?>");
      else return;
    }
  }

  void skip_prolog() {
    if (starts("\xEF\xBB\xBF")) pos_ += 3;
    for (;;) {
      skip_misc();
      if (starts("<!DOCTYPE")) {
        int depth = 0;
        for (; pos_ < s_.size(); ++pos_) {
          if (s_[pos_] == '[') ++depth;
          else if (s_[pos_] == ']') --depth;
          else if (s_[pos_] == '>' && depth == 0) break;
        }
        if (pos_ >= s_.size()) fail("unterminated DOCTYPE");
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string read_name() {
    std::size_t b = pos_;
    if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail("expected name");
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  Element read_element() {
    ++pos_;  // '<'
    Element el;
    el.tag = read_name();
    for (;;) {
      skip_ws();
      if (starts("/>")) { pos_ += 2; return el; }
      if (at('>')) { ++pos_; break; }
      std::string name = read_name();
      skip_ws();
      if (!at('=')) fail("expected '=' after attribute " + name);
      ++pos_;
      skip_ws();
      if (!at('"') && !at('\'')) fail("attribute value must be quoted");
      char q = s_[pos_++];
      auto e = s_.find(q, pos_);
      if (e == std::string_view::npos) fail("unterminated attribute value");
      std::string_view raw = s_.substr(pos_, e - pos_);
      if (raw.find('<') != std::string_view::npos) fail("'<' in attribute value");
      pos_ = e + 1;
      if (el.attr(name)) fail("duplicate attribute " + name);
      el.attributes.push_back({std::move(name), decode_entities(raw)});
    }
    std::string text;
    for (;;) {
      if (pos_ >= s_.size()) fail("unclosed element <" + el.tag + ">");
      if (starts("</")) {
        pos_ += 2;
        std::string name = read_name();
        if (name != el.tag) fail("mismatched close tag </" + name + "> for <" + el.tag + ">");
        skip_ws();
        if (!at('>')) fail("expected '>'");
        ++pos_;
        break;
      }
      if (starts("<!--")) { skip_until("-->"); continue; }
      if (starts("<?")) { skip_until("?>"); continue; }
      if (starts("<![CDATA[")) {
        pos_ += 9;
        auto e = s_.find("]]>", pos_);
        if (e == std::string_view::npos) fail("unterminated CDATA");
        text += s_.substr(pos_, e - pos_);
        pos_ = e + 3;
        continue;
      }
      if (at('<')) {
        el.children.push_back(read_element());
        continue;
      }
      auto e = s_.find('<', pos_);
      if (e == std::string_view::npos) e = s_.size();
      text += decode_entities(s_.substr(pos_, e - pos_));
      pos_ = e;
    }
    el.text = trim(text);
    return el;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline void attach_path_data(Element& el) {
  for_each_element(el, [](Element& e) {
    if (e.tag != "path") return;
    e.path_data = PathData{};
    if (const std::string* d = e.attr("d")) {
      e.path_data = parse_path_data(*d);
      e.erase_attr("d");
    }
  });
}

}  // namespace detail

/// Parses SVG markup. Unknown elements and attributes are kept; policy on
/// them belongs to the preprocessing stage.
inline SvgDocument parse_svg(std::string_view text) {
  if (detail::trim(text).empty()) throw Error(Errc::MalformedMarkup, "empty input");
  SvgDocument doc;
  doc.root = detail::MarkupReader(text).read_document();
  if (doc.root.tag != "svg") throw Error(Errc::MalformedMarkup, "root element is <" + doc.root.tag + ">, not <svg>");
  if (const std::string* ns = doc.root.attr("xmlns"); ns && *ns == kSvgNamespace) doc.root.erase_attr("xmlns");
  if (const std::string* vb = doc.root.attr("viewBox")) {
    doc.viewbox = parse_viewbox(*vb);
    doc.root.erase_attr("viewBox");
  }
  detail::attach_path_data(doc.root);
  return doc;
}

namespace detail {

inline void write_element(std::string& out, const Element& el, const std::optional<ViewBox>* root_vb) {
  out += '<';
  out += el.tag;
  if (root_vb) {
    out += " xmlns=\"";
    out += kSvgNamespace;
    out += '"';
    if (*root_vb) out += " viewBox=\"" + format_viewbox(**root_vb) + "\"";
  }
  for (const auto& a : el.attributes) {
    out += ' ';
    out += a.name;
    out += "=\"";
    out += escape_markup(a.value, true);
    out += '"';
  }
  if (el.path_data && !el.path_data->empty()) out += " d=\"" + format_path_data(*el.path_data) + "\"";
  if (el.children.empty() && el.text.empty()) {
    out += "/>\n";
    return;
  }
  out += '>';
  if (!el.text.empty()) out += escape_markup(el.text, false);
  if (!el.children.empty()) {
    out += '\n';
    for (const auto& c : el.children) write_element(out, c, nullptr);
  }
  out += "</" + el.tag + ">\n";
}

}  // namespace detail

inline std::string serialize_svg(const SvgDocument& doc) {
  std::string out;
  detail::write_element(out, doc.root, &doc.viewbox);
  return out;
}

}  // namespace svgtok
