#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "svgtok/error.hpp"
#include "svgtok/svg_ir.hpp"

namespace svgtok {

using TokenId = std::uint32_t;

enum class TokenCategory { Struct, Cmd, Flag, CoordAbs, CoordRel };

inline std::string_view category_name(TokenCategory c) {
  switch (c) {
    case TokenCategory::Struct: return "struct";
    case TokenCategory::Cmd: return "cmd";
    case TokenCategory::Flag: return "flag";
    case TokenCategory::CoordAbs: return "coord_abs";
    case TokenCategory::CoordRel: return "coord_rel";
  }
  return "?";
}

struct Tok {
  TokenId id;
  bool operator==(const Tok&) const = default;
};

/// Literal text carried between vocabulary tokens (attribute spans).
struct Lit {
  std::string text;
  bool operator==(const Lit&) const = default;
};

using TokenItem = std::variant<Tok, Lit>;
using TokenSeq = std::vector<TokenItem>;

inline bool is_tok(const TokenItem& item) { return std::holds_alternative<Tok>(item); }
inline TokenId tok_id(const TokenItem& item) { return std::get<Tok>(item).id; }

/// Canvas-parameterised atomic vocabulary. Ids are laid out as structure
/// tokens (open/close per element), commands (absolute/relative per op),
/// the four arc flags, absolute positions ascending, then relative offsets
/// ascending.
class AtomicVocab {
 public:
  AtomicVocab(int canvas, int tolerance,
              std::vector<std::string> elements = {kStructureElements.begin(), kStructureElements.end()})
      : canvas_(canvas), tolerance_(tolerance), elements_(std::move(elements)) {
    if (canvas < 1) throw Error(Errc::DomainError, "canvas must be >= 1");
    if (tolerance < 0) throw Error(Errc::DomainError, "tolerance must be >= 0");
    for (const auto& el : elements_) {
      add("<" + el + ">", TokenCategory::Struct);
      add("</" + el + ">", TokenCategory::Struct);
    }
    cmd_base_ = size();
    for (PathOp op : kPathOps) {
      add(std::string("<cmd_") + op_letter(op, false) + ">", TokenCategory::Cmd);
      add(std::string("<cmd_") + op_letter(op, true) + ">", TokenCategory::Cmd);
    }
    flag_base_ = size();
    for (auto name : {"<large_0>", "<large_1>", "<sweep_0>", "<sweep_1>"}) add(name, TokenCategory::Flag);
    abs_base_ = size();
    for (int v = 0; v <= max_abs(); ++v) add("<P_" + std::to_string(v) + ">", TokenCategory::CoordAbs);
    rel_base_ = size();
    for (int v = -max_abs(); v <= max_abs(); ++v) add("<d_" + std::to_string(v) + ">", TokenCategory::CoordRel);
  }

  int canvas() const noexcept { return canvas_; }
  int tolerance() const noexcept { return tolerance_; }
  /// Largest absolute position, also the largest offset magnitude.
  int max_abs() const noexcept { return canvas_ + tolerance_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& elements() const noexcept { return elements_; }

  const std::string& token(TokenId id) const { return tokens_.at(id); }
  TokenCategory category(TokenId id) const { return categories_.at(id); }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t count(TokenCategory c) const {
    std::size_t n = 0;
    for (auto k : categories_) n += k == c;
    return n;
  }

  std::optional<TokenId> open_tag(std::string_view tag) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if (elements_[i] == tag) return static_cast<TokenId>(2 * i);
    return std::nullopt;
  }
  TokenId close_tag_of(TokenId open) const { return open + 1; }
  bool is_open_tag(TokenId id) const { return id < cmd_base_ && id % 2 == 0; }
  bool is_close_tag(TokenId id) const { return id < cmd_base_ && id % 2 == 1; }
  const std::string& tag_name(TokenId id) const { return elements_.at(id / 2); }

  TokenId command(PathOp op, bool relative) const {
    return cmd_base_ + 2 * static_cast<TokenId>(op) + (relative ? 1 : 0);
  }
  std::pair<PathOp, bool> command_of(TokenId id) const {
    TokenId k = id - cmd_base_;
    return {kPathOps[k / 2], k % 2 == 1};
  }

  TokenId large_flag(bool v) const { return flag_base_ + (v ? 1 : 0); }
  TokenId sweep_flag(bool v) const { return flag_base_ + 2 + (v ? 1 : 0); }
  bool is_large_flag(TokenId id) const { return id == flag_base_ || id == flag_base_ + 1; }
  bool is_sweep_flag(TokenId id) const { return id == flag_base_ + 2 || id == flag_base_ + 3; }
  bool flag_value(TokenId id) const { return (id - flag_base_) % 2 == 1; }

  std::optional<TokenId> abs_coord(double v) const {
    if (v != std::floor(v) || v < 0 || v > max_abs()) return std::nullopt;
    return abs_base_ + static_cast<TokenId>(v);
  }
  std::optional<TokenId> rel_coord(double v) const {
    if (v != std::floor(v) || v < -max_abs() || v > max_abs()) return std::nullopt;
    return rel_base_ + static_cast<TokenId>(static_cast<int>(v) + max_abs());
  }
  int coord_value(TokenId id) const {
    return category(id) == TokenCategory::CoordAbs ? static_cast<int>(id - abs_base_)
                                                   : static_cast<int>(id - rel_base_) - max_abs();
  }
  TokenId zero_offset() const { return rel_base_ + static_cast<TokenId>(max_abs()); }

 private:
  void add(std::string token, TokenCategory c) {
    index_.emplace(token, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(token));
    categories_.push_back(c);
  }

  int canvas_;
  int tolerance_;
  std::vector<std::string> elements_;
  std::vector<std::string> tokens_;
  std::vector<TokenCategory> categories_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId cmd_base_ = 0, flag_base_ = 0, abs_base_ = 0, rel_base_ = 0;
};

inline AtomicVocab build_vocab(int canvas, int tolerance) { return AtomicVocab(canvas, tolerance); }

// ---------------------------------------------------------------------------
// Attribute spans
//
// One literal per element, placed right after its opening token:
//   viewBox=0 0 784 784 fill=#ff0000 #text=Hello
// Entries are space separated name=value pairs. A value is written bare
// unless that would be ambiguous, in which case it is double quoted with
// &amp; &quot; &lt; &#10; escapes. "#text" carries element character data.

namespace detail {

inline bool lit_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || c == '#';
}
inline bool lit_name_char(char c) { return lit_name_start(c) || is_digit(c) || c == '-' || c == '.'; }

// Length of a "name=" prefix at `pos`, 0 if none.
inline std::size_t lit_name_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size() || !lit_name_start(s[pos])) return 0;
  std::size_t i = pos + 1;
  while (i < s.size() && lit_name_char(s[i])) ++i;
  return i < s.size() && s[i] == '=' ? i - pos + 1 : 0;
}

inline bool bare_value_ok(std::string_view v) {
  if (v.empty() || v.front() == '"' || v.front() == ' ' || v.back() == ' ') return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char c = v[i];
    if (c == '<' || c == '\n' || c == '\r') return false;
    if (c == ' ' && lit_name_at(v, i + 1)) return false;
  }
  return true;
}

inline void append_entry(std::string& out, std::string_view name, std::string_view value) {
  if (!out.empty()) out += ' ';
  out += name;
  out += '=';
  if (bare_value_ok(value)) {
    out += value;
    return;
  }
  out += '"';
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  out += '"';
}

}  // namespace detail

struct AttributeSpan {
  std::optional<ViewBox> viewbox;
  std::vector<Attribute> attributes;
  std::string text;
};

inline std::string encode_attribute_span(const AttributeSpan& span) {
  std::string out;
  if (span.viewbox) detail::append_entry(out, "viewBox", format_viewbox(*span.viewbox));
  for (const auto& a : span.attributes) detail::append_entry(out, a.name, a.value);
  if (!span.text.empty()) detail::append_entry(out, "#text", span.text);
  return out;
}

/// `root` routes a viewBox entry into the viewbox field.
inline AttributeSpan decode_attribute_span(std::string_view s, bool root) {
  AttributeSpan span;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Errc::BadFormat, "attribute span \"" + std::string(s) + "\": " + why);
  };
  while (pos < s.size()) {
    std::size_t n = detail::lit_name_at(s, pos);
    if (!n) fail("expected name=value at offset " + std::to_string(pos));
    std::string name(s.substr(pos, n - 1));
    pos += n;
    std::string value;
    if (pos < s.size() && s[pos] == '"') {
      auto close = s.find('"', pos + 1);
      if (close == std::string_view::npos) fail("unterminated quoted value");
      value = detail::decode_entities(s.substr(pos + 1, close - pos - 1));
      pos = close + 1;
      if (pos < s.size()) {
        if (s[pos] != ' ') fail("expected space after quoted value");
        ++pos;
      }
    } else {
      std::size_t end = pos;
      while (end < s.size() && !(s[end] == ' ' && detail::lit_name_at(s, end + 1))) ++end;
      value = std::string(s.substr(pos, end - pos));
      pos = end < s.size() ? end + 1 : end;
    }
    if (name == "#text") span.text = std::move(value);
    else if (root && name == "viewBox") span.viewbox = parse_viewbox(value);
    else span.attributes.push_back({std::move(name), std::move(value)});
  }
  return span;
}

// ---------------------------------------------------------------------------
// Encode / decode

namespace detail {

inline void encode_path(const PathData& path, const AtomicVocab& vocab, TokenSeq& out) {
  bool first = true;
  for (const auto& cmd : path) {
    out.push_back(Tok{vocab.command(cmd.op(), cmd.relative())});
    const auto& p = cmd.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (cmd.op() == PathOp::A && i == 3) {
        out.push_back(Tok{vocab.large_flag(cmd.flags()->large_arc)});
        out.push_back(Tok{vocab.sweep_flag(cmd.flags()->sweep)});
      }
      auto id = first ? vocab.abs_coord(p[i]) : vocab.rel_coord(p[i]);
      if (!id)
        throw Error(Errc::OutOfRange, std::string("value ") + format_number(p[i]) + " of command " + cmd.letter() +
                                          " has no " + (first ? "P_" : "d_") + " token");
      out.push_back(Tok{*id});
    }
    first = false;
  }
}

inline void encode_element(const Element& el, const AtomicVocab& vocab, const std::optional<ViewBox>* root_vb,
                           TokenSeq& out) {
  auto open = vocab.open_tag(el.tag);
  if (!open) throw Error(Errc::UnsupportedTag, "<" + el.tag + "> has no structure token");
  out.push_back(Tok{*open});
  std::string lit = encode_attribute_span({root_vb ? *root_vb : std::nullopt, el.attributes, el.text});
  if (!lit.empty()) out.push_back(Lit{std::move(lit)});
  if (el.path_data) encode_path(*el.path_data, vocab, out);
  for (const auto& c : el.children) encode_element(c, vocab, nullptr, out);
  out.push_back(Tok{vocab.close_tag_of(*open)});
}

}  // namespace detail

/// Structure tokens for elements, an attribute literal after each opening
/// token, and for paths a command token followed by its parameters: P_*
/// for the leading command of each path and d_* everywhere else.
inline TokenSeq encode_atomic(const SvgDocument& doc, const AtomicVocab& vocab) {
  TokenSeq out;
  detail::encode_element(doc.root, vocab, &doc.viewbox, out);
  return out;
}

inline SvgDocument decode_atomic(const TokenSeq& seq, const AtomicVocab& vocab) {
  SvgDocument doc;
  std::vector<Element> stack;
  bool done = false;
  std::size_t i = 0;
  auto next_tok = [&](const char* what) -> TokenId {
    if (i >= seq.size() || !is_tok(seq[i]))
      throw Error(Errc::ArityViolation, std::string("expected ") + what + " at item " + std::to_string(i));
    return tok_id(seq[i++]);
  };
  while (i < seq.size()) {
    const TokenItem& item = seq[i];
    if (!is_tok(item)) throw Error(Errc::UnbalancedStructure, "literal not attached to an opening tag");
    TokenId id = tok_id(item);
    if (id >= vocab.size()) throw Error(Errc::UnknownToken, "token id " + std::to_string(id) + " is not atomic");
    if (done) throw Error(Errc::UnbalancedStructure, "content after the root element closed");
    ++i;
    switch (vocab.category(id)) {
      case TokenCategory::Struct: {
        if (vocab.is_open_tag(id)) {
          Element el;
          el.tag = vocab.tag_name(id);
          if (el.tag == "path") el.path_data = PathData{};
          const bool root = stack.empty();
          if (root && el.tag != "svg") throw Error(Errc::UnbalancedStructure, "root element must be <svg>");
          if (i < seq.size() && !is_tok(seq[i])) {
            AttributeSpan span = decode_attribute_span(std::get<Lit>(seq[i]).text, root);
            ++i;
            if (root) doc.viewbox = span.viewbox;
            el.attributes = std::move(span.attributes);
            el.text = std::move(span.text);
          }
          stack.push_back(std::move(el));
        } else {
          if (stack.empty() || stack.back().tag != vocab.tag_name(id))
            throw Error(Errc::UnbalancedStructure, vocab.token(id) + " does not close the open element");
          Element el = std::move(stack.back());
          stack.pop_back();
          if (stack.empty()) {
            doc.root = std::move(el);
            done = true;
          } else {
            stack.back().children.push_back(std::move(el));
          }
        }
        break;
      }
      case TokenCategory::Cmd: {
        if (stack.empty() || !stack.back().path_data)
          throw Error(Errc::UnbalancedStructure, vocab.token(id) + " outside a <path>");
        PathData& path = *stack.back().path_data;
        auto [op, relative] = vocab.command_of(id);
        const TokenCategory want = path.empty() ? TokenCategory::CoordAbs : TokenCategory::CoordRel;
        std::vector<double> params;
        std::optional<ArcFlags> flags;
        for (std::size_t k = 0; k < arity(op); ++k) {
          if (op == PathOp::A && k == 3) {
            TokenId large = next_tok("large-arc flag");
            TokenId sweep = next_tok("sweep flag");
            if (!vocab.is_large_flag(large) || !vocab.is_sweep_flag(sweep))
              throw Error(Errc::ArityViolation, "arc flags out of order or missing");
            flags = ArcFlags{vocab.flag_value(large), vocab.flag_value(sweep)};
          }
          TokenId c = next_tok("coordinate");
          if (c >= vocab.size() || vocab.category(c) != want)
            throw Error(Errc::ArityViolation, vocab.token(id) + " expects " +
                                                  std::string(category_name(want)) + " parameters");
          params.push_back(vocab.coord_value(c));
        }
        path.emplace_back(op, relative, std::move(params), flags);
        break;
      }
      default:
        throw Error(Errc::ArityViolation, vocab.token(id) + " is not preceded by a command");
    }
  }
  if (!done) throw Error(Errc::UnbalancedStructure, "unclosed elements at end of sequence");
  return doc;
}

// ---------------------------------------------------------------------------
// Counting

enum class LitCount { Items, Chars };

/// Vocabulary tokens plus literal spans, each span counting as one item
/// (default) or as its character length.
inline std::size_t count_tokens(const TokenSeq& seq, LitCount mode = LitCount::Items) {
  std::size_t n = 0;
  for (const auto& item : seq) {
    if (is_tok(item)) ++n;
    else n += mode == LitCount::Items ? 1 : std::get<Lit>(item).text.size();
  }
  return n;
}

inline std::size_t count_paths(const TokenSeq& seq, const AtomicVocab& vocab) {
  const TokenId open = *vocab.open_tag("path");
  std::size_t n = 0;
  for (const auto& item : seq) n += is_tok(item) && tok_id(item) == open;
  return n;
}

/// Command tokens of an atomic sequence.
inline std::size_t count_commands(const TokenSeq& seq, const AtomicVocab& vocab) {
  std::size_t n = 0;
  for (const auto& item : seq)
    n += is_tok(item) && tok_id(item) < vocab.size() && vocab.category(tok_id(item)) == TokenCategory::Cmd;
  return n;
}

// ---------------------------------------------------------------------------
// Token text and id formats

/// Whitespace-free concatenation of token strings and literal spans.
/// `composites` names ids from vocab.size() upward.
inline std::string to_token_text(const TokenSeq& seq, const AtomicVocab& vocab,
                                 std::span<const std::string> composites = {}) {
  std::string out;
  for (const auto& item : seq) {
    if (!is_tok(item)) {
      out += std::get<Lit>(item).text;
      continue;
    }
    TokenId id = tok_id(item);
    if (id < vocab.size()) out += vocab.token(id);
    else if (id - vocab.size() < composites.size()) out += composites[id - vocab.size()];
    else throw Error(Errc::UnknownToken, "token id " + std::to_string(id));
  }
  return out;
}

namespace detail {

// "<seg_N>" names a composite.
inline std::optional<std::size_t> composite_index(std::string_view tok) {
  constexpr std::string_view prefix = "<seg_";
  if (tok.substr(0, prefix.size()) != prefix || tok.back() != '>') return std::nullopt;
  std::string_view digits = tok.substr(prefix.size(), tok.size() - prefix.size() - 1);
  std::size_t v = 0;
  auto r = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (digits.empty() || r.ec != std::errc() || r.ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

inline TokenId resolve_token(std::string_view tok, const AtomicVocab& vocab,
                             std::span<const std::string> composites) {
  if (auto id = vocab.find(tok)) return *id;
  if (auto k = composite_index(tok)) {
    if (*k < composites.size() && composites[*k] == tok) return static_cast<TokenId>(vocab.size() + *k);
    throw Error(Errc::UnknownComposite, std::string(tok) + " is not in the segment vocabulary");
  }
  throw Error(Errc::UnknownToken, "unknown token " + std::string(tok));
}

}  // namespace detail

inline TokenSeq parse_token_text(std::string_view text, const AtomicVocab& vocab,
                                 std::span<const std::string> composites = {}) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '<') {
      auto close = text.find('>', pos);
      if (close == std::string_view::npos) throw Error(Errc::UnknownToken, "unterminated token at " + std::to_string(pos));
      out.push_back(Tok{detail::resolve_token(text.substr(pos, close - pos + 1), vocab, composites)});
      pos = close + 1;
    } else {
      auto next = text.find('<', pos);
      if (next == std::string_view::npos) next = text.size();
      out.push_back(Lit{std::string(text.substr(pos, next - pos))});
      pos = next;
    }
  }
  return out;
}

/// One line per item: a decimal token id, or '=' followed by literal text.
inline std::string to_id_lines(const TokenSeq& seq) {
  std::string out;
  for (const auto& item : seq) {
    if (is_tok(item)) out += std::to_string(tok_id(item));
    else out += "=" + std::get<Lit>(item).text;
    out += '\n';
  }
  return out;
}

inline TokenSeq parse_id_lines(std::string_view text, std::size_t id_limit) {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '=') {
      out.push_back(Lit{std::string(line.substr(1))});
      continue;
    }
    TokenId id = 0;
    auto r = std::from_chars(line.data(), line.data() + line.size(), id);
    if (r.ec != std::errc() || r.ptr != line.data() + line.size())
      throw Error(Errc::BadFormat, "bad token id line \"" + std::string(line) + "\"");
    if (id >= id_limit) throw Error(Errc::UnknownToken, "token id " + std::to_string(id) + " out of range");
    out.push_back(Tok{id});
  }
  return out;
}

}  // namespace svgtok
