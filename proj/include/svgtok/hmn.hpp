#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "svgtok/atomic.hpp"
#include "svgtok/error.hpp"
#include "svgtok/rng.hpp"
#include "svgtok/segment_learner.hpp"

namespace svgtok {

// Embedding initialization for new tokens:
//   e_t = lambda_mu * mu + lambda_n * eps_t + w_sem * phi(desc_t) + w_num * d_t
// mu is the mean base row, eps_t ~ N(0, I) keyed by the token string, phi the
// mean of the base rows named by the token's description and d_t a unit
// numeric direction (coordinate tokens only).

struct HmnParams {
  double lambda_mu = 0.8;
  double lambda_n = 0.02;
  double w_sem = 0.1;
  double w_num = 0.08;
  int rbf_count = 16;
  int poly_degree = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda_mu < 0 || lambda_n < 0 || w_sem < 0 || w_num < 0)
      throw Error(Errc::DomainError, "weights must be non-negative");
    if (rbf_count < 1) throw Error(Errc::DomainError, "rbf_count must be >= 1");
    if (poly_degree < 0) throw Error(Errc::DomainError, "poly_degree must be >= 0");
  }
  int feature_count() const { return rbf_count + poly_degree; }
};

/// Row-major float32 matrix.
struct EmbeddingTable {
  std::size_t rows = 0, cols = 0;
  std::vector<float> data;

  EmbeddingTable() = default;
  EmbeddingTable(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  const float* row(std::size_t i) const { return data.data() + i * cols; }
  float* row(std::size_t i) { return data.data() + i * cols; }

  std::vector<double> mean() const {
    std::vector<double> mu(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) mu[j] += row(i)[j];
    for (auto& v : mu) v /= static_cast<double>(rows);
    return mu;
  }
  bool operator==(const EmbeddingTable&) const = default;
};

struct TokenMeta {
  std::string token;
  std::vector<std::size_t> description_ids;  // base-vocabulary rows
  std::optional<double> numeric_value;       // in [0, 1]
};

// ---------------------------------------------------------------------------
// Numeric branch

/// Gaussian RBF activations at K uniform centers on [0, 1] (width
/// 1/(K-1), so neighbouring bumps overlap) followed by v, v^2, ..., v^deg.
inline std::vector<double> numeric_features(double v, const HmnParams& p) {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(p.feature_count()));
  const int k = p.rbf_count;
  const double sigma = k > 1 ? 1.0 / (k - 1) : 1.0;
  for (int i = 0; i < k; ++i) {
    const double c = k > 1 ? static_cast<double>(i) / (k - 1) : 0.5;
    f.push_back(std::exp(-(v - c) * (v - c) / (2 * sigma * sigma)));
  }
  double pw = 1.0;
  for (int d = 1; d <= p.poly_degree; ++d) f.push_back(pw *= v);
  return f;
}

/// Fixed (K + deg) x D projection with N(0, 1/(K + deg)) entries drawn
/// from the "projection" stream of the seed.
class NumericProjection {
 public:
  NumericProjection(const HmnParams& p, std::size_t dim)
      : in_(static_cast<std::size_t>(p.feature_count())), out_(dim), m_(in_ * dim) {
    const CounterRng rng(p.seed, "projection", "");
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_));
    for (std::size_t i = 0; i < m_.size(); ++i) m_[i] = rng.normal(i) * scale;
  }

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

  std::vector<double> apply(const std::vector<double>& f) const {
    std::vector<double> y(out_, 0.0);
    for (std::size_t i = 0; i < in_; ++i)
      for (std::size_t j = 0; j < out_; ++j) y[j] += f[i] * m_[i * out_ + j];
    return y;
  }

 private:
  std::size_t in_, out_;
  std::vector<double> m_;
};

inline std::vector<double> numeric_direction(double v, const HmnParams& p, const NumericProjection& proj) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::DomainError, "numeric value " + format_number(v) + " outside [0, 1]");
  std::vector<double> y = proj.apply(numeric_features(v, p));
  double n = 0;
  for (double x : y) n += x * x;
  n = std::sqrt(n);
  if (n > 0)
    for (double& x : y) x /= n;
  return y;
}

inline std::vector<double> numeric_direction(double v, const HmnParams& p, std::size_t dim) {
  return numeric_direction(v, p, NumericProjection(p, dim));
}

// ---------------------------------------------------------------------------
// Semantic branch

inline std::vector<double> semantic_embedding(const std::vector<std::size_t>& ids, const EmbeddingTable& base) {
  if (ids.empty()) throw Error(Errc::EmptyDescription, "description resolves to no base-vocabulary ids");
  std::vector<double> out(base.cols, 0.0);
  for (std::size_t id : ids) {
    if (id >= base.rows)
      throw Error(Errc::IdOutOfRange, "base id " + std::to_string(id) + " >= " + std::to_string(base.rows));
    for (std::size_t j = 0; j < base.cols; ++j) out[j] += base.row(id)[j];
  }
  for (double& x : out) x /= static_cast<double>(ids.size());
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

/// Precomputed state shared by all tokens of one run.
struct HmnContext {
  const EmbeddingTable& base;
  HmnParams params;
  std::vector<double> mu;
  NumericProjection projection;

  HmnContext(const EmbeddingTable& b, const HmnParams& p)
      : base(b), params(p), mu((p.validate(), b.mean())), projection(p, b.cols) {
    if (b.rows == 0 || b.cols == 0) throw Error(Errc::DomainError, "base embedding table is empty");
  }
};

inline std::vector<double> noise_vector(const std::string& token, const HmnParams& p, std::size_t dim) {
  const CounterRng rng(p.seed, "noise", token);
  std::vector<double> eps(dim);
  for (std::size_t j = 0; j < dim; ++j) eps[j] = rng.normal(j);
  return eps;
}

inline std::vector<double> init_token(const TokenMeta& meta, const HmnContext& ctx) {
  const auto& p = ctx.params;
  const std::size_t dim = ctx.base.cols;
  std::vector<double> e(dim);
  for (std::size_t j = 0; j < dim; ++j) e[j] = p.lambda_mu * ctx.mu[j];
  if (p.lambda_n != 0) {
    auto eps = noise_vector(meta.token, p, dim);
    for (std::size_t j = 0; j < dim; ++j) e[j] += p.lambda_n * eps[j];
  }
  if (p.w_sem != 0) {
    auto phi = semantic_embedding(meta.description_ids, ctx.base);
    for (std::size_t j = 0; j < dim; ++j) e[j] += p.w_sem * phi[j];
  }
  if (p.w_num != 0 && meta.numeric_value) {
    auto d = numeric_direction(*meta.numeric_value, p, ctx.projection);
    for (std::size_t j = 0; j < dim; ++j) e[j] += p.w_num * d[j];
  }
  return e;
}

inline std::vector<double> init_token(const TokenMeta& meta, const EmbeddingTable& base, const HmnParams& p) {
  return init_token(meta, HmnContext(base, p));
}

/// One float32 row per meta, in input order. Rows depend only on their own
/// meta, so the matrix is independent of evaluation order.
inline EmbeddingTable init_vocab(const std::vector<TokenMeta>& metas, const EmbeddingTable& base, const HmnParams& p) {
  HmnContext ctx(base, p);
  EmbeddingTable out(metas.size(), base.cols);
  for (std::size_t i = 0; i < metas.size(); ++i) {
    auto e = init_token(metas[i], ctx);
    std::transform(e.begin(), e.end(), out.row(i), [](double x) { return static_cast<float>(x); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token metadata

/// Value in [0, 1] for coordinate tokens: P_v -> v / (C + T) and
/// d_v -> (v + C + T) / (2 (C + T)).
inline std::optional<double> numeric_value(TokenId id, const AtomicVocab& vocab) {
  const double m = vocab.max_abs();
  const double v = vocab.coord_value(id);
  switch (vocab.category(id)) {
    case TokenCategory::CoordAbs: return v / m;
    case TokenCategory::CoordRel: return (v + m) / (2 * m);
    default: return std::nullopt;
  }
}

namespace detail {

inline std::string_view command_gloss(PathOp op) {
  switch (op) {
    case PathOp::M: return "move to";
    case PathOp::L: return "line to";
    case PathOp::H: return "horizontal line to";
    case PathOp::V: return "vertical line to";
    case PathOp::C: return "cubic curve to";
    case PathOp::S: return "smooth cubic curve to";
    case PathOp::Q: return "quadratic curve to";
    case PathOp::T: return "smooth quadratic curve to";
    case PathOp::A: return "arc to";
    case PathOp::Z: return "close path";
  }
  return "";
}

inline std::string element_gloss(std::string_view tag) {
  static const std::map<std::string_view, std::string_view> names = {
      {"svg", "vector graphic"},       {"path", "path shape"},         {"g", "group"},
      {"rect", "rectangle"},           {"circle", "circle"},           {"ellipse", "ellipse"},
      {"line", "line"},                {"polyline", "polyline"},       {"polygon", "polygon"},
      {"defs", "definitions"},         {"use", "reuse reference"},     {"linearGradient", "linear gradient"},
      {"radialGradient", "radial gradient"}, {"stop", "gradient stop"}, {"clipPath", "clip path"},
      {"mask", "mask"},                {"pattern", "pattern"},         {"symbol", "symbol"},
      {"text", "text"},                {"title", "title"},             {"desc", "description"}};
  auto it = names.find(tag);
  return std::string(it == names.end() ? tag : it->second);
}

}  // namespace detail

/// Default English description of an atomic token.
inline std::string default_gloss(TokenId id, const AtomicVocab& vocab) {
  switch (vocab.category(id)) {
    case TokenCategory::Struct:
      return std::string(vocab.is_open_tag(id) ? "begin " : "end ") + detail::element_gloss(vocab.tag_name(id));
    case TokenCategory::Cmd: {
      auto [op, rel] = vocab.command_of(id);
      return std::string(rel ? "relative " : "absolute ") + std::string(detail::command_gloss(op));
    }
    case TokenCategory::Flag: {
      std::string what = vocab.is_large_flag(id) ? "large arc" : "sweep direction";
      return what + (vocab.flag_value(id) ? " on" : " off");
    }
    case TokenCategory::CoordAbs: return "absolute position coordinate";
    case TokenCategory::CoordRel: {
      int v = vocab.coord_value(id);
      return std::string("relative offset ") + (v > 0 ? "positive" : v < 0 ? "negative" : "zero");
    }
  }
  return "";
}

/// Composite description: the command glosses of its expansion in order.
inline std::string composite_gloss(const Expansion& e, const AtomicVocab& vocab) {
  std::string out;
  for (TokenId t : e)
    if (vocab.category(t) == TokenCategory::Cmd) {
      if (!out.empty()) out += ' ';
      out += default_gloss(t, vocab);
    }
  return out;
}

/// Maps description words to base-vocabulary ids through a word list
/// (line i of the list is base id i). Lookup is case-insensitive; words
/// absent from the list are skipped.
class WordIndex {
 public:
  WordIndex() = default;
  explicit WordIndex(std::string_view word_list) {
    std::size_t id = 0, pos = 0;
    while (pos <= word_list.size()) {
      auto nl = word_list.find('\n', pos);
      if (nl == std::string_view::npos) nl = word_list.size();
      std::string w = lower(word_list.substr(pos, nl - pos));
      while (!w.empty() && (w.back() == '\r' || w.back() == ' ')) w.pop_back();
      if (!w.empty()) index_.try_emplace(w, id);
      ++id;
      pos = nl + 1;
    }
  }

  std::vector<std::size_t> lookup(std::string_view text) const {
    std::vector<std::size_t> ids;
    std::string word;
    auto flush = [&] {
      if (word.empty()) return;
      auto it = index_.find(word);
      if (it != index_.end()) ids.push_back(it->second);
      word.clear();
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      else flush();
    }
    flush();
    return ids;
  }

 private:
  static std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }
  std::unordered_map<std::string, std::size_t> index_;
};

using DescriptionManifest = std::map<std::string, std::vector<std::size_t>>;

inline DescriptionManifest description_manifest_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    DescriptionManifest m;
    for (auto& [k, v] : j.items()) m[k] = v.get<std::vector<std::size_t>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("description manifest: ") + e.what());
  }
}

/// Metadata for every atomic token followed by every composite. Description
/// ids come from `manifest` when it lists the token, otherwise from the
/// default gloss resolved through `words`.
inline std::vector<TokenMeta> token_metas(const AtomicVocab& vocab, const SegmentVocab* sv, const WordIndex& words,
                                          const DescriptionManifest& manifest = {}) {
  std::vector<TokenMeta> out;
  auto describe = [&](TokenMeta& m, const std::string& gloss) {
    auto it = manifest.find(m.token);
    m.description_ids = it != manifest.end() ? it->second : words.lookup(gloss);
  };
  for (TokenId id = 0; id < vocab.size(); ++id) {
    TokenMeta m{vocab.token(id), {}, numeric_value(id, vocab)};
    describe(m, default_gloss(id, vocab));
    out.push_back(std::move(m));
  }
  if (sv)
    for (std::size_t k = 0; k < sv->size(); ++k) {
      TokenMeta m{SegmentVocab::composite_token(k), {}, std::nullopt};
      describe(m, composite_gloss(sv->composites()[k], vocab));
      out.push_back(std::move(m));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix files
//
// Binary: the ASCII line "SVGTOKMAT1 <rows> <cols>\n" followed by
// rows*cols little-endian float32 values, row-major. Input may instead be
// JSON: {"rows": R, "cols": C, "data": [[...], ...]}.

inline constexpr std::string_view kMatrixMagic = "SVGTOKMAT1";

inline std::string matrix_to_binary(const EmbeddingTable& m) {
  std::string out = std::string(kMatrixMagic) + " " + std::to_string(m.rows) + " " + std::to_string(m.cols) + "\n";
  const std::size_t header = out.size();
  out.resize(header + m.data.size() * 4);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &m.data[i], 4);
    for (int b = 0; b < 4; ++b) out[header + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return out;
}

inline EmbeddingTable matrix_from_bytes(std::string_view bytes) {
  if (bytes.substr(0, kMatrixMagic.size()) == kMatrixMagic) {
    auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw Error(Errc::BadFormat, "matrix header has no newline");
    std::string_view header = bytes.substr(kMatrixMagic.size(), nl - kMatrixMagic.size());
    std::vector<double> dims;
    try {
      dims = parse_number_list(header);
    } catch (const Error&) {
      throw Error(Errc::BadFormat, "bad matrix header");
    }
    if (dims.size() != 2 || dims[0] < 0 || dims[1] < 0)
      throw Error(Errc::BadFormat, "matrix header needs rows and cols");
    EmbeddingTable m(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]));
    std::string_view body = bytes.substr(nl + 1);
    if (body.size() != m.data.size() * 4)
      throw Error(Errc::BadFormat, "matrix body has " + std::to_string(body.size()) + " bytes, expected " +
                                       std::to_string(m.data.size() * 4));
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + b])) << (8 * b);
      std::memcpy(&m.data[i], &bits, 4);
    }
    return m;
  }
  try {
    auto j = nlohmann::json::parse(bytes);
    EmbeddingTable m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& rows = j.at("data");
    if (rows.size() != m.rows) throw Error(Errc::BadFormat, "matrix row count mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (rows[i].size() != m.cols) throw Error(Errc::BadFormat, "matrix row " + std::to_string(i) + " has wrong width");
      for (std::size_t k = 0; k < m.cols; ++k) m.row(i)[k] = rows[i][k].get<float>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("matrix file is neither binary nor JSON: ") + e.what());
  }
}

inline std::string embedding_manifest_json(const std::vector<TokenMeta>& metas, const HmnParams& p, std::size_t dim) {
  nlohmann::ordered_json j;
  j["format"] = "svgtok-embeddings";
  j["version"] = 1;
  j["rng"] = "splitmix64-counter/box-muller";
  j["seed"] = p.seed;
  j["dim"] = dim;
  j["params"] = {{"lambda_mu", p.lambda_mu}, {"lambda_n", p.lambda_n}, {"w_sem", p.w_sem},
                 {"w_num", p.w_num},         {"rbf_count", p.rbf_count}, {"poly_degree", p.poly_degree}};
  auto tokens = nlohmann::ordered_json::array();
  for (const auto& m : metas) tokens.push_back(m.token);
  j["tokens"] = std::move(tokens);
  return j.dump(1) + "\n";
}

}  // namespace svgtok
