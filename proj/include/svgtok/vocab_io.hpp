#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "svgtok/atomic.hpp"

namespace svgtok {

inline constexpr std::string_view kAtomicFormat = "svgtok-atomic";

/// Atomic vocabulary file: parameters plus every token with its id and
/// category, in id order.
inline std::string atomic_vocab_to_json(const AtomicVocab& vocab) {
  nlohmann::ordered_json j;
  j["format"] = kAtomicFormat;
  j["version"] = 1;
  j["canvas"] = vocab.canvas();
  j["tolerance"] = vocab.tolerance();
  j["elements"] = vocab.elements();
  j["size"] = vocab.size();
  auto tokens = nlohmann::ordered_json::array();
  for (TokenId id = 0; id < vocab.size(); ++id)
    tokens.push_back({{"id", id}, {"token", vocab.token(id)}, {"category", category_name(vocab.category(id))}});
  j["tokens"] = std::move(tokens);
  return j.dump(1) + "\n";
}

/// Rebuilds the vocabulary from its parameters and checks every listed
/// token against the rebuilt one.
inline AtomicVocab atomic_vocab_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kAtomicFormat) throw Error(Errc::BadFormat, "not an atomic vocabulary file");
    AtomicVocab vocab(j.at("canvas").get<int>(), j.at("tolerance").get<int>(),
                      j.at("elements").get<std::vector<std::string>>());
    const auto& tokens = j.at("tokens");
    if (tokens.size() != vocab.size()) throw Error(Errc::BadFormat, "token count does not match the parameters");
    for (const auto& t : tokens) {
      auto id = t.at("id").get<TokenId>();
      if (id >= vocab.size() || vocab.token(id) != t.at("token").get<std::string>())
        throw Error(Errc::BadFormat, "token " + std::to_string(id) + " does not match the parameters");
    }
    return vocab;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("atomic vocabulary: ") + e.what());
  }
}

}  // namespace svgtok
