#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace claimforge::textcore {

class TextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TokenIds = std::vector<std::size_t>;

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kSep = 4;
  static constexpr std::size_t kReserved = 5;
  static constexpr std::size_t kDefaultCap = 8192;

  Vocabulary();

  // Most frequent tokens first, ties broken lexicographically; at most `cap`
  // entries including the reserved ids.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t cap = kDefaultCap);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens, std::size_t cap = kDefaultCap);

  // One token per line; the token on line i (0-based) has id i + 5.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

  TokenIds encode(std::string_view text) const;
  TokenIds encode_tokens(const std::vector<std::string>& tokens) const;
  std::vector<std::string> tokens(std::span<const std::size_t> ids, bool skip_reserved = true) const;
  std::string decode(std::span<const std::size_t> ids, bool skip_reserved = true) const;

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace claimforge::textcore
