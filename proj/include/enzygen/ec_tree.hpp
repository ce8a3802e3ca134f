#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace enzygen {

inline constexpr std::size_t kTagLevels = 4;

/// Four-level EC classification, one vocabulary index per level.
struct ECTag {
  std::array<std::size_t, kTagLevels> levels{};
  bool operator==(const ECTag&) const = default;
};

/// Splits "1.1.1.1" into its four numeric components. Throws ParseError.
std::array<std::string, kTagLevels> split_ec_number(std::string_view ec);

// Four-level vocabulary of EC prefixes: level 0 holds "1", level 1 "1.1",
// level 2 "1.1.1", level 3 "1.1.1.1". Each node's parent is the prefix one
// level up, so every tag is a valid root-to-leaf path by construction.
class ECTree {
 public:
  /// Inserts the path for a full EC number and returns its tag.
  ECTag add(std::string_view ec);
  /// Throws VocabularyError if any level is unknown.
  ECTag lookup(std::string_view ec) const;
  bool contains(std::string_view ec) const;

  std::string label(const ECTag& tag) const;
  std::size_t vocab_size(std::size_t level) const { return names_.at(level).size(); }
  std::array<std::size_t, kTagLevels> vocab_sizes() const;
  const std::vector<std::string>& names(std::size_t level) const { return names_.at(level); }

  /// Parent id at level-1 (level ≥ 1).
  std::size_t parent(std::size_t level, std::size_t id) const;
  std::vector<std::size_t> children(std::size_t level, std::size_t id) const;

  /// Every full tag in level-3 index order.
  std::vector<ECTag> leaves() const;

  /// Rebuilds a tree from per-level name lists (checkpoint header).
  static ECTree from_names(const std::array<std::vector<std::string>, kTagLevels>& names);

  bool operator==(const ECTree& other) const { return names_ == other.names_; }

 private:
  std::array<std::vector<std::string>, kTagLevels> names_;
  std::array<std::map<std::string, std::size_t, std::less<>>, kTagLevels> index_;
  std::array<std::vector<std::size_t>, kTagLevels> parent_;
};

}  // namespace enzygen
