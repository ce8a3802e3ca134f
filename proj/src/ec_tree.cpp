#include "enzygen/ec_tree.hpp"

#include <cctype>

#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

std::array<std::string, kTagLevels> prefixes(std::string_view ec) {
  const auto parts = split_ec_number(ec);
  std::array<std::string, kTagLevels> out;
  std::string acc;
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    if (k) acc += '.';
    acc += parts[k];
    out[k] = acc;
  }
  return out;
}

}  // namespace

std::array<std::string, kTagLevels> split_ec_number(std::string_view ec) {
  std::array<std::string, kTagLevels> parts;
  std::size_t level = 0;
  for (char c : ec) {
    if (c == '.') {
      if (parts[level].empty() || ++level >= kTagLevels) throw ParseError("malformed EC number '" + std::string(ec) + "'");
      continue;
    }
    // BRENDA uses "n" prefixes for provisional numbers (e.g. 1.1.1.n2).
    if (!std::isalnum(static_cast<unsigned char>(c))) throw ParseError("malformed EC number '" + std::string(ec) + "'");
    parts[level].push_back(c);
  }
  if (level != kTagLevels - 1 || parts[level].empty()) {
    throw ParseError("EC number '" + std::string(ec) + "' must have four levels");
  }
  return parts;
}

ECTag ECTree::add(std::string_view ec) {
  const auto keys = prefixes(ec);
  ECTag tag;
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    auto it = index_[k].find(keys[k]);
    if (it == index_[k].end()) {
      const std::size_t id = names_[k].size();
      names_[k].push_back(keys[k]);
      index_[k].emplace(keys[k], id);
      parent_[k].push_back(k == 0 ? 0 : tag.levels[k - 1]);
      tag.levels[k] = id;
    } else {
      tag.levels[k] = it->second;
    }
  }
  return tag;
}

ECTag ECTree::lookup(std::string_view ec) const {
  const auto keys = prefixes(ec);
  ECTag tag;
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    auto it = index_[k].find(keys[k]);
    if (it == index_[k].end()) throw VocabularyError("EC tag '" + std::string(ec) + "' not in vocabulary (level " + std::to_string(k + 1) + ")");
    tag.levels[k] = it->second;
  }
  return tag;
}

bool ECTree::contains(std::string_view ec) const {
  try {
    lookup(ec);
    return true;
  } catch (const VocabularyError&) {
    return false;
  }
}

std::string ECTree::label(const ECTag& tag) const {
  const std::size_t leaf = tag.levels[kTagLevels - 1];
  if (leaf >= names_[kTagLevels - 1].size()) throw VocabularyError("tag index out of vocabulary");
  return names_[kTagLevels - 1][leaf];
}

std::array<std::size_t, kTagLevels> ECTree::vocab_sizes() const {
  std::array<std::size_t, kTagLevels> out{};
  for (std::size_t k = 0; k < kTagLevels; ++k) out[k] = names_[k].size();
  return out;
}

std::size_t ECTree::parent(std::size_t level, std::size_t id) const {
  if (level == 0 || level >= kTagLevels) throw IndexError("level has no parent");
  return parent_[level].at(id);
}

std::vector<std::size_t> ECTree::children(std::size_t level, std::size_t id) const {
  std::vector<std::size_t> out;
  if (level + 1 >= kTagLevels) return out;
  for (std::size_t c = 0; c < parent_[level + 1].size(); ++c)
    if (parent_[level + 1][c] == id) out.push_back(c);
  return out;
}

std::vector<ECTag> ECTree::leaves() const {
  std::vector<ECTag> out;
  for (const auto& name : names_[kTagLevels - 1]) out.push_back(lookup(name));
  return out;
}

ECTree ECTree::from_names(const std::array<std::vector<std::string>, kTagLevels>& names) {
  ECTree tree;
  // Insert level by level so ids reproduce the stored order exactly.
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    for (const auto& name : names[k]) {
      if (tree.index_[k].count(name)) throw ParseError("duplicate EC vocabulary entry '" + name + "'");
      std::size_t parent = 0;
      if (k > 0) {
        const auto dot = name.rfind('.');
        if (dot == std::string::npos) throw ParseError("EC vocabulary entry '" + name + "' has no parent");
        auto it = tree.index_[k - 1].find(name.substr(0, dot));
        if (it == tree.index_[k - 1].end()) throw ParseError("EC vocabulary entry '" + name + "' has unknown parent");
        parent = it->second;
      }
      tree.index_[k].emplace(name, tree.names_[k].size());
      tree.names_[k].push_back(name);
      tree.parent_[k].push_back(parent);
    }
  }
  return tree;
}

}  // namespace enzygen
