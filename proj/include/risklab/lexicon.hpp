#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "risklab/corpus.hpp"

namespace risklab {

class LexiconError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Category { economic, environmental, geopolitical, societal, technological };

inline constexpr std::array<Category, 5> kCategories = {
    Category::economic, Category::environmental, Category::geopolitical, Category::societal,
    Category::technological};

inline constexpr int kRiskCount = 29;

std::string_view category_name(Category category);
std::optional<Category> parse_category(std::string_view name);

// One of the 29 global risks, numbered as in the canonical appendix tables.
class RiskId {
 public:
  // Throws LexiconError("unknown risk id ...") outside 1..29.
  explicit RiskId(int value);

  int value() const { return value_; }
  Category category() const;

  auto operator<=>(const RiskId&) const = default;

  static std::vector<RiskId> all();

 private:
  int value_;
};

bool is_valid_risk(int value);

// Risk ids of a category, ascending.
std::vector<RiskId> risks_in(Category category);

struct TagKey {
  RiskId risk;
  std::string name;

  auto operator<=>(const TagKey&) const = default;
};

std::string to_string(const TagKey& key);

struct KeywordRoot {
  std::string root;
  std::optional<int> learned_iteration;  // nullopt for seed keywords

  bool is_seed() const { return !learned_iteration.has_value(); }
  bool operator==(const KeywordRoot&) const = default;
};

// Lowercases, trims and strips the trailing truncation hyphen. Throws
// LexiconError on an empty result or interior whitespace.
std::string normalize_root(std::string_view printed);

struct Tag {
  TagKey key;
  std::vector<KeywordRoot> keywords;  // sorted by root, unique roots

  bool has_root(std::string_view root) const;
  bool operator==(const Tag&) const = default;
};

struct RiskInfo {
  RiskId id{1};
  std::string name;
  bool operator==(const RiskInfo&) const = default;
};

struct KeywordPair {
  std::string root;
  TagKey tag;
  bool declare_new_tag = false;
};

struct KeywordMatch {
  EventId event = 0;
  TagKey tag;
  std::string keyword;
  std::size_t position = 0;  // byte offset into normalize_sentence(event.sentence)

  auto operator<=>(const KeywordMatch&) const = default;
};

// Immutable risk/tag/keyword dictionary snapshot. Mutating operations return
// a new snapshot.
class Lexicon {
 public:
  // All 29 risks must be named, one entry each, ascending by id.
  Lexicon(std::vector<RiskInfo> risks, std::vector<Tag> tags);

  const std::vector<RiskInfo>& risks() const { return risks_; }
  const RiskInfo& risk(RiskId id) const { return risks_[static_cast<std::size_t>(id.value() - 1)]; }
  const std::map<TagKey, Tag>& tags() const { return tags_; }
  const Tag* find_tag(const TagKey& key) const;
  std::size_t tag_count() const { return tags_.size(); }

  // Every keyword root owned by any tag of `risk`.
  std::set<std::string> risk_roots(RiskId risk) const;

  bool operator==(const Lexicon&) const = default;

 private:
  friend Lexicon merge_pairs(const Lexicon&, std::span<const KeywordPair>, int);
  friend Lexicon remove_keyword(const Lexicon&, const TagKey&, std::string_view);

  std::vector<RiskInfo> risks_;
  std::map<TagKey, Tag> tags_;
};

Lexicon load_lexicon(std::istream& in);
Lexicon load_lexicon_file(const std::string& path);
void write_lexicon(std::ostream& out, const Lexicon& lexicon);

// Union of current and new keywords. Existing roots keep their origin, so
// the merge is idempotent. A pair naming an unknown tag throws unless it
// carries declare_new_tag.
Lexicon merge_pairs(const Lexicon& lexicon, std::span<const KeywordPair> pairs, int iteration);

// Manual removal; never invoked by the learning loop. Throws on unknown tag.
Lexicon remove_keyword(const Lexicon& lexicon, const TagKey& tag, std::string_view root);

// One match per (tag, keyword) whose root is a substring of the normalized
// sentence; position is the first occurrence. Sorted by (tag, keyword).
std::vector<KeywordMatch> match_keywords(const Event& event, const Lexicon& lexicon);

}  // namespace risklab
