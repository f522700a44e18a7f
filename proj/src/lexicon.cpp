#include "risklab/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace risklab {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kCategoryNames = {"economic", "environmental", "geopolitical",
                                                            "societal", "technological"};

// First risk id of each category; the last category ends at 29.
constexpr std::array<int, 6> kCategoryStart = {1, 10, 15, 20, 26, 30};

}  // namespace

std::string_view category_name(Category category) { return kCategoryNames[static_cast<std::size_t>(category)]; }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

bool is_valid_risk(int value) { return value >= 1 && value <= kRiskCount; }

RiskId::RiskId(int value) : value_(value) {
  if (!is_valid_risk(value)) throw LexiconError("unknown risk id " + std::to_string(value));
}

Category RiskId::category() const {
  for (std::size_t i = 0; i + 1 < kCategoryStart.size(); ++i) {
    if (value_ < kCategoryStart[i + 1]) return static_cast<Category>(i);
  }
  return Category::technological;
}

std::vector<RiskId> RiskId::all() {
  std::vector<RiskId> out;
  for (int v = 1; v <= kRiskCount; ++v) out.emplace_back(v);
  return out;
}

std::vector<RiskId> risks_in(Category category) {
  const auto i = static_cast<std::size_t>(category);
  std::vector<RiskId> out;
  for (int v = kCategoryStart[i]; v < kCategoryStart[i + 1]; ++v) out.emplace_back(v);
  return out;
}

std::string to_string(const TagKey& key) { return std::to_string(key.risk.value()) + "/" + key.name; }

std::string normalize_root(std::string_view printed) {
  auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!printed.empty() && blank(printed.front())) printed.remove_prefix(1);
  while (!printed.empty() && blank(printed.back())) printed.remove_suffix(1);
  if (!printed.empty() && printed.back() == '-') printed.remove_suffix(1);
  if (printed.empty()) throw LexiconError("empty keyword");
  std::string root;
  root.reserve(printed.size());
  for (char c : printed) {
    if (blank(c)) throw LexiconError("keyword '" + std::string(printed) + "' contains whitespace");
    root.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return root;
}

bool Tag::has_root(std::string_view root) const {
  return std::any_of(keywords.begin(), keywords.end(), [&](const KeywordRoot& k) { return k.root == root; });
}

namespace {

void sort_keywords(std::vector<KeywordRoot>& keywords) {
  std::stable_sort(keywords.begin(), keywords.end(),
                   [](const KeywordRoot& a, const KeywordRoot& b) { return a.root < b.root; });
  keywords.erase(std::unique(keywords.begin(), keywords.end(),
                             [](const KeywordRoot& a, const KeywordRoot& b) { return a.root == b.root; }),
                 keywords.end());
}

}  // namespace

Lexicon::Lexicon(std::vector<RiskInfo> risks, std::vector<Tag> tags) : risks_(std::move(risks)) {
  std::sort(risks_.begin(), risks_.end(), [](const RiskInfo& a, const RiskInfo& b) { return a.id < b.id; });
  if (risks_.size() != static_cast<std::size_t>(kRiskCount)) {
    throw LexiconError("lexicon must name exactly " + std::to_string(kRiskCount) + " risks, got " +
                       std::to_string(risks_.size()));
  }
  for (std::size_t i = 0; i < risks_.size(); ++i) {
    if (risks_[i].id.value() != static_cast<int>(i) + 1) {
      throw LexiconError("duplicate or missing risk id near " + std::to_string(i + 1));
    }
  }
  for (Tag& tag : tags) {
    sort_keywords(tag.keywords);
    TagKey key = tag.key;
    if (!tags_.emplace(key, std::move(tag)).second) {
      throw LexiconError("duplicate tag " + to_string(key));
    }
  }
}

const Tag* Lexicon::find_tag(const TagKey& key) const {
  auto it = tags_.find(key);
  return it == tags_.end() ? nullptr : &it->second;
}

std::set<std::string> Lexicon::risk_roots(RiskId risk) const {
  std::set<std::string> out;
  for (auto it = tags_.lower_bound(TagKey{risk, ""}); it != tags_.end() && it->first.risk == risk; ++it) {
    for (const auto& k : it->second.keywords) out.insert(k.root);
  }
  return out;
}

namespace {

int require_int(const json& object, const char* key, const char* what) {
  auto it = object.find(key);
  if (it == object.end() || !it->is_number_integer()) {
    throw LexiconError(std::string(what) + " needs integer field '" + key + "'");
  }
  return it->get<int>();
}

std::string require_string(const json& object, const char* key, const char* what) {
  auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw LexiconError(std::string(what) + " needs string field '" + key + "'");
  }
  return it->get<std::string>();
}

KeywordRoot keyword_from_json(const json& item) {
  if (item.is_string()) return {normalize_root(item.get<std::string>()), std::nullopt};
  if (!item.is_object()) throw LexiconError("keyword entry must be an object or string");
  KeywordRoot keyword{normalize_root(require_string(item, "root", "keyword")), std::nullopt};
  auto origin = item.find("origin");
  if (origin == item.end() || (origin->is_string() && origin->get<std::string>() == "seed")) return keyword;
  if (!origin->is_string() || origin->get<std::string>() != "learned") {
    throw LexiconError("keyword origin must be 'seed' or 'learned'");
  }
  keyword.learned_iteration = require_int(item, "iteration", "learned keyword");
  return keyword;
}

json keyword_to_json(const KeywordRoot& keyword) {
  json out{{"root", keyword.root}, {"origin", keyword.is_seed() ? "seed" : "learned"}};
  if (keyword.learned_iteration) out["iteration"] = *keyword.learned_iteration;
  return out;
}

}  // namespace

Lexicon load_lexicon(std::istream& in) {
  if (!in) throw LexiconError("lexicon stream is not readable");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw LexiconError("lexicon is not a JSON object");

  auto risks_it = doc.find("risks");
  if (risks_it == doc.end() || !risks_it->is_array()) throw LexiconError("lexicon needs a 'risks' array");
  std::vector<RiskInfo> risks;
  for (const auto& item : *risks_it) {
    if (!item.is_object()) throw LexiconError("risk entry must be an object");
    RiskId id(require_int(item, "id", "risk"));
    std::string name = require_string(item, "name", "risk");
    auto category = parse_category(require_string(item, "category", "risk"));
    if (!category) throw LexiconError("risk " + std::to_string(id.value()) + " has an unknown category");
    if (*category != id.category()) {
      throw LexiconError("risk " + std::to_string(id.value()) + " is not in category " +
                         std::string(category_name(*category)));
    }
    risks.push_back({id, std::move(name)});
  }

  std::vector<Tag> tags;
  auto tags_it = doc.find("tags");
  if (tags_it != doc.end() && !tags_it->is_null()) {
    if (!tags_it->is_array()) throw LexiconError("'tags' must be an array");
    for (const auto& item : *tags_it) {
      if (!item.is_object()) throw LexiconError("tag entry must be an object");
      Tag tag{TagKey{RiskId(require_int(item, "risk", "tag")), require_string(item, "name", "tag")}, {}};
      if (tag.key.name.empty()) throw LexiconError("tag name is empty");
      auto keywords = item.find("keywords");
      if (keywords != item.end()) {
        if (!keywords->is_array()) throw LexiconError("tag keywords must be an array");
        for (const auto& k : *keywords) tag.keywords.push_back(keyword_from_json(k));
      }
      tags.push_back(std::move(tag));
    }
  }
  return Lexicon(std::move(risks), std::move(tags));
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError("cannot open lexicon file: " + path);
  return load_lexicon(in);
}

void write_lexicon(std::ostream& out, const Lexicon& lexicon) {
  json doc;
  doc["risks"] = json::array();
  for (const RiskInfo& risk : lexicon.risks()) {
    doc["risks"].push_back(
        {{"id", risk.id.value()}, {"name", risk.name}, {"category", category_name(risk.id.category())}});
  }
  doc["tags"] = json::array();
  for (const auto& [key, tag] : lexicon.tags()) {
    json keywords = json::array();
    for (const auto& k : tag.keywords) keywords.push_back(keyword_to_json(k));
    doc["tags"].push_back({{"risk", key.risk.value()}, {"name", key.name}, {"keywords", std::move(keywords)}});
  }
  out << doc.dump(2) << '\n';
}

Lexicon merge_pairs(const Lexicon& lexicon, std::span<const KeywordPair> pairs, int iteration) {
  Lexicon merged = lexicon;
  for (const KeywordPair& pair : pairs) {
    std::string root = normalize_root(pair.root);
    auto it = merged.tags_.find(pair.tag);
    if (it == merged.tags_.end()) {
      if (!pair.declare_new_tag) throw LexiconError("unknown tag " + to_string(pair.tag));
      if (pair.tag.name.empty()) throw LexiconError("tag name is empty");
      it = merged.tags_.emplace(pair.tag, Tag{pair.tag, {}}).first;
    }
    Tag& tag = it->second;
    if (tag.has_root(root)) continue;
    tag.keywords.push_back({std::move(root), iteration});
    sort_keywords(tag.keywords);
  }
  return merged;
}

Lexicon remove_keyword(const Lexicon& lexicon, const TagKey& tag, std::string_view root) {
  Lexicon out = lexicon;
  auto it = out.tags_.find(tag);
  if (it == out.tags_.end()) throw LexiconError("unknown tag " + to_string(tag));
  const std::string normalized = normalize_root(root);
  std::erase_if(it->second.keywords, [&](const KeywordRoot& k) { return k.root == normalized; });
  return out;
}

std::vector<KeywordMatch> match_keywords(const Event& event, const Lexicon& lexicon) {
  const std::string text = normalize_sentence(event.sentence);
  // Roots shared by several tags are searched once.
  std::unordered_map<std::string_view, std::size_t> first_hit;
  std::vector<KeywordMatch> matches;
  for (const auto& [key, tag] : lexicon.tags()) {
    for (const KeywordRoot& keyword : tag.keywords) {
      auto [it, inserted] = first_hit.try_emplace(keyword.root, std::string::npos);
      if (inserted) it->second = text.find(keyword.root);
      if (it->second == std::string::npos) continue;
      matches.push_back({event.id, key, keyword.root, it->second});
    }
  }
  return matches;
}

}  // namespace risklab
