#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "risklab/corpus.hpp"
#include "risklab/detector.hpp"
#include "risklab/lexicon.hpp"

namespace risklab {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Case-insensitive entity -> country lookup. Every country also resolves to
// itself.
class Gazetteer {
 public:
  void add(std::string_view entity, std::string_view country);

  std::optional<std::string> country_of(std::string_view entity) const;
  const std::set<std::string>& countries() const { return countries_; }
  std::size_t size() const { return entries_.size(); }

  // CSV with header `entity,country`; fields may be double-quoted.
  static Gazetteer load_csv(std::istream& in);
  static Gazetteer load_csv_file(const std::string& path);

 private:
  std::unordered_map<std::string, std::string> entries_;
  std::set<std::string> countries_;
};

struct LocationResolution {
  std::set<std::string> countries;
  std::vector<std::string> unresolved;  // entity order
};

LocationResolution resolve_locations(const Event& event, const Gazetteer& gazetteer);

struct EventNode {
  EventId id = 0;
  std::optional<std::string> story;
  Date date{};
  bool operator==(const EventNode&) const = default;
};

struct LocationNode {
  std::string name;  // entity as written in the event record
  std::string country;
  bool operator==(const LocationNode&) const = default;
};

using EventPair = std::pair<EventId, EventId>;

struct UnresolvedEntity {
  EventId event = 0;
  std::string entity;
  bool operator==(const UnresolvedEntity&) const = default;
};

// Event/date/location/risk nodes with AtDate, AtLocation, PriorTo and InRisk
// edges. Built once, then read-only.
class KnowledgeGraph {
 public:
  const std::map<EventId, EventNode>& events() const { return events_; }
  const std::set<Date>& dates() const { return dates_; }
  const std::map<std::string, LocationNode>& locations() const { return locations_; }
  const std::set<RiskId>& risks() const { return risks_; }

  const std::vector<std::pair<EventId, Date>>& at_date() const { return at_date_; }
  const std::vector<std::pair<EventId, std::string>>& at_location() const { return at_location_; }
  const std::vector<EventPair>& prior_to() const { return prior_to_; }
  const std::vector<std::pair<EventId, RiskId>>& in_risk() const { return in_risk_; }
  const std::vector<UnresolvedEntity>& unresolved() const { return unresolved_; }

  std::set<RiskId> risks_of(EventId event) const;
  std::set<std::string> countries_of(EventId event) const;
  std::set<std::string> stories() const;

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  friend KnowledgeGraph build_graph(const EventSet&, std::span<const LabelDecision>, const Gazetteer&);
  friend KnowledgeGraph graph_from_json(const nlohmann::json&);
  void finalize();

  std::map<EventId, EventNode> events_;
  std::set<Date> dates_;
  std::map<std::string, LocationNode> locations_;
  std::set<RiskId> risks_;
  std::vector<std::pair<EventId, Date>> at_date_;
  std::vector<std::pair<EventId, std::string>> at_location_;
  std::vector<EventPair> prior_to_;
  std::vector<std::pair<EventId, RiskId>> in_risk_;
  std::vector<UnresolvedEntity> unresolved_;
  std::multimap<EventId, RiskId> risk_index_;
  std::multimap<EventId, std::string> location_index_;
};

// Uses the live accepted decisions only; each labeled event becomes an event
// node. Throws GraphError when a label names an event missing from `events`.
KnowledgeGraph build_graph(const EventSet& events, std::span<const LabelDecision> labels,
                           const Gazetteer& gazetteer);

// PriorTo pairs inside one story, sorted by (date1, date2, id1, id2).
std::vector<EventPair> prior_pairs(const KnowledgeGraph& graph, std::string_view story);

nlohmann::json graph_to_json(const KnowledgeGraph& graph);
// Validates the structural invariants; throws GraphError on violation.
KnowledgeGraph graph_from_json(const nlohmann::json& doc);

}  // namespace risklab
