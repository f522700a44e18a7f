#include "risklab/kgraph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>

#include "csv.hpp"

namespace risklab {

using nlohmann::json;

namespace {

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void Gazetteer::add(std::string_view entity, std::string_view country) {
  entity = trim(entity);
  country = trim(country);
  if (entity.empty() || country.empty()) throw GraphError("gazetteer entries need an entity and a country");
  countries_.emplace(country);
  entries_.insert_or_assign(fold_case(entity), std::string(country));
  entries_.try_emplace(fold_case(country), std::string(country));
}

std::optional<std::string> Gazetteer::country_of(std::string_view entity) const {
  auto it = entries_.find(fold_case(trim(entity)));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

Gazetteer Gazetteer::load_csv(std::istream& in) {
  if (!in) throw GraphError("gazetteer stream is not readable");
  Gazetteer gazetteer;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = csv::split_line(line);
    if (!fields || fields->size() != 2) {
      throw GraphError("gazetteer line " + std::to_string(line_no) + ": expected entity,country");
    }
    const bool header = first_record && fold_case((*fields)[0]) == "entity" && fold_case((*fields)[1]) == "country";
    first_record = false;
    if (header) continue;
    gazetteer.add((*fields)[0], (*fields)[1]);
  }
  return gazetteer;
}

Gazetteer Gazetteer::load_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open gazetteer file: " + path);
  return load_csv(in);
}

LocationResolution resolve_locations(const Event& event, const Gazetteer& gazetteer) {
  LocationResolution out;
  for (const auto& entity : event.entities) {
    if (auto country = gazetteer.country_of(entity)) {
      out.countries.insert(*country);
    } else {
      out.unresolved.push_back(entity);
    }
  }
  return out;
}

std::set<RiskId> KnowledgeGraph::risks_of(EventId event) const {
  std::set<RiskId> out;
  auto [first, last] = risk_index_.equal_range(event);
  for (auto it = first; it != last; ++it) out.insert(it->second);
  return out;
}

std::set<std::string> KnowledgeGraph::countries_of(EventId event) const {
  std::set<std::string> out;
  auto [first, last] = location_index_.equal_range(event);
  for (auto it = first; it != last; ++it) out.insert(locations_.at(it->second).country);
  return out;
}

std::set<std::string> KnowledgeGraph::stories() const {
  std::set<std::string> out;
  for (const auto& [_, node] : events_) {
    if (node.story && !node.story->empty()) out.insert(*node.story);
  }
  return out;
}

void KnowledgeGraph::finalize() {
  std::sort(at_date_.begin(), at_date_.end());
  std::sort(at_location_.begin(), at_location_.end());
  at_location_.erase(std::unique(at_location_.begin(), at_location_.end()), at_location_.end());
  std::sort(prior_to_.begin(), prior_to_.end());
  prior_to_.erase(std::unique(prior_to_.begin(), prior_to_.end()), prior_to_.end());
  std::sort(in_risk_.begin(), in_risk_.end());
  in_risk_.erase(std::unique(in_risk_.begin(), in_risk_.end()), in_risk_.end());

  dates_.clear();
  risks_.clear();
  risk_index_.clear();
  location_index_.clear();
  for (const auto& [event, date] : at_date_) dates_.insert(date);
  for (const auto& [event, risk] : in_risk_) {
    risks_.insert(risk);
    risk_index_.emplace(event, risk);
  }
  for (const auto& [event, name] : at_location_) location_index_.emplace(event, name);
}

namespace {

void add_prior_pairs(const std::vector<EventNode>& members, std::vector<EventPair>& out) {
  for (const auto& a : members) {
    for (const auto& b : members) {
      if (a.date < b.date) out.emplace_back(a.id, b.id);
    }
  }
}

}  // namespace

KnowledgeGraph build_graph(const EventSet& events, std::span<const LabelDecision> labels,
                           const Gazetteer& gazetteer) {
  KnowledgeGraph graph;
  for (const auto& [key, decision] : live_decisions(labels)) {
    if (decision.verdict != Verdict::accepted) continue;
    const Event* event = events.find(decision.event);
    if (!event) throw GraphError("label references unknown event " + std::to_string(decision.event));
    graph.in_risk_.emplace_back(event->id, decision.tag.risk);
    if (graph.events_.contains(event->id)) continue;

    graph.events_.emplace(event->id, EventNode{event->id, event->story, event->date});
    graph.at_date_.emplace_back(event->id, event->date);
    for (const auto& entity : event->entities) {
      auto country = gazetteer.country_of(entity);
      if (!country) {
        graph.unresolved_.push_back({event->id, entity});
        continue;
      }
      graph.locations_.try_emplace(entity, LocationNode{entity, *country});
      graph.at_location_.emplace_back(event->id, entity);
    }
  }

  std::map<std::string, std::vector<EventNode>> by_story;
  for (const auto& [id, node] : graph.events_) {
    if (node.story && !node.story->empty()) by_story[*node.story].push_back(node);
  }
  for (const auto& [_, members] : by_story) add_prior_pairs(members, graph.prior_to_);

  graph.finalize();
  return graph;
}

std::vector<EventPair> prior_pairs(const KnowledgeGraph& graph, std::string_view story) {
  bool known = false;
  for (const auto& [_, node] : graph.events()) {
    if (node.story && *node.story == story) {
      known = true;
      break;
    }
  }
  if (!known) throw GraphError("unknown story: " + std::string(story));

  const auto& nodes = graph.events();
  std::vector<EventPair> out;
  for (const auto& pair : graph.prior_to()) {
    const auto& a = nodes.at(pair.first);
    if (a.story && *a.story == story) out.push_back(pair);
  }
  std::sort(out.begin(), out.end(), [&](const EventPair& x, const EventPair& y) {
    const auto& xa = nodes.at(x.first);
    const auto& xb = nodes.at(x.second);
    const auto& ya = nodes.at(y.first);
    const auto& yb = nodes.at(y.second);
    return std::tie(xa.date, xb.date, x.first, x.second) < std::tie(ya.date, yb.date, y.first, y.second);
  });
  return out;
}

json graph_to_json(const KnowledgeGraph& graph) {
  json nodes = json::array();
  for (const auto& [id, node] : graph.events()) {
    nodes.push_back({{"type", "event"},
                     {"id", id},
                     {"story", node.story ? json(*node.story) : json(nullptr)},
                     {"date", format_date(node.date)}});
  }
  for (const auto& date : graph.dates()) nodes.push_back({{"type", "date"}, {"date", format_date(date)}});
  for (const auto& [name, loc] : graph.locations()) {
    nodes.push_back({{"type", "location"}, {"name", name}, {"country", loc.country}});
  }
  for (const auto& risk : graph.risks()) nodes.push_back({{"type", "risk"}, {"id", risk.value()}});

  json edges = json::array();
  for (const auto& [event, date] : graph.at_date()) {
    edges.push_back({{"type", "at_date"}, {"event", event}, {"date", format_date(date)}});
  }
  for (const auto& [event, name] : graph.at_location()) {
    edges.push_back({{"type", "at_location"}, {"event", event}, {"location", name}});
  }
  for (const auto& [from, to] : graph.prior_to()) {
    edges.push_back({{"type", "prior_to"}, {"from", from}, {"to", to}});
  }
  for (const auto& [event, risk] : graph.in_risk()) {
    edges.push_back({{"type", "in_risk"}, {"event", event}, {"risk", risk.value()}});
  }

  json unresolved = json::array();
  for (const auto& u : graph.unresolved()) unresolved.push_back({{"event", u.event}, {"entity", u.entity}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"unresolved", std::move(unresolved)}};
}

namespace {

Date date_field(const json& item, const char* key) {
  auto it = item.find(key);
  if (it == item.end() || !it->is_string()) throw GraphError(std::string("graph item needs date field '") + key + "'");
  auto date = parse_date(it->get<std::string>());
  if (!date) throw GraphError("invalid date in graph: " + it->get<std::string>());
  return *date;
}

template <typename T>
T field(const json& item, const char* key) {
  auto it = item.find(key);
  if (it == item.end()) throw GraphError(std::string("graph item needs field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw GraphError(std::string("graph item has a bad field '") + key + "'");
  }
}

}  // namespace

KnowledgeGraph graph_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges")) {
    throw GraphError("graph document needs 'nodes' and 'edges'");
  }
  KnowledgeGraph graph;
  std::set<Date> declared_dates;
  std::set<int> declared_risks;
  for (const auto& node : doc.at("nodes")) {
    const auto type = field<std::string>(node, "type");
    if (type == "event") {
      EventNode e{field<EventId>(node, "id"), std::nullopt, date_field(node, "date")};
      if (node.contains("story") && !node.at("story").is_null()) e.story = field<std::string>(node, "story");
      if (!graph.events_.emplace(e.id, e).second) throw GraphError("duplicate event node " + std::to_string(e.id));
    } else if (type == "date") {
      declared_dates.insert(date_field(node, "date"));
    } else if (type == "location") {
      LocationNode loc{field<std::string>(node, "name"), field<std::string>(node, "country")};
      graph.locations_.insert_or_assign(loc.name, loc);
    } else if (type == "risk") {
      declared_risks.insert(RiskId(field<int>(node, "id")).value());
    } else {
      throw GraphError("unknown node type " + type);
    }
  }

  auto require_event = [&](EventId id) {
    if (!graph.events_.contains(id)) throw GraphError("edge references unknown event " + std::to_string(id));
  };
  for (const auto& edge : doc.at("edges")) {
    const auto type = field<std::string>(edge, "type");
    if (type == "at_date") {
      const auto event = field<EventId>(edge, "event");
      require_event(event);
      graph.at_date_.emplace_back(event, date_field(edge, "date"));
    } else if (type == "at_location") {
      const auto event = field<EventId>(edge, "event");
      require_event(event);
      auto name = field<std::string>(edge, "location");
      if (!graph.locations_.contains(name)) throw GraphError("edge references unknown location " + name);
      graph.at_location_.emplace_back(event, std::move(name));
    } else if (type == "prior_to") {
      const auto from = field<EventId>(edge, "from");
      const auto to = field<EventId>(edge, "to");
      require_event(from);
      require_event(to);
      graph.prior_to_.emplace_back(from, to);
    } else if (type == "in_risk") {
      const auto event = field<EventId>(edge, "event");
      require_event(event);
      graph.in_risk_.emplace_back(event, RiskId(field<int>(edge, "risk")));
    } else {
      throw GraphError("unknown edge type " + type);
    }
  }
  if (doc.contains("unresolved")) {
    for (const auto& u : doc.at("unresolved")) {
      graph.unresolved_.push_back({field<EventId>(u, "event"), field<std::string>(u, "entity")});
    }
  }

  graph.finalize();

  // Structural invariants.
  std::map<EventId, int> date_edges;
  for (const auto& [event, date] : graph.at_date_) {
    if (date != graph.events_.at(event).date) throw GraphError("at_date edge disagrees with event date");
    ++date_edges[event];
  }
  for (const auto& [id, _] : graph.events_) {
    if (date_edges[id] != 1) throw GraphError("event " + std::to_string(id) + " needs exactly one at_date edge");
  }
  for (const auto& [from, to] : graph.prior_to_) {
    const auto& a = graph.events_.at(from);
    const auto& b = graph.events_.at(to);
    if (!a.story || !b.story || *a.story != *b.story || !(a.date < b.date)) {
      throw GraphError("prior_to edge " + std::to_string(from) + "->" + std::to_string(to) +
                       " needs a shared story and a strictly earlier date");
    }
  }
  if (declared_dates != graph.dates_) throw GraphError("date nodes disagree with at_date edges");
  std::set<int> used_risks;
  for (RiskId r : graph.risks_) used_risks.insert(r.value());
  if (declared_risks != used_risks) throw GraphError("risk nodes disagree with in_risk edges");
  return graph;
}

}  // namespace risklab
