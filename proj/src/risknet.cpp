#include "risklab/risknet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "csv.hpp"

namespace risklab {

using nlohmann::json;

RiskPair RiskPair::of(RiskId a, RiskId b) {
  if (a == b) throw NetworkError("self-loop on risk " + std::to_string(a.value()));
  return a < b ? RiskPair{a, b} : RiskPair{b, a};
}

bool RiskNetwork::add_edge(RiskId a, RiskId b) {
  const RiskPair edge = RiskPair::of(a, b);
  if (!edges_.insert(edge).second) return false;
  adjacency_[slot(a)].set(slot(b));
  adjacency_[slot(b)].set(slot(a));
  return true;
}

void RiskNetwork::add_provenance(const RiskPair& edge, const EventPair& source) {
  if (!edges_.contains(edge)) throw NetworkError("provenance for a missing edge");
  auto& sources = provenance_[edge];
  auto it = std::lower_bound(sources.begin(), sources.end(), source);
  if (it == sources.end() || *it != source) sources.insert(it, source);
}

bool RiskNetwork::has_edge(RiskId a, RiskId b) const { return adjacency_[slot(a)].test(slot(b)); }

int RiskNetwork::degree(RiskId risk) const { return static_cast<int>(adjacency_[slot(risk)].count()); }

std::vector<RiskId> RiskNetwork::neighbors(RiskId risk) const {
  std::vector<RiskId> out;
  const auto& row = adjacency_[slot(risk)];
  for (int v = 1; v <= kRiskCount; ++v) {
    if (row.test(static_cast<std::size_t>(v))) out.emplace_back(v);
  }
  return out;
}

namespace {

void link_all(RiskNetwork& net, const std::set<RiskId>& risks, const std::optional<EventPair>& source) {
  for (auto i = risks.begin(); i != risks.end(); ++i) {
    for (auto j = std::next(i); j != risks.end(); ++j) {
      net.add_edge(*i, *j);
      if (source) net.add_provenance(RiskPair::of(*i, *j), *source);
    }
  }
}

}  // namespace

RiskNetwork extract_network(const KnowledgeGraph& graph, const ExtractOptions& options) {
  RiskNetwork net;
  for (const EventPair& pair : graph.prior_to()) {
    std::set<RiskId> joined = graph.risks_of(pair.first);
    const auto second = graph.risks_of(pair.second);
    joined.insert(second.begin(), second.end());
    link_all(net, joined, pair);
  }
  if (options.include_single_event_pairs) {
    for (const auto& [id, _] : graph.events()) link_all(net, graph.risks_of(id), std::nullopt);
  }
  return net;
}

std::optional<std::string> CategoryEdgeStats::identity_violation() const {
  int intra = 0;
  int inter = 0;
  for (const auto& c : per_category) {
    intra += c.intra;
    inter += c.inter;
  }
  if (inter % 2 == 0 && static_cast<std::size_t>(intra + inter / 2) == edges) return std::nullopt;
  return "sum(intra)=" + std::to_string(intra) + " plus sum(inter)/2=" + std::to_string(inter) + "/2 does not equal " +
         std::to_string(edges) + " edges";
}

CategoryEdgeStats edge_stats(const RiskNetwork& net) {
  CategoryEdgeStats stats;
  stats.edges = net.edge_count();
  for (const RiskPair& e : net.edges()) {
    const auto a = static_cast<std::size_t>(e.low.category());
    const auto b = static_cast<std::size_t>(e.high.category());
    if (a == b) {
      ++stats.per_category[a].intra;
    } else {
      ++stats.per_category[a].inter;
      ++stats.per_category[b].inter;
    }
  }
  return stats;
}

double local_clustering(const RiskNetwork& net, RiskId risk) {
  const auto nbrs = net.neighbors(risk);
  const std::size_t k = nbrs.size();
  if (k < 2) return 0.0;
  std::size_t links = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (net.has_edge(nbrs[i], nbrs[j])) ++links;
    }
  }
  return 2.0 * static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1));
}

CategoryDegreeStats degree_stats(const RiskNetwork& net) {
  CategoryDegreeStats stats;
  double degree_sum = 0.0;
  double clustering_sum = 0.0;
  for (Category c : kCategories) {
    const auto members = risks_in(c);
    double d = 0.0;
    double cc = 0.0;
    for (RiskId r : members) {
      d += net.degree(r);
      cc += local_clustering(net, r);
    }
    degree_sum += d;
    clustering_sum += cc;
    const auto n = static_cast<double>(members.size());
    stats.per_category[static_cast<std::size_t>(c)] = {d / n, cc / n};
  }
  stats.whole = {degree_sum / kRiskCount, clustering_sum / kRiskCount};
  return stats;
}

double category_average_degree(Category category, const EdgeCounts& counts) {
  return static_cast<double>(2 * counts.intra + counts.inter) / static_cast<double>(risks_in(category).size());
}

double whole_average_degree(std::size_t edges) { return 2.0 * static_cast<double>(edges) / kRiskCount; }

NetworkStats network_stats(const RiskNetwork& net) { return {edge_stats(net), degree_stats(net)}; }

NetworkComparison compare(const RiskNetwork& a, const RiskNetwork& b) {
  NetworkComparison cmp;
  for (const RiskPair& e : a.edges()) {
    if (b.has_edge(e.low, e.high)) {
      cmp.common.add_edge(e.low, e.high);
    } else {
      cmp.only_a.add_edge(e.low, e.high);
    }
  }
  for (const RiskPair& e : b.edges()) {
    if (!a.has_edge(e.low, e.high)) cmp.only_b.add_edge(e.low, e.high);
  }
  cmp.a_stats = network_stats(a);
  cmp.b_stats = network_stats(b);
  cmp.common_stats = network_stats(cmp.common);
  cmp.only_a_stats = network_stats(cmp.only_a);
  cmp.only_b_stats = network_stats(cmp.only_b);
  return cmp;
}

RiskNetwork load_edge_list(std::istream& in) {
  if (!in) throw NetworkError("edge-list stream is not readable");
  RiskNetwork net;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    auto fields = csv::split_line(line);
    if (!fields || fields->size() != 2) {
      throw NetworkError("edge list line " + std::to_string(line_no) + ": expected risk_a,risk_b");
    }
    const bool header = first_record && (*fields)[0] == "risk_a";
    first_record = false;
    if (header) continue;
    int a = 0;
    int b = 0;
    try {
      std::size_t used_a = 0;
      std::size_t used_b = 0;
      a = std::stoi((*fields)[0], &used_a);
      b = std::stoi((*fields)[1], &used_b);
      if (used_a != (*fields)[0].size() || used_b != (*fields)[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw NetworkError("edge list line " + std::to_string(line_no) + ": risk ids must be integers");
    }
    if (!is_valid_risk(a) || !is_valid_risk(b)) {
      throw NetworkError("edge list line " + std::to_string(line_no) + ": risk id out of range 1-29");
    }
    if (a == b) throw NetworkError("edge list line " + std::to_string(line_no) + ": self-loop");
    net.add_edge(RiskId(a), RiskId(b));
  }
  return net;
}

RiskNetwork load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open edge list: " + path);
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, const RiskNetwork& net) {
  out << "risk_a,risk_b\n";
  for (const RiskPair& e : net.edges()) out << e.low.value() << ',' << e.high.value() << '\n';
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

json network_to_json(const RiskNetwork& net) {
  json nodes = json::array();
  for (RiskId r : RiskId::all()) {
    nodes.push_back({{"id", r.value()}, {"category", category_name(r.category())}, {"degree", net.degree(r)}});
  }
  json edges = json::array();
  for (const RiskPair& e : net.edges()) {
    json provenance = json::array();
    if (auto it = net.provenance().find(e); it != net.provenance().end()) {
      for (const auto& [from, to] : it->second) provenance.push_back({from, to});
    }
    edges.push_back({{"a", e.low.value()}, {"b", e.high.value()}, {"provenance", std::move(provenance)}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"edge_count", net.edge_count()}};
}

json stats_to_json(const NetworkStats& stats) {
  json categories = json::object();
  for (Category c : kCategories) {
    const auto& e = stats.edges.of(c);
    const auto& d = stats.degrees.of(c);
    categories[std::string(category_name(c))] = {{"intra", e.intra},
                                                 {"inter", e.inter},
                                                 {"avg_degree", round2(d.avg_degree)},
                                                 {"avg_clustering", round2(d.avg_clustering)}};
  }
  return {{"categories", std::move(categories)},
          {"whole",
           {{"edges", stats.edges.edges},
            {"avg_degree", round2(stats.degrees.whole.avg_degree)},
            {"avg_clustering", round2(stats.degrees.whole.avg_clustering)}}}};
}

json comparison_to_json(const NetworkComparison& cmp) {
  auto edge_list = [](const RiskNetwork& net) {
    json out = json::array();
    for (const RiskPair& e : net.edges()) out.push_back({e.low.value(), e.high.value()});
    return out;
  };
  json rows = json::array();
  auto row = [&](const char* name, const NetworkStats& stats) {
    json r = stats_to_json(stats);
    r["name"] = name;
    rows.push_back(std::move(r));
  };
  row("common", cmp.common_stats);
  row("a_only", cmp.only_a_stats);
  row("a", cmp.a_stats);
  row("b_only", cmp.only_b_stats);
  row("b", cmp.b_stats);
  return {{"rows", std::move(rows)},
          {"common", edge_list(cmp.common)},
          {"a_only", edge_list(cmp.only_a)},
          {"b_only", edge_list(cmp.only_b)}};
}

std::vector<std::string> validate_edge_table(const json& rows) {
  std::vector<std::string> warnings;
  if (!rows.is_array()) throw NetworkError("edge table must be an array of rows");
  for (const auto& row : rows) {
    const std::string name = row.value("name", std::string("unnamed"));
    const auto& intra = row.at("intra");
    const auto& inter = row.at("inter");
    if (!intra.is_array() || !inter.is_array() || intra.size() != 5 || inter.size() != 5) {
      throw NetworkError("row " + name + " needs five intra and five inter counts");
    }
    CategoryEdgeStats stats;
    for (std::size_t i = 0; i < 5; ++i) stats.per_category[i] = {intra[i].get<int>(), inter[i].get<int>()};
    stats.edges = row.at("edges").get<std::size_t>();
    if (auto violation = stats.identity_violation()) warnings.push_back("row " + name + ": " + *violation);
  }
  return warnings;
}

}  // namespace risklab
