#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "risklab/kgraph.hpp"
#include "risklab/lexicon.hpp"

namespace risklab {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unordered pair of distinct risks, stored low id first.
struct RiskPair {
  RiskId low;
  RiskId high;

  // Throws NetworkError on a self-loop.
  static RiskPair of(RiskId a, RiskId b);
  auto operator<=>(const RiskPair&) const = default;
};

// Undirected, unweighted graph over the 29 risk nodes.
class RiskNetwork {
 public:
  // Returns false when the edge already exists.
  bool add_edge(RiskId a, RiskId b);
  void add_provenance(const RiskPair& edge, const EventPair& source);

  bool has_edge(RiskId a, RiskId b) const;
  const std::set<RiskPair>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  int degree(RiskId risk) const;
  std::vector<RiskId> neighbors(RiskId risk) const;

  // Generating (e1, e2) prior-to pairs per edge, sorted; empty for networks
  // read from edge lists.
  const std::map<RiskPair, std::vector<EventPair>>& provenance() const { return provenance_; }

  bool same_edges(const RiskNetwork& other) const { return edges_ == other.edges_; }

 private:
  static std::size_t slot(RiskId r) { return static_cast<std::size_t>(r.value()); }

  std::set<RiskPair> edges_;
  std::array<std::bitset<kRiskCount + 1>, kRiskCount + 1> adjacency_{};
  std::map<RiskPair, std::vector<EventPair>> provenance_;
};

struct ExtractOptions {
  // Also link risks that co-occur inside one event, whether or not the event
  // takes part in a prior-to pair. Off by default.
  bool include_single_event_pairs = false;
};

// For every prior-to pair, links each pair of distinct risks in the union of
// the two events' risk sets.
RiskNetwork extract_network(const KnowledgeGraph& graph, const ExtractOptions& options = {});

struct EdgeCounts {
  int intra = 0;  // both endpoints in the category
  int inter = 0;  // exactly one endpoint in the category
  bool operator==(const EdgeCounts&) const = default;
};

struct CategoryEdgeStats {
  std::array<EdgeCounts, 5> per_category{};
  std::size_t edges = 0;

  const EdgeCounts& of(Category c) const { return per_category[static_cast<std::size_t>(c)]; }
  // Message when sum(intra) + sum(inter)/2 differs from the edge count.
  std::optional<std::string> identity_violation() const;
  bool operator==(const CategoryEdgeStats&) const = default;
};

CategoryEdgeStats edge_stats(const RiskNetwork& net);

struct DegreeClustering {
  double avg_degree = 0.0;
  double avg_clustering = 0.0;
};

struct CategoryDegreeStats {
  std::array<DegreeClustering, 5> per_category{};
  DegreeClustering whole;

  const DegreeClustering& of(Category c) const { return per_category[static_cast<std::size_t>(c)]; }
};

// Triangles among neighbours over adjacent neighbour pairs; 0 below degree 2.
double local_clustering(const RiskNetwork& net, RiskId risk);

// Category means use whole-network degrees and neighbourhoods; whole-network
// means run over all 29 nodes.
CategoryDegreeStats degree_stats(const RiskNetwork& net);

// (2 * intra + inter) / |category|.
double category_average_degree(Category category, const EdgeCounts& counts);
double whole_average_degree(std::size_t edges);

struct NetworkStats {
  CategoryEdgeStats edges;
  CategoryDegreeStats degrees;
};

NetworkStats network_stats(const RiskNetwork& net);

struct NetworkComparison {
  RiskNetwork common;
  RiskNetwork only_a;
  RiskNetwork only_b;
  NetworkStats a_stats;
  NetworkStats b_stats;
  NetworkStats common_stats;
  NetworkStats only_a_stats;
  NetworkStats only_b_stats;
};

NetworkComparison compare(const RiskNetwork& a, const RiskNetwork& b);

// CSV `risk_a,risk_b`, optional header, ids 1..29; duplicates collapse.
RiskNetwork load_edge_list(std::istream& in);
RiskNetwork load_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const RiskNetwork& net);

double round2(double value);

nlohmann::json network_to_json(const RiskNetwork& net);
nlohmann::json stats_to_json(const NetworkStats& stats);
// Rows common, a_only, a, b_only, b, each shaped like the edge and degree tables.
nlohmann::json comparison_to_json(const NetworkComparison& cmp);

// Checks externally supplied edge-count rows ({"name", "intra":[5], "inter":[5],
// "edges"}) against the intra/inter identity; one warning per violating row.
std::vector<std::string> validate_edge_table(const nlohmann::json& rows);

}  // namespace risklab
