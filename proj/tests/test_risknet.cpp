#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "risklab/risknet.hpp"
#include "support.hpp"

using namespace risklab;
using nlohmann::json;

namespace {

RiskNetwork net_of(std::initializer_list<std::pair<int, int>> edges) {
  RiskNetwork net;
  for (auto [a, b] : edges) net.add_edge(RiskId(a), RiskId(b));
  return net;
}

RiskNetwork random_network(std::mt19937& rng, double p) {
  RiskNetwork net;
  std::bernoulli_distribution coin(p);
  for (int a = 1; a <= 29; ++a) {
    for (int b = a + 1; b <= 29; ++b) {
      if (coin(rng)) net.add_edge(RiskId(a), RiskId(b));
    }
  }
  return net;
}

}  // namespace

TEST_CASE("edges are undirected without self-loops") {
  RiskNetwork net;
  CHECK(net.add_edge(RiskId(3), RiskId(1)));
  CHECK_FALSE(net.add_edge(RiskId(1), RiskId(3)));
  CHECK(net.has_edge(RiskId(1), RiskId(3)));
  CHECK(net.has_edge(RiskId(3), RiskId(1)));
  CHECK(net.edges().begin()->low == RiskId(1));
  CHECK_THROWS_AS(net.add_edge(RiskId(2), RiskId(2)), NetworkError);
  CHECK(net.degree(RiskId(3)) == 1);
  CHECK(net.neighbors(RiskId(1)) == std::vector<RiskId>{RiskId(3)});
}

TEST_CASE("extraction on small graphs") {
  SUBCASE("worked trio") {
    const auto g = testing::graph_from_plain({{4359, 0, 1, {10}}, {4571, 0, 2, {10, 11}}, {4622, 0, 3, {22}}});
    const RiskNetwork net = extract_network(g);
    CHECK(testing::edge_pairs(net) == std::set<std::pair<int, int>>{{10, 11}, {10, 22}, {11, 22}});
    const auto& prov = net.provenance().at(RiskPair::of(RiskId(10), RiskId(22)));
    CHECK(prov == std::vector<EventPair>{{4359, 4622}, {4571, 4622}});
  }
  SUBCASE("no prior-to edges") {
    const auto g = testing::graph_from_plain({{1, 0, 1, {1, 2, 3}}, {2, 1, 1, {4, 5}}});
    CHECK(extract_network(g).edge_count() == 0);
    const auto with_single = extract_network(g, ExtractOptions{true});
    CHECK(testing::edge_pairs(with_single) ==
          std::set<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}, {4, 5}});
    CHECK(with_single.provenance().empty());
  }
  SUBCASE("one pair with overlapping risk sets") {
    const auto g = testing::graph_from_plain({{1, 0, 1, {1, 2}}, {2, 0, 2, {2, 3}}});
    CHECK(testing::edge_pairs(extract_network(g)) == std::set<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}});
  }
}

TEST_CASE("extraction matches brute force") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto events = testing::random_plain_events(rng, 6, 3);
    CHECK(testing::edge_pairs(extract_network(testing::graph_from_plain(events))) == testing::brute_force_edges(events));
  }
}

TEST_CASE("edge stats") {
  SUBCASE("intra") {
    const auto s = edge_stats(net_of({{1, 2}}));
    CHECK(s.of(Category::economic) == EdgeCounts{1, 0});
    CHECK(s.edges == 1);
    CHECK_FALSE(s.identity_violation());
  }
  SUBCASE("inter") {
    const auto s = edge_stats(net_of({{1, 10}}));
    CHECK(s.of(Category::economic) == EdgeCounts{0, 1});
    CHECK(s.of(Category::environmental) == EdgeCounts{0, 1});
    CHECK_FALSE(s.identity_violation());
  }
  SUBCASE("identity on random networks") {
    std::mt19937 rng(1);
    for (int i = 0; i < 100; ++i) CHECK_FALSE(edge_stats(random_network(rng, 0.3)).identity_violation());
  }
}

TEST_CASE("clustering") {
  SUBCASE("triangle and path") {
    const auto tri = net_of({{1, 2}, {2, 3}, {1, 3}});
    for (int r : {1, 2, 3}) CHECK(local_clustering(tri, RiskId(r)) == 1.0);
    const auto path = net_of({{1, 2}, {2, 3}});
    for (int r : {1, 2, 3}) CHECK(local_clustering(path, RiskId(r)) == 0.0);
    CHECK(local_clustering(path, RiskId(29)) == 0.0);
  }
  SUBCASE("matches triangle counting on random 10-node graphs") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> ids(29);
      std::iota(ids.begin(), ids.end(), 1);
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(10);
      std::array<std::array<bool, 10>, 10> adj{};
      RiskNetwork net;
      const double p = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
      for (int a = 0; a < 10; ++a) {
        for (int b = a + 1; b < 10; ++b) {
          if (std::bernoulli_distribution(p)(rng)) {
            adj[a][b] = adj[b][a] = true;
            net.add_edge(RiskId(ids[a]), RiskId(ids[b]));
          }
        }
      }
      double mean = 0.0;
      for (int id : ids) mean += local_clustering(net, RiskId(id));
      mean /= 10.0;
      const double oracle = testing::triangle_mean_clustering(adj);
      CHECK(mean == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(degree_stats(net).whole.avg_clustering == doctest::Approx(oracle * 10.0 / 29.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("degree identities hold exactly") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_network(rng, std::uniform_real_distribution<double>(0, 1)(rng));
    const auto stats = network_stats(net);
    CHECK(stats.degrees.whole.avg_degree == whole_average_degree(net.edge_count()));
    CHECK(stats.degrees.whole.avg_degree * 29.0 == doctest::Approx(2.0 * static_cast<double>(net.edge_count())));
    for (Category c : kCategories) {
      CHECK(stats.degrees.of(c).avg_degree == doctest::Approx(category_average_degree(c, stats.edges.of(c))).epsilon(1e-14));
    }
  }
  CHECK(round2(whole_average_degree(170)) == 11.72);
  CHECK(round2(category_average_degree(Category::economic, {21, 36})) == 8.67);
}

TEST_CASE("compare") {
  std::mt19937 rng(9);
  SUBCASE("identical") {
    const auto a = random_network(rng, 0.4);
    const auto cmp = compare(a, a);
    CHECK(cmp.common.same_edges(a));
    CHECK(cmp.only_a.edge_count() == 0);
    CHECK(cmp.only_b.edge_count() == 0);
  }
  SUBCASE("disjoint") {
    const auto cmp = compare(net_of({{1, 2}}), net_of({{3, 4}}));
    CHECK(cmp.common.edge_count() == 0);
    CHECK(cmp.only_a.edge_count() == 1);
    CHECK(cmp.only_b.edge_count() == 1);
  }
  SUBCASE("partition laws on random pairs") {
    for (int i = 0; i < 100; ++i) {
      const auto a = random_network(rng, 0.3);
      const auto b = random_network(rng, 0.5);
      const auto cmp = compare(a, b);
      auto common = testing::edge_pairs(cmp.common);
      auto only_a = testing::edge_pairs(cmp.only_a);
      auto only_b = testing::edge_pairs(cmp.only_b);
      std::set<std::pair<int, int>> u;
      std::set_union(common.begin(), common.end(), only_a.begin(), only_a.end(), std::inserter(u, u.end()));
      CHECK(u == testing::edge_pairs(a));
      u.clear();
      std::set_union(common.begin(), common.end(), only_b.begin(), only_b.end(), std::inserter(u, u.end()));
      CHECK(u == testing::edge_pairs(b));
      std::set<std::pair<int, int>> overlap;
      std::set_intersection(common.begin(), common.end(), only_a.begin(), only_a.end(),
                            std::inserter(overlap, overlap.end()));
      CHECK(overlap.empty());
      CHECK(cmp.a_stats.edges.edges == a.edge_count());
      CHECK(cmp.only_b_stats.edges.edges == only_b.size());
    }
  }
}

TEST_CASE("edge-list files") {
  std::istringstream in("risk_a,risk_b\n1,2\n# note\n\n2,10\n2,1\n");
  const auto net = load_edge_list(in);
  CHECK(net.edge_count() == 2);
  std::ostringstream out;
  write_edge_list(out, net);
  CHECK(out.str() == "risk_a,risk_b\n1,2\n2,10\n");

  std::istringstream self("1,1\n");
  CHECK_THROWS_AS(load_edge_list(self), NetworkError);
  std::istringstream range("1,30\n");
  CHECK_THROWS_AS(load_edge_list(range), NetworkError);
  std::istringstream junk("1,x\n");
  CHECK_THROWS_AS(load_edge_list(junk), NetworkError);
  std::istringstream arity("1,2,3\n");
  CHECK_THROWS_AS(load_edge_list(arity), NetworkError);
  CHECK_THROWS_AS(load_edge_list_file("/nonexistent.csv"), NetworkError);
}

TEST_CASE("JSON exports") {
  const auto g = testing::graph_from_plain({{1, 0, 1, {10}}, {2, 0, 2, {10, 11}}, {3, 0, 3, {22}}});
  const auto net = extract_network(g);
  const json doc = network_to_json(net);
  CHECK(doc["nodes"].size() == 29);
  CHECK(doc["edge_count"] == 3);
  int degree_sum = 0;
  for (const auto& n : doc["nodes"]) degree_sum += n["degree"].get<int>();
  CHECK(degree_sum == 6);
  // 10-11 comes from (1,2) and from (2,3) through the union {10,11,22}.
  CHECK(doc["edges"][0]["provenance"] == json::array({json::array({1, 2}), json::array({2, 3})}));

  const json stats = stats_to_json(network_stats(net));
  CHECK(stats["categories"]["environmental"]["intra"] == 1);
  CHECK(stats["categories"]["environmental"]["inter"] == 2);
  CHECK(stats["categories"]["societal"]["inter"] == 2);
  CHECK(stats["whole"]["edges"] == 3);
  CHECK(stats["whole"]["avg_degree"] == round2(6.0 / 29.0));

  const json cmp = comparison_to_json(compare(net, net_of({{1, 2}, {10, 11}})));
  std::vector<std::string> names;
  for (const auto& r : cmp["rows"]) names.push_back(r["name"]);
  CHECK(names == std::vector<std::string>{"common", "a_only", "a", "b_only", "b"});
  CHECK(cmp["common"] == json::array({json::array({10, 11})}));
  CHECK(cmp["b_only"] == json::array({json::array({1, 2})}));
}

TEST_CASE("published edge-count rows satisfy the identity") {
  const json rows = json::array({
      {{"name", "common"}, {"intra", {21, 4, 8, 12, 3}}, {"inter", {36, 22, 29, 47, 12}}, {"edges", 121}},
      {{"name", "a_only"}, {"intra", {4, 6, 2, 2, 3}}, {"inter", {13, 14, 11, 13, 13}}, {"edges", 49}},
      {{"name", "a"}, {"intra", {25, 10, 10, 14, 6}}, {"inter", {49, 36, 40, 60, 25}}, {"edges", 170}},
      {{"name", "b_only"}, {"intra", {6, 0, 0, 1, 0}}, {"inter", {50, 28, 34, 45, 35}}, {"edges", 103}},
      {{"name", "b"}, {"intra", {27, 4, 8, 13, 3}}, {"inter", {86, 50, 63, 92, 47}}, {"edges", 224}},
  });
  CHECK(validate_edge_table(rows).empty());

  json off = rows;
  off[2]["edges"] = 160;
  const auto warnings = validate_edge_table(off);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("row a:") == 0);
  CHECK_THROWS_AS(validate_edge_table(json::object()), NetworkError);
}
