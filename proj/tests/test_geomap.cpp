#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "risklab/geomap.hpp"
#include "support.hpp"

using namespace risklab;
using testing::decide;
using testing::make_event;
using testing::ymd;

namespace {

Gazetteer small_gazetteer() {
  Gazetteer g;
  g.add("Florida", "United States");
  g.add("Georgia", "United States");
  g.add("Bahamas", "Bahamas");
  g.add("Moscow", "Russia");
  return g;
}

OccurrenceTable economic_example() {
  OccurrenceTable t;
  t.add(Category::economic, "Russia", 42);
  t.add(Category::economic, "Japan", 16);
  t.add(Category::economic, "India", 6);
  t.add(Category::economic, "Italy", 2);
  return t;
}

}  // namespace

TEST_CASE("distinct pairs per event") {
  EventSet set;
  set.add(make_event(1, "x", {}, ymd(2004, 1, 1), {"Florida", "Georgia"}));
  set.add(make_event(4571, "y", {}, ymd(2004, 9, 7), {"Florida", "Bahamas", "Georgia"}));
  set.add(make_event(3, "z", {}, ymd(2004, 1, 1), {"Mark Warner"}));
  const std::vector<LabelDecision> labels{decide(1, 10, "storm"), decide(1, 11, "death"), decide(4571, 10, "storm"),
                                          decide(4571, 11, "death"), decide(3, 1, "stock bubble")};
  const auto table = count_occurrences(build_graph(set, labels, small_gazetteer()));
  CHECK(table.count(Category::environmental, "United States") == 2);
  CHECK(table.count(Category::environmental, "Bahamas") == 1);
  CHECK(table.count(Category::economic, "United States") == 0);
  CHECK(table.entries().size() == 2);
}

TEST_CASE("negative counts are refused") {
  OccurrenceTable t;
  CHECK_THROWS_AS(t.add(Category::economic, "X", -1), GeoError);
}

TEST_CASE("heat scores") {
  const auto scores = heat_scores(economic_example());
  auto score = [&](const char* country) { return scores.at({Category::economic, country}).score; };
  CHECK(score("Russia") == 1.0);
  CHECK(std::abs(score("Japan") - 0.75) <= 0.005);
  CHECK(std::abs(score("India") - 0.52) <= 0.005);
  CHECK(std::abs(score("Italy") - 0.29) <= 0.005);
  CHECK(score("Japan") == doctest::Approx(std::log(17.0) / std::log(43.0)));

  CHECK(heat_score(0, 10) == 0.0);
  CHECK(heat_score(0, 0) == 0.0);
  CHECK(heat_score(7, 7) == 1.0);
}

TEST_CASE("scores are monotone and rank-preserving under scaling") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    OccurrenceTable t;
    OccurrenceTable scaled;
    const long k = 1 + static_cast<long>(rng() % 9);
    for (int c = 0; c < 8; ++c) {
      const long count = 1 + static_cast<long>(rng() % 50);
      t.add(Category::societal, "C" + std::to_string(c), count);
      scaled.add(Category::societal, "C" + std::to_string(c), count * k);
    }
    const auto s = heat_scores(t);
    const auto s2 = heat_scores(scaled);
    for (const auto& [key_a, a] : s) {
      CHECK(a.score >= 0.0);
      CHECK(a.score <= 1.0);
      for (const auto& [key_b, b] : s) {
        if (a.count <= b.count) CHECK(a.score <= b.score);
        if (a.count < b.count) CHECK(s2.at(key_a).score < s2.at(key_b).score);
      }
    }
  }
}

TEST_CASE("CSV export") {
  SUBCASE("empty table has the header only") {
    CHECK(export_heatmap({}, HeatmapFormat::csv) == "category,country,count,score\n");
  }
  SUBCASE("one entry") {
    OccurrenceTable t;
    t.add(Category::technological, "Korea, Republic of", 3);
    CHECK(export_heatmap(heat_scores(t), HeatmapFormat::csv) ==
          "category,country,count,score\ntechnological,\"Korea, Republic of\",3,1\n");
  }
  SUBCASE("round-trip") {
    auto t = economic_example();
    t.add(Category::environmental, "United States", 9);
    t.add(Category::environmental, "Cuba", 3);
    const auto scores = heat_scores(t);
    std::istringstream in(export_heatmap(scores, HeatmapFormat::csv));
    CHECK(read_heatmap_csv(in) == scores);
  }
  SUBCASE("bad rows") {
    std::istringstream bad("category,country,count,score\nfood,X,1,1\n");
    CHECK_THROWS_AS(read_heatmap_csv(bad), GeoError);
    std::istringstream nan("economic,X,one,1\n");
    CHECK_THROWS_AS(read_heatmap_csv(nan), GeoError);
  }
}

TEST_CASE("GeoJSON export") {
  using nlohmann::json;
  SUBCASE("empty") {
    const json doc = json::parse(export_heatmap({}, HeatmapFormat::geojson));
    CHECK(doc["type"] == "FeatureCollection");
    CHECK(doc["features"].empty());
  }
  SUBCASE("one feature per country with every category") {
    auto t = economic_example();
    t.add(Category::geopolitical, "Russia", 5);
    const json doc = json::parse(export_heatmap(heat_scores(t), HeatmapFormat::geojson));
    CHECK(doc["features"].size() == 4);
    const json* russia = nullptr;
    for (const auto& f : doc["features"]) {
      if (f["id"] == "Russia") russia = &f;
    }
    REQUIRE(russia != nullptr);
    CHECK((*russia)["type"] == "Feature");
    CHECK((*russia)["geometry"].is_null());
    const auto& props = (*russia)["properties"];
    CHECK(props["name"] == "Russia");
    CHECK(props["economic"] == 1.0);
    CHECK(props["economic_count"] == 42);
    CHECK(props["geopolitical"] == 1.0);
    CHECK(props["societal"] == 0.0);
    CHECK(props["technological_count"] == 0);
  }
}

TEST_CASE("format names") {
  CHECK(parse_heatmap_format("csv") == HeatmapFormat::csv);
  CHECK(parse_heatmap_format("geojson") == HeatmapFormat::geojson);
  CHECK_THROWS_WITH_AS(parse_heatmap_format("png"), "unsupported format: png", GeoError);
}
