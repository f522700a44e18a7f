#include "risklab/geomap.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"

namespace risklab {

using nlohmann::json;

void OccurrenceTable::add(Category category, const std::string& country, long amount) {
  if (amount < 0) throw GeoError("occurrence counts are non-negative");
  counts_[{category, country}] += amount;
}

long OccurrenceTable::count(Category category, const std::string& country) const {
  auto it = counts_.find({category, country});
  return it == counts_.end() ? 0 : it->second;
}

OccurrenceTable count_occurrences(const KnowledgeGraph& graph) {
  OccurrenceTable table;
  for (const auto& [id, _] : graph.events()) {
    const auto countries = graph.countries_of(id);
    if (countries.empty()) continue;
    std::set<Category> categories;
    for (RiskId r : graph.risks_of(id)) categories.insert(r.category());
    for (Category c : categories) {
      for (const auto& country : countries) table.add(c, country);
    }
  }
  return table;
}

double heat_score(long count, long max_count) {
  if (max_count <= 0 || count <= 0) return 0.0;
  return std::log1p(static_cast<double>(count)) / std::log1p(static_cast<double>(max_count));
}

HeatScoreTable heat_scores(const OccurrenceTable& table) {
  std::map<Category, long> max_count;
  for (const auto& [key, count] : table.entries()) {
    long& m = max_count[key.first];
    m = std::max(m, count);
  }
  HeatScoreTable scores;
  for (const auto& [key, count] : table.entries()) {
    scores.emplace(key, HeatEntry{count, heat_score(count, max_count[key.first])});
  }
  return scores;
}

HeatmapFormat parse_heatmap_format(std::string_view name) {
  if (name == "csv") return HeatmapFormat::csv;
  if (name == "geojson") return HeatmapFormat::geojson;
  throw GeoError("unsupported format: " + std::string(name));
}

namespace {

std::string format_double(double value) {
  char buf[32];
  auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

void write_csv(std::ostream& out, const HeatScoreTable& scores) {
  out << "category,country,count,score\n";
  for (const auto& [key, entry] : scores) {
    out << category_name(key.first) << ',' << csv::quote(key.second) << ',' << entry.count << ','
        << format_double(entry.score) << '\n';
  }
}

void write_geojson(std::ostream& out, const HeatScoreTable& scores) {
  std::map<std::string, json> by_country;
  for (const auto& [key, entry] : scores) {
    auto [it, inserted] = by_country.try_emplace(key.second);
    json& props = it->second;
    if (inserted) {
      props["name"] = key.second;
      for (Category c : kCategories) {
        props[std::string(category_name(c))] = 0.0;
        props[std::string(category_name(c)) + "_count"] = 0;
      }
    }
    props[std::string(category_name(key.first))] = entry.score;
    props[std::string(category_name(key.first)) + "_count"] = entry.count;
  }
  json features = json::array();
  for (auto& [country, props] : by_country) {
    features.push_back({{"type", "Feature"}, {"id", country}, {"geometry", nullptr}, {"properties", std::move(props)}});
  }
  out << json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump() << '\n';
}

}  // namespace

void export_heatmap(std::ostream& out, const HeatScoreTable& scores, HeatmapFormat format) {
  if (format == HeatmapFormat::csv) {
    write_csv(out, scores);
  } else {
    write_geojson(out, scores);
  }
}

std::string export_heatmap(const HeatScoreTable& scores, HeatmapFormat format) {
  std::ostringstream out;
  export_heatmap(out, scores, format);
  return out.str();
}

HeatScoreTable read_heatmap_csv(std::istream& in) {
  if (!in) throw GeoError("heat-map stream is not readable");
  HeatScoreTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("category,", 0) == 0) continue;
    auto fields = csv::split_line(line);
    if (!fields || fields->size() != 4) throw GeoError("heat-map line " + std::to_string(line_no) + ": bad record");
    auto category = parse_category((*fields)[0]);
    if (!category) throw GeoError("heat-map line " + std::to_string(line_no) + ": unknown category");
    HeatEntry entry;
    const auto& count = (*fields)[2];
    const auto& score = (*fields)[3];
    auto c = std::from_chars(count.data(), count.data() + count.size(), entry.count);
    auto s = std::from_chars(score.data(), score.data() + score.size(), entry.score);
    if (c.ec != std::errc{} || c.ptr != count.data() + count.size() || s.ec != std::errc{} ||
        s.ptr != score.data() + score.size()) {
      throw GeoError("heat-map line " + std::to_string(line_no) + ": bad number");
    }
    table.insert_or_assign({*category, (*fields)[1]}, entry);
  }
  return table;
}

}  // namespace risklab
