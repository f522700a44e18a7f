#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "risklab/kgraph.hpp"
#include "risklab/lexicon.hpp"

namespace risklab {

class GeoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using CategoryCountry = std::pair<Category, std::string>;

class OccurrenceTable {
 public:
  void add(Category category, const std::string& country, long amount = 1);
  long count(Category category, const std::string& country) const;
  const std::map<CategoryCountry, long>& entries() const { return counts_; }
  bool empty() const { return counts_.empty(); }
  bool operator==(const OccurrenceTable&) const = default;

 private:
  std::map<CategoryCountry, long> counts_;
};

// Each event adds 1 to every distinct (category of one of its risks,
// country of one of its locations) pair.
OccurrenceTable count_occurrences(const KnowledgeGraph& graph);

struct HeatEntry {
  long count = 0;
  double score = 0.0;
  bool operator==(const HeatEntry&) const = default;
};

using HeatScoreTable = std::map<CategoryCountry, HeatEntry>;

// ln(count + 1) / ln(max_count + 1); 0 when the category has no occurrences.
double heat_score(long count, long max_count);
HeatScoreTable heat_scores(const OccurrenceTable& table);

enum class HeatmapFormat { csv, geojson };

// Throws GeoError("unsupported format ...").
HeatmapFormat parse_heatmap_format(std::string_view name);

// CSV `category,country,count,score` or a GeoJSON FeatureCollection with one
// geometry-less feature per country carrying per-category score and count
// properties. Scores are written with round-trip precision.
std::string export_heatmap(const HeatScoreTable& scores, HeatmapFormat format);
void export_heatmap(std::ostream& out, const HeatScoreTable& scores, HeatmapFormat format);

HeatScoreTable read_heatmap_csv(std::istream& in);

}  // namespace risklab
