#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles here deliberately avoid the library's own algorithms.

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "risklab/corpus.hpp"
#include "risklab/detector.hpp"
#include "risklab/kgraph.hpp"
#include "risklab/lexicon.hpp"
#include "risklab/risknet.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(RISKLAB_DATA_DIR) + "/" + name; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("risklab-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline risklab::Date ymd(int y, unsigned m, unsigned d) {
  return risklab::Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline risklab::Event make_event(risklab::EventId id, std::string sentence, std::optional<std::string> story = {},
                                 risklab::Date date = ymd(2004, 1, 1), std::vector<std::string> entities = {}) {
  risklab::Event e;
  e.id = id;
  e.sentence = std::move(sentence);
  e.story = std::move(story);
  e.date = date;
  e.entities = std::move(entities);
  return e;
}

inline risklab::LabelDecision decide(risklab::EventId event, int risk, std::string tag,
                                     risklab::Verdict verdict = risklab::Verdict::accepted) {
  return {event, risklab::TagKey{risklab::RiskId(risk), std::move(tag)}, verdict, "2004-01-01T00:00:00Z", "tester"};
}

inline risklab::Lexicon seed_lexicon() { return risklab::load_lexicon_file(data_path("seed_lexicon.json")); }

inline risklab::Gazetteer seed_gazetteer() { return risklab::Gazetteer::load_csv_file(data_path("gazetteer.csv")); }

// ---------------------------------------------------------------------------
// Brute-force network extraction over a plain description of labeled events.

struct PlainEvent {
  risklab::EventId id;
  int story;  // -1 for none
  int day;
  std::set<int> risks;
};

inline std::set<std::pair<int, int>> brute_force_edges(const std::vector<PlainEvent>& events) {
  std::set<std::pair<int, int>> edges;
  for (const auto& a : events) {
    for (const auto& b : events) {
      if (a.story < 0 || a.story != b.story || !(a.day < b.day)) continue;
      std::set<int> joined = a.risks;
      joined.insert(b.risks.begin(), b.risks.end());
      for (int x : joined) {
        for (int y : joined) {
          if (x < y) edges.insert({x, y});
        }
      }
    }
  }
  return edges;
}

inline risklab::KnowledgeGraph graph_from_plain(const std::vector<PlainEvent>& events) {
  risklab::EventSet set;
  std::vector<risklab::LabelDecision> labels;
  for (const auto& e : events) {
    std::optional<std::string> story;
    if (e.story >= 0) story = "story " + std::to_string(e.story);
    set.add(make_event(e.id, "event", story, ymd(2010, 1, static_cast<unsigned>(e.day))));
    for (int r : e.risks) labels.push_back(decide(e.id, r, "tag"));
  }
  return risklab::build_graph(set, labels, {});
}

// Random case with at most `max_events` events and 1..`max_risks` risks each.
inline std::vector<PlainEvent> random_plain_events(std::mt19937& rng, int max_events, int max_risks) {
  std::vector<PlainEvent> events;
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_events));
  for (int i = 0; i < n; ++i) {
    PlainEvent e{i + 1, static_cast<int>(rng() % 3) - 1, 1 + static_cast<int>(rng() % 4), {}};
    const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_risks));
    while (static_cast<int>(e.risks.size()) < k) e.risks.insert(1 + static_cast<int>(rng() % 29));
    events.push_back(std::move(e));
  }
  return events;
}

inline std::set<std::pair<int, int>> edge_pairs(const risklab::RiskNetwork& net) {
  std::set<std::pair<int, int>> out;
  for (const auto& e : net.edges()) out.insert({e.low.value(), e.high.value()});
  return out;
}

// ---------------------------------------------------------------------------
// Mean local clustering by direct triangle counting on an adjacency matrix.

template <std::size_t N>
double triangle_mean_clustering(const std::array<std::array<bool, N>, N>& adj) {
  double total = 0.0;
  for (std::size_t v = 0; v < N; ++v) {
    int k = 0;
    for (std::size_t u = 0; u < N; ++u) k += adj[v][u] ? 1 : 0;
    if (k < 2) continue;
    int triangles = 0;
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        if (adj[v][a] && adj[v][b] && adj[a][b]) ++triangles;
      }
    }
    total += static_cast<double>(triangles) / (k * (k - 1) / 2.0);
  }
  return total / static_cast<double>(N);
}

// ---------------------------------------------------------------------------
// Synthetic networks with prescribed per-category intra/inter edge counts.

struct EdgeRow {
  std::array<int, 5> intra;
  std::array<int, 5> inter;
  int edges;
};

inline std::vector<int> category_members(int c) {
  std::vector<int> out;
  for (risklab::RiskId r : risklab::risks_in(risklab::kCategories[static_cast<std::size_t>(c)])) out.push_back(r.value());
  return out;
}

// Adds edges realizing `row` to `net`, never reusing an edge in `taken`.
// Returns false when the greedy placement got stuck.
inline bool realize_row(const EdgeRow& row, std::set<std::pair<int, int>>& taken, risklab::RiskNetwork& net,
                        std::mt19937& rng) {
  auto place = [&](int ca, int cb) {
    std::vector<std::pair<int, int>> free;
    for (int a : category_members(ca)) {
      for (int b : category_members(cb)) {
        const std::pair<int, int> e{std::min(a, b), std::max(a, b)};
        if (a != b && !taken.contains(e)) free.push_back(e);
      }
    }
    if (free.empty()) return false;
    const auto e = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    taken.insert(e);
    net.add_edge(risklab::RiskId(e.first), risklab::RiskId(e.second));
    return true;
  };
  for (int c = 0; c < 5; ++c) {
    for (int i = 0; i < row.intra[c]; ++i) {
      if (!place(c, c)) return false;
    }
  }
  std::array<int, 5> left = row.inter;
  while (true) {
    std::array<int, 5> order{0, 1, 2, 3, 4};
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return left[x] > left[y]; });
    if (left[order[0]] == 0) break;
    bool placed = false;
    for (int j = 1; j < 5 && !placed; ++j) {
      if (left[order[j]] == 0) break;
      if (place(order[0], order[j])) {
        --left[order[0]];
        --left[order[j]];
        placed = true;
      }
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace testing
