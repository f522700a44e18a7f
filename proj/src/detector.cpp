#include "risklab/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <random>
#include <set>

namespace risklab {

using nlohmann::json;

std::string_view verdict_name(Verdict verdict) { return verdict == Verdict::accepted ? "accepted" : "rejected"; }

std::optional<Verdict> parse_verdict(std::string_view name) {
  if (name == "accepted" || name == "accept") return Verdict::accepted;
  if (name == "rejected" || name == "reject") return Verdict::rejected;
  return std::nullopt;
}

json decision_to_json(const LabelDecision& d) {
  return {{"event", d.event},          {"risk", d.tag.risk.value()},  {"tag", d.tag.name},
          {"verdict", verdict_name(d.verdict)}, {"decided_at", d.decided_at}, {"decided_by", d.decided_by}};
}

LabelDecision decision_from_json(const json& record) {
  if (!record.is_object()) throw DecisionError("decision is not a JSON object");
  auto need = [&](const char* key) -> const json& {
    auto it = record.find(key);
    if (it == record.end()) throw DecisionError(std::string("decision needs field '") + key + "'");
    return *it;
  };
  const json& event = need("event");
  const json& risk = need("risk");
  const json& tag = need("tag");
  const json& verdict = need("verdict");
  if (!event.is_number_integer()) throw DecisionError("decision 'event' must be an integer");
  if (!risk.is_number_integer()) throw DecisionError("decision 'risk' must be an integer");
  if (!tag.is_string()) throw DecisionError("decision 'tag' must be a string");
  if (!verdict.is_string()) throw DecisionError("decision 'verdict' must be a string");
  auto parsed = parse_verdict(verdict.get<std::string>());
  if (!parsed) throw DecisionError("decision verdict must be 'accepted' or 'rejected'");
  if (!is_valid_risk(risk.get<int>())) throw DecisionError("unknown risk id " + std::to_string(risk.get<int>()));

  LabelDecision d;
  d.event = event.get<EventId>();
  d.tag = TagKey{RiskId(risk.get<int>()), tag.get<std::string>()};
  d.verdict = *parsed;
  d.decided_at = record.value("decided_at", std::string{});
  d.decided_by = record.value("decided_by", std::string{});
  return d;
}

std::vector<LabelDecision> load_decisions(std::istream& in) {
  if (!in) throw DecisionError("decision stream is not readable");
  std::vector<LabelDecision> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) throw DecisionError("malformed JSON on decisions line " + std::to_string(line_no));
    try {
      out.push_back(decision_from_json(record));
    } catch (const DecisionError& e) {
      throw DecisionError("decisions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabelDecision> load_decisions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DecisionError("cannot open decisions file: " + path);
  return load_decisions(in);
}

void write_decisions(std::ostream& out, std::span<const LabelDecision> decisions) {
  for (const auto& d : decisions) out << decision_to_json(d).dump() << '\n';
}

std::map<DecisionKey, LabelDecision> live_decisions(std::span<const LabelDecision> log) {
  std::map<DecisionKey, LabelDecision> live;
  for (const auto& d : log) live.insert_or_assign(DecisionKey{d.event, d.tag}, d);
  return live;
}

CandidateReport detect_candidates(const EventSet& events, const Lexicon& lexicon) {
  CandidateReport report;
  report.total = events.size();
  for (const Event& event : events.events()) {
    auto matches = match_keywords(event, lexicon);
    if (matches.empty()) {
      report.filtered_out.push_back(event.id);
      continue;
    }
    Candidate c{event.id, {}, std::move(matches)};
    for (const auto& m : c.matches) {
      if (c.tags.empty() || c.tags.back() != m.tag) c.tags.push_back(m.tag);
    }
    report.candidates.push_back(std::move(c));
  }
  return report;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t tag_seed(std::uint64_t seed, const TagKey& tag) {
  return splitmix64(seed ^ splitmix64(fnv1a(tag.name) + static_cast<std::uint64_t>(tag.risk.value())));
}

FeatureMatrix TrainingSet::to_matrix() const {
  FeatureMatrix matrix(vocabulary.size());
  std::vector<double> row(vocabulary.size());
  auto append = [&](const BagOfWords& bag, bool positive) {
    std::fill(row.begin(), row.end(), 0.0);
    for (const auto& [word, count] : bag.entries()) {
      auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), word);
      row[static_cast<std::size_t>(it - vocabulary.begin())] = count;
    }
    matrix.add_row(row, positive);
  };
  for (const auto& bag : positives) append(bag, true);
  for (const auto& bag : negatives) append(bag, false);
  return matrix;
}

TrainingSet build_training(const TagKey& tag, std::span<const LabelDecision> decisions, const EventSet& events,
                           std::span<const EventId> unmatched_pool, const NegativeSampling& sampling,
                           std::uint64_t seed) {
  if (!(sampling.ratio >= 0.0)) throw std::invalid_argument("negative sampling ratio must be non-negative");
  TrainingSet ts;
  ts.tag = tag;
  for (const auto& [key, d] : live_decisions(decisions)) {
    if (key.second != tag) continue;
    if (!events.find(d.event)) throw DecisionError("decision references unknown event " + std::to_string(d.event));
    (d.verdict == Verdict::accepted ? ts.positive_ids : ts.negative_ids).push_back(d.event);
  }
  if (ts.positive_ids.empty()) throw InsufficientLabels("no accepted events for tag " + to_string(tag));

  std::set<EventId> labeled(ts.positive_ids.begin(), ts.positive_ids.end());
  labeled.insert(ts.negative_ids.begin(), ts.negative_ids.end());
  std::set<EventId> pool_set;
  for (EventId id : unmatched_pool) {
    if (!labeled.contains(id) && events.find(id)) pool_set.insert(id);
  }
  std::vector<EventId> pool(pool_set.begin(), pool_set.end());

  std::size_t wanted = pool.size();
  if (!std::isinf(sampling.ratio)) {
    const double target = std::ceil(sampling.ratio * static_cast<double>(ts.positive_ids.size()));
    wanted = std::min(pool.size(), static_cast<std::size_t>(target));
  }
  if (wanted > 0) {
    std::mt19937_64 rng(tag_seed(seed, tag));
    std::vector<EventId> drawn;
    std::sample(pool.begin(), pool.end(), std::back_inserter(drawn), wanted, rng);
    ts.negative_ids.insert(ts.negative_ids.end(), drawn.begin(), drawn.end());
  }

  std::set<std::string> vocabulary;
  auto bag_for = [&](EventId id) {
    BagOfWords bag = bag_of_words(events.find(id)->sentence);
    for (const auto& [word, _] : bag.entries()) vocabulary.insert(word);
    return bag;
  };
  for (EventId id : ts.positive_ids) ts.positives.push_back(bag_for(id));
  for (EventId id : ts.negative_ids) ts.negatives.push_back(bag_for(id));
  ts.vocabulary.assign(vocabulary.begin(), vocabulary.end());
  return ts;
}

ForestModel train_forest(const TrainingSet& ts, const ForestParams& params, std::uint64_t seed) {
  return ForestModel::train(ts.to_matrix(), params, seed);
}

FeatureRanking rank_features(const ForestModel& model, const TrainingSet& ts) {
  if (model.features() != ts.vocabulary.size()) {
    throw std::invalid_argument("model was not trained on this training set");
  }
  const auto importances = model.feature_importances();
  FeatureRanking ranking;
  for (std::size_t f = 0; f < importances.size(); ++f) {
    if (importances[f] > 0.0) ranking.push_back({ts.vocabulary[f], importances[f]});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedWord& a, const RankedWord& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.word < b.word;
  });
  return ranking;
}

namespace {

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

KeywordProposal propose_keywords(const FeatureRanking& ranking, const Lexicon& lexicon, const TagKey& tag, int a) {
  if (a < 1) throw std::invalid_argument("proposal size a must be at least 1");
  KeywordProposal proposal{tag, {}, a};
  const auto existing = lexicon.risk_roots(tag.risk);
  for (const auto& entry : ranking) {
    if (proposal.candidates.size() >= static_cast<std::size_t>(a)) break;
    if (existing.contains(entry.word) || is_stop_word(entry.word) || utf8_length(entry.word) < 2) continue;
    proposal.candidates.push_back(entry.word);
  }
  return proposal;
}

IterationResult run_iteration(const EventSet& events, const Lexicon& lexicon,
                              std::span<const LabelDecision> decisions, const IterationConfig& config,
                              std::uint64_t seed) {
  config.forest.validate();
  IterationResult result;
  result.report.iteration = config.iteration;

  const CandidateReport candidates = detect_candidates(events, lexicon);
  result.report.filter_rate = candidates.filter_rate();

  std::map<TagKey, std::vector<LabelDecision>> by_tag;
  for (const auto& [key, d] : live_decisions(decisions)) by_tag[key.second].push_back(d);

  for (const auto& [key, tag] : lexicon.tags()) {
    auto it = by_tag.find(key);
    if (it == by_tag.end()) {
      result.report.skipped.push_back({key, "no labels"});
      continue;
    }
    const std::uint64_t seed_for_tag = tag_seed(seed, key);
    TrainingSet ts;
    try {
      ts = build_training(key, it->second, events, candidates.filtered_out, config.sampling, seed_for_tag);
    } catch (const InsufficientLabels&) {
      result.report.skipped.push_back({key, "no positive labels"});
      continue;
    } catch (const DecisionError& e) {
      result.report.skipped.push_back({key, e.what()});
      continue;
    }
    if (ts.negatives.empty()) {
      result.report.skipped.push_back({key, "no negative labels"});
      continue;
    }
    const ForestModel model = train_forest(ts, config.forest, seed_for_tag);
    const FeatureRanking ranking = rank_features(model, ts);
    KeywordProposal proposal = propose_keywords(ranking, lexicon, key, config.top_a);
    result.report.per_tag.push_back({key, ts.positives.size(), ts.negatives.size(), proposal.candidates});
    result.proposals.push_back(std::move(proposal));
  }
  return result;
}

json report_to_json(const IterationReport& report) {
  json per_tag = json::array();
  for (const auto& t : report.per_tag) {
    per_tag.push_back({{"risk", t.tag.risk.value()},
                       {"tag", t.tag.name},
                       {"n_pos", t.n_pos},
                       {"n_neg", t.n_neg},
                       {"proposals", t.proposals}});
  }
  json skipped = json::array();
  for (const auto& s : report.skipped) {
    skipped.push_back({{"risk", s.tag.risk.value()}, {"tag", s.tag.name}, {"reason", s.reason}});
  }
  return {{"iteration", report.iteration},
          {"per_tag", std::move(per_tag)},
          {"skipped", std::move(skipped)},
          {"filter_rate", report.filter_rate}};
}

}  // namespace risklab
