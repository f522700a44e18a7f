#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "risklab/corpus.hpp"
#include "risklab/forest.hpp"
#include "risklab/lexicon.hpp"

namespace risklab {

enum class Verdict { accepted, rejected };

std::string_view verdict_name(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view name);

struct LabelDecision {
  EventId event = 0;
  TagKey tag{RiskId(1), {}};
  Verdict verdict = Verdict::accepted;
  std::string decided_at;
  std::string decided_by;

  bool operator==(const LabelDecision&) const = default;
};

class DecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json decision_to_json(const LabelDecision& decision);
LabelDecision decision_from_json(const nlohmann::json& record);
std::vector<LabelDecision> load_decisions(std::istream& in);
std::vector<LabelDecision> load_decisions_file(const std::string& path);
void write_decisions(std::ostream& out, std::span<const LabelDecision> decisions);

using DecisionKey = std::pair<EventId, TagKey>;

// Latest decision per (event, tag); later entries in the log supersede.
std::map<DecisionKey, LabelDecision> live_decisions(std::span<const LabelDecision> log);

struct Candidate {
  EventId event = 0;
  std::vector<TagKey> tags;  // distinct, sorted
  std::vector<KeywordMatch> matches;
};

struct CandidateReport {
  std::vector<Candidate> candidates;   // corpus order
  std::vector<EventId> filtered_out;   // corpus order
  std::size_t total = 0;

  double filter_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(filtered_out.size()) / static_cast<double>(total);
  }
};

CandidateReport detect_candidates(const EventSet& events, const Lexicon& lexicon);

// Never-matched events sampled as extra negatives, up to
// ceil(ratio * |positives|). An infinite ratio takes the whole pool.
struct NegativeSampling {
  double ratio = 1.0;

  static NegativeSampling none() { return {0.0}; }
  static NegativeSampling all() { return {std::numeric_limits<double>::infinity()}; }
};

class InsufficientLabels : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingSet {
  TagKey tag{RiskId(1), {}};
  std::vector<EventId> positive_ids;
  std::vector<EventId> negative_ids;
  std::vector<BagOfWords> positives;
  std::vector<BagOfWords> negatives;
  std::vector<std::string> vocabulary;  // sorted, unique

  FeatureMatrix to_matrix() const;
};

// `unmatched_pool` lists events no keyword matched; it feeds negative
// sampling. Throws InsufficientLabels when no event was accepted for the tag
// and DecisionError when a decision names an unknown event.
TrainingSet build_training(const TagKey& tag, std::span<const LabelDecision> decisions, const EventSet& events,
                           std::span<const EventId> unmatched_pool, const NegativeSampling& sampling,
                           std::uint64_t seed);

ForestModel train_forest(const TrainingSet& ts, const ForestParams& params, std::uint64_t seed);

struct RankedWord {
  std::string word;
  double importance = 0.0;
  bool operator==(const RankedWord&) const = default;
};

// Words with positive importance, descending, ties broken by word.
using FeatureRanking = std::vector<RankedWord>;

FeatureRanking rank_features(const ForestModel& model, const TrainingSet& ts);

bool is_stop_word(std::string_view word);
std::span<const std::string_view> stop_words();

struct KeywordProposal {
  TagKey tag{RiskId(1), {}};
  std::vector<std::string> candidates;
  int a = 5;
};

KeywordProposal propose_keywords(const FeatureRanking& ranking, const Lexicon& lexicon, const TagKey& tag,
                                 int a = 5);

struct IterationConfig {
  int iteration = 1;
  ForestParams forest;
  NegativeSampling sampling;
  int top_a = 5;
};

struct TagReport {
  TagKey tag{RiskId(1), {}};
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<std::string> proposals;
};

struct SkippedTag {
  TagKey tag{RiskId(1), {}};
  std::string reason;
};

struct IterationReport {
  int iteration = 1;
  std::vector<TagReport> per_tag;
  std::vector<SkippedTag> skipped;
  double filter_rate = 0.0;
};

struct IterationResult {
  std::vector<KeywordProposal> proposals;
  IterationReport report;
};

// One pass of candidate detection, training-set assembly, forest training,
// ranking and proposal for every lexicon tag with enough labels. Tags are
// processed in lexicon order, each with its own seed derived from `seed`.
IterationResult run_iteration(const EventSet& events, const Lexicon& lexicon,
                              std::span<const LabelDecision> decisions, const IterationConfig& config,
                              std::uint64_t seed);

nlohmann::json report_to_json(const IterationReport& report);

std::uint64_t tag_seed(std::uint64_t seed, const TagKey& tag);

}  // namespace risklab
