#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "risklab/corpus.hpp"
#include "risklab/detector.hpp"
#include "risklab/geomap.hpp"
#include "risklab/kgraph.hpp"
#include "risklab/lexicon.hpp"
#include "risklab/risknet.hpp"

namespace risklab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::string corpus;
  std::string lexicon;
  std::string gazetteer;      // optional
  std::string state_dir;
  std::string bind = "127.0.0.1:8080";
  std::string reference_dir;  // holds <name>.csv edge lists for /network/compare
  std::string token;          // static bearer token; empty disables the check
  std::string analyst = "analyst";
  int snapshot_every = 100;
};

// JSON config file. Missing keys keep their defaults.
ServiceConfig load_config_file(const std::string& path);
// RISKLAB_CORPUS, RISKLAB_LEXICON, RISKLAB_GAZETTEER, RISKLAB_STATE_DIR,
// RISKLAB_BIND, RISKLAB_REFERENCE_DIR, RISKLAB_TOKEN, RISKLAB_ANALYST,
// RISKLAB_SNAPSHOT_EVERY.
void apply_env_overrides(ServiceConfig& config);

// Append-only JSON-Lines file; every append is flushed to disk before it
// returns.
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path path);
  ~AuditLog();
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  void append(const nlohmann::json& entry);
  const std::filesystem::path& path() const { return path_; }

  // A torn final line (crash mid-write) is dropped; any other malformed line
  // throws.
  static std::vector<nlohmann::json> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

struct Highlight {
  std::string keyword;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct QueueItem {
  EventId event = 0;
  TagKey tag{RiskId(1), {}};
  std::string text;  // normalized sentence the highlights index into
  std::vector<Highlight> highlights;
  std::optional<Verdict> verdict;  // set once decided

  bool pending() const { return !verdict.has_value(); }
};

enum class QueueFilter { pending, decided, all };

// Outcome of a mutating call, mapped onto HTTP status codes by the server.
struct Outcome {
  int status = 200;
  nlohmann::json body;
};

struct DecisionRequest {
  EventId event = 0;
  int risk = 0;
  std::string tag;
  std::string verdict;
  std::string analyst;
  bool supersede = false;
};

struct KeywordRequest {
  int risk = 0;
  std::string tag;
  std::string root;
  bool new_tag = false;
};

struct IterationRequest {
  std::uint64_t seed = 0;
  IterationConfig config;
};

// {"n_trees", "max_depth", "min_samples_split", "features_per_split",
// "bootstrap", "negative_ratio" (number or "inf"), "top_a"}; absent keys keep
// defaults. Throws std::invalid_argument on bad values.
IterationConfig iteration_config_from_json(const nlohmann::json& params);
nlohmann::json iteration_config_to_json(const IterationConfig& config);

// Analyst session state. Mutations are serialized and written to the audit
// log before they are applied; reads run concurrently.
class Session {
 public:
  struct Inputs {
    EventSet events;
    Lexicon lexicon;
    Gazetteer gazetteer;
    std::filesystem::path reference_dir;
  };

  // Recovers from <state_dir>/snapshot.json and <state_dir>/audit.jsonl.
  Session(Inputs inputs, std::filesystem::path state_dir, int snapshot_every = 100);

  // Loads inputs named by the config; errors name the offending path.
  static std::unique_ptr<Session> open(const ServiceConfig& config);

  std::vector<QueueItem> queue(QueueFilter filter, std::size_t limit) const;
  Outcome post_decision(const DecisionRequest& request);
  Outcome add_keyword(const KeywordRequest& request);
  // Synchronous: reserve_iteration() followed by execute_iteration().
  Outcome run_iteration(const IterationRequest& request);
  int reserve_iteration();
  Outcome execute_iteration(int iteration, const IterationRequest& request);
  // {"iteration", "status": running|done, "report"?}; nullopt when unknown.
  std::optional<nlohmann::json> iteration_status(int iteration) const;

  nlohmann::json network_json() const;
  Outcome compare_json(const std::string& reference) const;
  std::string heatmap(HeatmapFormat format) const;
  nlohmann::json graph_json() const;
  nlohmann::json audit(std::size_t since) const;
  nlohmann::json status() const;

  // Applies already-recorded entries (e.g. another session's audit) as new
  // mutations of this session, logging each one.
  void replay(std::span<const nlohmann::json> entries);

  int iteration() const;
  std::size_t log_size() const;
  const std::string& session_id() const { return session_id_; }
  Lexicon lexicon() const;
  std::vector<LabelDecision> decisions() const;

  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }
  void set_default_analyst(std::string analyst) { default_analyst_ = std::move(analyst); }

 private:
  void recover();
  void record(nlohmann::json entry);  // caller holds the write lock
  void apply(const nlohmann::json& entry, bool defer_queue);
  void rebuild_queue();
  void maybe_snapshot();
  void write_snapshot() const;
  const KnowledgeGraph& graph_locked() const;

  const EventSet events_;
  const Gazetteer gazetteer_;
  const std::filesystem::path reference_dir_;
  const std::filesystem::path state_dir_;
  const int snapshot_every_;
  std::string session_id_;
  std::unique_ptr<AuditLog> log_;

  mutable std::shared_mutex mutex_;
  Lexicon lexicon_;
  std::vector<LabelDecision> decisions_;
  std::map<DecisionKey, std::size_t> live_;  // index into decisions_
  std::map<DecisionKey, QueueItem> queue_;
  std::vector<nlohmann::json> entries_;
  std::map<int, nlohmann::json> iteration_reports_;
  int iteration_ = 0;
  int reserved_iteration_ = 0;
  std::set<int> running_;
  int lexicon_version_ = 0;
  bool queue_dirty_ = true;

  mutable std::mutex graph_mutex_;
  mutable std::optional<KnowledgeGraph> graph_cache_;

  std::function<std::string()> clock_;
  std::string default_analyst_ = "analyst";
};

std::string utc_timestamp();

}  // namespace risklab
