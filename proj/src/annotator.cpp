#include "risklab/annotator.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace risklab {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

ServiceConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError("config file is not a JSON object: " + path);
  ServiceConfig config;
  auto str = [&](const char* key, std::string& target) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
      target = it->get<std::string>();
    }
  };
  str("corpus", config.corpus);
  str("lexicon", config.lexicon);
  str("gazetteer", config.gazetteer);
  str("state_dir", config.state_dir);
  str("bind", config.bind);
  str("reference_dir", config.reference_dir);
  str("token", config.token);
  str("analyst", config.analyst);
  if (auto it = doc.find("snapshot_every"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() < 1) throw ConfigError("config key 'snapshot_every' must be >= 1");
    config.snapshot_every = it->get<int>();
  }
  return config;
}

void apply_env_overrides(ServiceConfig& config) {
  auto env = [](const char* name, std::string& target) {
    if (const char* value = std::getenv(name)) target = value;
  };
  env("RISKLAB_CORPUS", config.corpus);
  env("RISKLAB_LEXICON", config.lexicon);
  env("RISKLAB_GAZETTEER", config.gazetteer);
  env("RISKLAB_STATE_DIR", config.state_dir);
  env("RISKLAB_BIND", config.bind);
  env("RISKLAB_REFERENCE_DIR", config.reference_dir);
  env("RISKLAB_TOKEN", config.token);
  env("RISKLAB_ANALYST", config.analyst);
  if (const char* value = std::getenv("RISKLAB_SNAPSHOT_EVERY")) {
    try {
      config.snapshot_every = std::stoi(value);
    } catch (const std::exception&) {
      throw ConfigError("RISKLAB_SNAPSHOT_EVERY must be an integer");
    }
    if (config.snapshot_every < 1) throw ConfigError("RISKLAB_SNAPSHOT_EVERY must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Audit log

AuditLog::AuditLog(fs::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open audit log " + path_.string() + ": " + std::strerror(errno));
  // Drop a torn tail so the next append starts on a fresh line.
  const off_t size = ::lseek(fd_, 0, SEEK_END);
  if (size > 0) {
    char last = '\n';
    if (::pread(fd_, &last, 1, size - 1) == 1 && last != '\n') {
      std::ifstream in(path_, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto keep = content.rfind('\n');
      if (::ftruncate(fd_, keep == std::string::npos ? 0 : static_cast<off_t>(keep + 1)) != 0) {
        throw std::runtime_error("cannot repair audit log " + path_.string());
      }
    }
  }
}

AuditLog::~AuditLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AuditLog::append(const json& entry) {
  const std::string line = entry.dump() + '\n';
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("audit log write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw std::runtime_error("audit log fsync failed: " + std::string(std::strerror(errno)));
}

std::vector<json> AuditLog::read(const fs::path& path) {
  std::vector<json> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json entry = json::parse(lines[i], nullptr, false);
    if (entry.is_discarded()) {
      if (i + 1 == lines.size()) break;
      throw std::runtime_error("corrupt audit log line " + std::to_string(i + 1) + " in " + path.string());
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Iteration params

IterationConfig iteration_config_from_json(const json& params) {
  IterationConfig config;
  if (params.is_null()) return config;
  if (!params.is_object()) throw std::invalid_argument("params must be an object");
  auto positive_int = [&](const char* key) -> std::optional<int> {
    auto it = params.find(key);
    if (it == params.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer() || it->get<long long>() < 1) {
      throw std::invalid_argument(std::string("param '") + key + "' must be a positive integer");
    }
    return it->get<int>();
  };
  if (auto v = positive_int("n_trees")) config.forest.n_trees = *v;
  config.forest.max_depth = positive_int("max_depth");
  if (auto v = positive_int("min_samples_split")) config.forest.min_samples_split = *v;
  config.forest.features_per_split = positive_int("features_per_split");
  if (auto v = positive_int("top_a")) config.top_a = *v;
  if (auto it = params.find("bootstrap"); it != params.end()) {
    if (!it->is_boolean()) throw std::invalid_argument("param 'bootstrap' must be a boolean");
    config.forest.bootstrap = it->get<bool>();
  }
  if (auto it = params.find("negative_ratio"); it != params.end()) {
    if (it->is_string() && it->get<std::string>() == "inf") {
      config.sampling = NegativeSampling::all();
    } else if (it->is_number() && it->get<double>() >= 0.0) {
      config.sampling.ratio = it->get<double>();
    } else {
      throw std::invalid_argument("param 'negative_ratio' must be a non-negative number or \"inf\"");
    }
  }
  config.forest.validate();
  return config;
}

json iteration_config_to_json(const IterationConfig& config) {
  json out{{"n_trees", config.forest.n_trees},
           {"min_samples_split", config.forest.min_samples_split},
           {"bootstrap", config.forest.bootstrap},
           {"top_a", config.top_a}};
  out["max_depth"] = config.forest.max_depth ? json(*config.forest.max_depth) : json(nullptr);
  out["features_per_split"] =
      config.forest.features_per_split ? json(*config.forest.features_per_split) : json(nullptr);
  out["negative_ratio"] = std::isinf(config.sampling.ratio) ? json("inf") : json(config.sampling.ratio);
  return out;
}

// ---------------------------------------------------------------------------
// Session

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string read_or_create_session_id(const fs::path& state_dir) {
  const fs::path file = state_dir / "session_id";
  if (std::ifstream in(file); in) {
    std::string id;
    std::getline(in, id);
    if (!id.empty()) return id;
  }
  std::random_device rd;
  std::ostringstream id;
  id << std::hex << rd() << rd();
  std::ofstream(file) << id.str() << '\n';
  return id.str();
}

json lexicon_to_json(const Lexicon& lexicon) {
  std::ostringstream out;
  write_lexicon(out, lexicon);
  return json::parse(out.str());
}

Lexicon lexicon_from_json(const json& doc) {
  std::istringstream in(doc.dump());
  return load_lexicon(in);
}

json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

Session::Session(Inputs inputs, fs::path state_dir, int snapshot_every)
    : events_(std::move(inputs.events)),
      gazetteer_(std::move(inputs.gazetteer)),
      reference_dir_(std::move(inputs.reference_dir)),
      state_dir_(std::move(state_dir)),
      snapshot_every_(std::max(1, snapshot_every)),
      lexicon_(std::move(inputs.lexicon)),
      clock_(utc_timestamp) {
  std::error_code ec;
  fs::create_directories(state_dir_, ec);
  if (ec) throw std::runtime_error("cannot create state directory " + state_dir_.string() + ": " + ec.message());
  session_id_ = read_or_create_session_id(state_dir_);
  log_ = std::make_unique<AuditLog>(state_dir_ / "audit.jsonl");
  recover();
}

std::unique_ptr<Session> Session::open(const ServiceConfig& config) {
  if (config.corpus.empty()) throw ConfigError("config names no corpus file");
  if (config.lexicon.empty()) throw ConfigError("config names no lexicon file");
  if (config.state_dir.empty()) throw ConfigError("config names no state directory");
  if (!fs::exists(config.corpus)) throw ConfigError("corpus file not found: " + config.corpus);
  if (!fs::exists(config.lexicon)) throw ConfigError("lexicon file not found: " + config.lexicon);
  if (!config.gazetteer.empty() && !fs::exists(config.gazetteer)) {
    throw ConfigError("gazetteer file not found: " + config.gazetteer);
  }

  LoadResult loaded = load_events_file(config.corpus);
  if (!loaded.rejections.empty()) {
    std::cerr << "risklab: " << loaded.rejections.size() << " corpus records rejected in " << config.corpus << '\n';
  }
  Inputs inputs{std::move(loaded.events), load_lexicon_file(config.lexicon),
                config.gazetteer.empty() ? Gazetteer{} : Gazetteer::load_csv_file(config.gazetteer),
                config.reference_dir};
  auto session = std::make_unique<Session>(std::move(inputs), config.state_dir, config.snapshot_every);
  session->set_default_analyst(config.analyst);
  return session;
}

void Session::recover() {
  std::unique_lock lock(mutex_);
  std::vector<json> entries = AuditLog::read(log_->path());
  std::size_t start = 0;
  const fs::path snapshot_path = state_dir_ / "snapshot.json";
  if (std::ifstream in(snapshot_path); in) {
    json snap = json::parse(in, nullptr, false);
    if (!snap.is_discarded() && snap.value("offset", std::size_t{0}) <= entries.size()) {
      lexicon_ = lexicon_from_json(snap.at("lexicon"));
      for (const auto& d : snap.at("decisions")) {
        decisions_.push_back(decision_from_json(d));
        live_[DecisionKey{decisions_.back().event, decisions_.back().tag}] = decisions_.size() - 1;
      }
      iteration_ = snap.value("iteration", 0);
      lexicon_version_ = snap.value("lexicon_version", 0);
      for (const auto& [key, report] : snap.at("reports").items()) iteration_reports_[std::stoi(key)] = report;
      start = snap.value("offset", std::size_t{0});
    }
  }
  for (std::size_t i = start; i < entries.size(); ++i) apply(entries[i], true);
  entries_ = std::move(entries);
  reserved_iteration_ = iteration_;
  rebuild_queue();
}

void Session::record(json entry) {
  entry["seq"] = entries_.size();
  log_->append(entry);
  apply(entry, false);
  entries_.push_back(std::move(entry));
  maybe_snapshot();
}

void Session::maybe_snapshot() {
  if (entries_.size() % static_cast<std::size_t>(snapshot_every_) == 0) write_snapshot();
}

void Session::write_snapshot() const {
  json decisions = json::array();
  for (const auto& d : decisions_) decisions.push_back(decision_to_json(d));
  json reports = json::object();
  for (const auto& [n, report] : iteration_reports_) reports[std::to_string(n)] = report;
  json snap{{"offset", entries_.size()},     {"iteration", iteration_}, {"lexicon_version", lexicon_version_},
            {"lexicon", lexicon_to_json(lexicon_)}, {"decisions", std::move(decisions)}, {"reports", std::move(reports)}};
  const fs::path tmp = state_dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snap.dump() << '\n';
    if (!out) throw std::runtime_error("cannot write snapshot " + tmp.string());
  }
  fs::rename(tmp, state_dir_ / "snapshot.json");
}

void Session::apply(const json& entry, bool defer_queue) {
  const std::string type = entry.at("type").get<std::string>();
  {
    std::lock_guard guard(graph_mutex_);
    graph_cache_.reset();
  }
  if (type == "decision") {
    LabelDecision d = decision_from_json(entry);
    decisions_.push_back(d);
    const DecisionKey key{d.event, d.tag};
    live_[key] = decisions_.size() - 1;
    if (auto it = queue_.find(key); it != queue_.end()) it->second.verdict = d.verdict;
  } else if (type == "keyword") {
    KeywordPair pair{entry.at("root").get<std::string>(),
                     TagKey{RiskId(entry.at("risk").get<int>()), entry.at("tag").get<std::string>()},
                     entry.value("new_tag", false)};
    lexicon_ = merge_pairs(lexicon_, std::span<const KeywordPair>(&pair, 1), entry.value("iteration", 0));
    ++lexicon_version_;
    queue_dirty_ = true;
    if (!defer_queue) rebuild_queue();
  } else if (type == "iteration") {
    const int n = entry.at("iteration").get<int>();
    iteration_ = std::max(iteration_, n);
    reserved_iteration_ = std::max(reserved_iteration_, iteration_);
    iteration_reports_[n] = entry.at("report");
  } else {
    throw std::runtime_error("unknown audit entry type " + type);
  }
}

void Session::rebuild_queue() {
  queue_.clear();
  const CandidateReport report = detect_candidates(events_, lexicon_);
  for (const Candidate& c : report.candidates) {
    const std::string text = normalize_sentence(events_.find(c.event)->sentence);
    for (const KeywordMatch& m : c.matches) {
      const DecisionKey key{c.event, m.tag};
      auto [it, inserted] = queue_.try_emplace(key);
      QueueItem& item = it->second;
      if (inserted) {
        item.event = c.event;
        item.tag = m.tag;
        item.text = text;
        if (auto live = live_.find(key); live != live_.end()) item.verdict = decisions_[live->second].verdict;
      }
      item.highlights.push_back({m.keyword, m.position, m.position + m.keyword.size()});
    }
  }
  queue_dirty_ = false;
}

std::vector<QueueItem> Session::queue(QueueFilter filter, std::size_t limit) const {
  std::shared_lock lock(mutex_);
  std::vector<QueueItem> out;
  for (const auto& [_, item] : queue_) {
    if (out.size() >= limit) break;
    if (filter == QueueFilter::pending && !item.pending()) continue;
    if (filter == QueueFilter::decided && item.pending()) continue;
    out.push_back(item);
  }
  return out;
}

Outcome Session::post_decision(const DecisionRequest& request) {
  auto verdict = parse_verdict(request.verdict);
  if (!verdict) return {400, error_body("verdict must be 'accepted' or 'rejected'")};
  if (!is_valid_risk(request.risk)) return {404, error_body("unknown risk " + std::to_string(request.risk))};
  const TagKey tag{RiskId(request.risk), request.tag};

  std::unique_lock lock(mutex_);
  if (!lexicon_.find_tag(tag)) return {404, error_body("unknown tag " + to_string(tag))};
  const DecisionKey key{request.event, tag};
  if (!queue_.contains(key)) {
    return {409, error_body("event " + std::to_string(request.event) + " is not queued for tag " + to_string(tag))};
  }
  if (live_.contains(key) && !request.supersede) {
    return {409, error_body("decision already recorded; pass supersede=true to replace it")};
  }
  LabelDecision d{request.event, tag, *verdict, clock_(),
                  request.analyst.empty() ? default_analyst_ : request.analyst};
  json entry = decision_to_json(d);
  entry["type"] = "decision";
  entry["supersede"] = request.supersede;
  record(entry);
  json body = decision_to_json(d);
  body["seq"] = entries_.size() - 1;
  return {200, std::move(body)};
}

Outcome Session::add_keyword(const KeywordRequest& request) {
  if (!is_valid_risk(request.risk)) return {404, error_body("unknown risk " + std::to_string(request.risk))};
  std::string root;
  try {
    root = normalize_root(request.root);
  } catch (const LexiconError& e) {
    return {400, error_body(e.what())};
  }
  if (request.tag.empty()) return {400, error_body("tag name is empty")};
  const TagKey tag{RiskId(request.risk), request.tag};

  std::unique_lock lock(mutex_);
  const Tag* existing = lexicon_.find_tag(tag);
  if (!existing && !request.new_tag) return {404, error_body("unknown tag " + to_string(tag))};
  if (existing && existing->has_root(root)) {
    return {200, {{"merged", false}, {"newly_queued_events", 0}, {"new_items", 0},
                  {"lexicon_version", lexicon_version_}}};
  }

  std::set<DecisionKey> before;
  for (const auto& [key, _] : queue_) before.insert(key);
  record({{"type", "keyword"},
          {"risk", request.risk},
          {"tag", request.tag},
          {"root", root},
          {"iteration", iteration_},
          {"new_tag", existing == nullptr}});
  std::set<EventId> new_events;
  std::size_t new_items = 0;
  for (const auto& [key, _] : queue_) {
    if (before.contains(key)) continue;
    ++new_items;
    new_events.insert(key.first);
  }
  return {200, {{"merged", true}, {"newly_queued_events", new_events.size()}, {"new_items", new_items},
                {"lexicon_version", lexicon_version_}}};
}

int Session::reserve_iteration() {
  std::unique_lock lock(mutex_);
  const int n = ++reserved_iteration_;
  running_.insert(n);
  return n;
}

Outcome Session::run_iteration(const IterationRequest& request) {
  return execute_iteration(reserve_iteration(), request);
}

Outcome Session::execute_iteration(int iteration, const IterationRequest& request) {
  std::optional<Lexicon> lexicon;
  std::vector<LabelDecision> decisions;
  {
    std::shared_lock lock(mutex_);
    lexicon = lexicon_;
    decisions = decisions_;
  }
  IterationConfig config = request.config;
  config.iteration = iteration;
  IterationResult result;
  try {
    result = risklab::run_iteration(events_, *lexicon, decisions, config, request.seed);
  } catch (const std::exception& e) {
    std::unique_lock lock(mutex_);
    running_.erase(iteration);
    return {400, error_body(e.what())};
  }
  json report = report_to_json(result.report);

  std::unique_lock lock(mutex_);
  running_.erase(iteration);
  record({{"type", "iteration"},
          {"iteration", iteration},
          {"seed", request.seed},
          {"params", iteration_config_to_json(config)},
          {"report", report}});
  return {200, std::move(report)};
}

std::optional<json> Session::iteration_status(int iteration) const {
  std::shared_lock lock(mutex_);
  if (running_.contains(iteration)) return json{{"iteration", iteration}, {"status", "running"}};
  auto it = iteration_reports_.find(iteration);
  if (it == iteration_reports_.end()) return std::nullopt;
  return json{{"iteration", iteration}, {"status", "done"}, {"report", it->second}};
}

const KnowledgeGraph& Session::graph_locked() const {
  std::lock_guard guard(graph_mutex_);
  if (!graph_cache_) {
    std::vector<LabelDecision> live;
    live.reserve(live_.size());
    for (const auto& [_, index] : live_) live.push_back(decisions_[index]);
    graph_cache_ = build_graph(events_, live, gazetteer_);
  }
  return *graph_cache_;
}

json Session::network_json() const {
  std::shared_lock lock(mutex_);
  const RiskNetwork net = extract_network(graph_locked());
  json out = network_to_json(net);
  out["stats"] = stats_to_json(network_stats(net));
  return out;
}

Outcome Session::compare_json(const std::string& reference) const {
  if (reference.empty() || !std::all_of(reference.begin(), reference.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
      })) {
    return {400, error_body("reference name must match [A-Za-z0-9_-]+")};
  }
  if (reference_dir_.empty()) return {404, error_body("no reference directory configured")};
  const fs::path path = reference_dir_ / (reference + ".csv");
  if (!fs::exists(path)) return {404, error_body("unknown reference network " + reference)};
  RiskNetwork ref;
  try {
    ref = load_edge_list_file(path.string());
  } catch (const NetworkError& e) {
    return {400, error_body(e.what())};
  }
  std::shared_lock lock(mutex_);
  const RiskNetwork net = extract_network(graph_locked());
  json body = comparison_to_json(compare(ref, net));
  body["a"] = reference;
  body["b"] = "session";
  return {200, std::move(body)};
}

std::string Session::heatmap(HeatmapFormat format) const {
  std::shared_lock lock(mutex_);
  return export_heatmap(heat_scores(count_occurrences(graph_locked())), format);
}

json Session::graph_json() const {
  std::shared_lock lock(mutex_);
  return graph_to_json(graph_locked());
}

json Session::audit(std::size_t since) const {
  std::shared_lock lock(mutex_);
  json entries = json::array();
  for (std::size_t i = since; i < entries_.size(); ++i) entries.push_back(entries_[i]);
  return {{"entries", std::move(entries)}, {"next", entries_.size()}};
}

json Session::status() const {
  std::shared_lock lock(mutex_);
  std::size_t pending = 0;
  for (const auto& [_, item] : queue_) pending += item.pending() ? 1 : 0;
  return {{"session", session_id_},
          {"events", events_.size()},
          {"iteration", iteration_},
          {"lexicon_version", lexicon_version_},
          {"decisions", decisions_.size()},
          {"log_offset", entries_.size()},
          {"queue_items", queue_.size()},
          {"pending", pending},
          {"running_iterations", running_}};
}

void Session::replay(std::span<const json> entries) {
  std::unique_lock lock(mutex_);
  for (const json& source : entries) {
    json entry = source;
    entry.erase("seq");
    record(std::move(entry));
  }
}

int Session::iteration() const {
  std::shared_lock lock(mutex_);
  return iteration_;
}

std::size_t Session::log_size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

Lexicon Session::lexicon() const {
  std::shared_lock lock(mutex_);
  return lexicon_;
}

std::vector<LabelDecision> Session::decisions() const {
  std::shared_lock lock(mutex_);
  return decisions_;
}

}  // namespace risklab
