// risklab: headless front end over the library. Every subcommand prints JSON
// (or the requested export format) on stdout; diagnostics go to stderr.
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "risklab/annotator.hpp"
#include "risklab/corpus.hpp"
#include "risklab/detector.hpp"
#include "risklab/geomap.hpp"
#include "risklab/kgraph.hpp"
#include "risklab/lexicon.hpp"
#include "risklab/risknet.hpp"
#include "risklab/server.hpp"

using nlohmann::json;
using namespace risklab;

namespace {

EventSet read_corpus(const std::string& path) {
  LoadResult loaded = load_events_file(path);
  if (!loaded.rejections.empty()) {
    std::cerr << "risklab: " << loaded.rejections.size() << " records rejected in " << path << '\n';
  }
  return std::move(loaded.events);
}

std::vector<LabelDecision> read_decisions(const std::string& path) {
  if (path.empty()) return {};
  return load_decisions_file(path);
}

KnowledgeGraph read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw GraphError("graph file is not JSON: " + path);
  return graph_from_json(doc);
}

struct GraphSource {
  std::string graph;
  std::string corpus;
  std::string decisions;
  std::string gazetteer;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--graph", graph, "Knowledge-graph JSON written by `risklab graph`");
    cmd->add_option("--corpus", corpus, "Event corpus (JSON Lines)");
    cmd->add_option("--decisions", decisions, "Label decisions (JSON Lines)");
    cmd->add_option("--gazetteer", gazetteer, "entity,country CSV");
  }

  KnowledgeGraph load() const {
    if (!graph.empty()) return read_graph(graph);
    if (corpus.empty()) throw CLI::ValidationError("--graph or --corpus", "one of them is required");
    const Gazetteer gaz = gazetteer.empty() ? Gazetteer{} : Gazetteer::load_csv_file(gazetteer);
    return build_graph(read_corpus(corpus), read_decisions(decisions), gaz);
  }
};

json rejections_json(const std::vector<Rejection>& rejections) {
  json out = json::array();
  for (const auto& r : rejections) out.push_back({{"line", r.line}, {"reason", r.reason}});
  return out;
}

json candidates_json(const CandidateReport& report) {
  json candidates = json::array();
  for (const auto& c : report.candidates) {
    json matches = json::array();
    for (const auto& m : c.matches) {
      matches.push_back({{"risk", m.tag.risk.value()}, {"tag", m.tag.name}, {"keyword", m.keyword}, {"position", m.position}});
    }
    candidates.push_back({{"event", c.event}, {"matches", std::move(matches)}});
  }
  return {{"total", report.total},
          {"candidates", std::move(candidates)},
          {"filtered_out", report.filtered_out},
          {"filter_rate", report.filter_rate()}};
}

std::atomic<Server*> g_server{nullptr};

void on_signal(int) {
  if (Server* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risklab: risk-event labeling, knowledge graph and risk network tools"};
  app.require_subcommand(1);

  // load
  std::string corpus;
  std::string rejections_out;
  auto* load = app.add_subcommand("load", "Validate a corpus and report rejected records");
  load->add_option("--corpus", corpus, "Event corpus (JSON Lines)")->required();
  load->add_option("--rejections-out", rejections_out, "Write the rejection report (JSON Lines) here");

  // detect
  std::string lexicon;
  auto* detect = app.add_subcommand("detect", "Match lexicon keywords against the corpus");
  detect->add_option("--corpus", corpus)->required();
  detect->add_option("--lexicon", lexicon)->required();

  // iterate
  std::string decisions;
  std::uint64_t seed = 0;
  int iteration = 1;
  ForestParams forest;
  int max_depth = 0;
  int features_per_split = 0;
  std::string negative_ratio = "1";
  int top_a = 5;
  auto* iterate = app.add_subcommand("iterate", "Train per-tag forests and propose keywords");
  iterate->add_option("--corpus", corpus)->required();
  iterate->add_option("--lexicon", lexicon)->required();
  iterate->add_option("--decisions", decisions)->required();
  iterate->add_option("--seed", seed)->required();
  iterate->add_option("--iteration", iteration)->capture_default_str();
  iterate->add_option("--n-trees", forest.n_trees)->capture_default_str();
  iterate->add_option("--max-depth", max_depth, "0 = unlimited")->capture_default_str();
  iterate->add_option("--min-samples-split", forest.min_samples_split)->capture_default_str();
  iterate->add_option("--features-per-split", features_per_split, "0 = ceil(sqrt(vocabulary))")->capture_default_str();
  iterate->add_flag("!--no-bootstrap", forest.bootstrap, "Train every tree on the full set");
  iterate->add_option("--negative-ratio", negative_ratio, "Sampled negatives per positive, or inf")
      ->capture_default_str();
  iterate->add_option("--top-a", top_a)->capture_default_str();

  // graph / network / heatmap
  GraphSource source;
  auto* graph = app.add_subcommand("graph", "Build the knowledge graph from accepted labels");
  graph->add_option("--corpus", source.corpus)->required();
  graph->add_option("--decisions", source.decisions)->required();
  graph->add_option("--gazetteer", source.gazetteer);

  bool single_event = false;
  std::string network_format = "json";
  auto* network = app.add_subcommand("network", "Extract the risk network");
  source.add_options(network);
  network->add_flag("--single-event-pairs", single_event, "Also link risks that co-occur in one event");
  network->add_option("--format", network_format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  std::string edges_a;
  std::string edges_b;
  auto* cmp = app.add_subcommand("compare", "Compare two risk networks given as edge lists");
  cmp->add_option("--a", edges_a, "Edge list CSV for network A")->required();
  cmp->add_option("--b", edges_b, "Edge list CSV for network B")->required();

  std::string heat_format = "csv";
  auto* heat = app.add_subcommand("heatmap", "Category/country heat scores");
  source.add_options(heat);
  heat->add_option("--format", heat_format)->check(CLI::IsMember({"csv", "geojson"}))->capture_default_str();

  // serve
  std::string config_path;
  ServiceConfig cfg;
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--config", config_path, "JSON config file; flags and RISKLAB_* variables override it");
  serve->add_option("--corpus", cfg.corpus);
  serve->add_option("--lexicon", cfg.lexicon);
  serve->add_option("--gazetteer", cfg.gazetteer);
  serve->add_option("--state-dir", cfg.state_dir);
  serve->add_option("--bind", cfg.bind);
  serve->add_option("--reference-dir", cfg.reference_dir);
  serve->add_option("--token", cfg.token);
  serve->add_option("--analyst", cfg.analyst);
  serve->add_option("--snapshot-every", cfg.snapshot_every)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (load->parsed()) {
      LoadResult loaded = load_events_file(corpus);
      if (!rejections_out.empty()) {
        std::ofstream out(rejections_out);
        write_rejections(out, loaded.rejections);
      }
      std::cout << json{{"events", loaded.events.size()},
                        {"stories", loaded.events.stories().size()},
                        {"rejected", loaded.rejections.size()},
                        {"rejections", rejections_json(loaded.rejections)}}
                       .dump(2)
                << '\n';
    } else if (detect->parsed()) {
      std::cout << candidates_json(detect_candidates(read_corpus(corpus), load_lexicon_file(lexicon))).dump(2) << '\n';
    } else if (iterate->parsed()) {
      IterationConfig config;
      config.iteration = iteration;
      config.forest = forest;
      if (max_depth > 0) config.forest.max_depth = max_depth;
      if (features_per_split > 0) config.forest.features_per_split = features_per_split;
      config.top_a = top_a;
      if (negative_ratio == "inf") {
        config.sampling = NegativeSampling::all();
      } else {
        config.sampling.ratio = std::stod(negative_ratio);
        if (!(config.sampling.ratio >= 0.0)) throw std::invalid_argument("--negative-ratio must be >= 0 or inf");
      }
      config.forest.validate();
      const IterationResult result =
          run_iteration(read_corpus(corpus), load_lexicon_file(lexicon), read_decisions(decisions), config, seed);
      std::cout << report_to_json(result.report).dump(2) << '\n';
    } else if (graph->parsed()) {
      std::cout << graph_to_json(source.load()).dump(2) << '\n';
    } else if (network->parsed()) {
      const RiskNetwork net = extract_network(source.load(), ExtractOptions{single_event});
      if (network_format == "csv") {
        write_edge_list(std::cout, net);
      } else {
        json out = network_to_json(net);
        out["stats"] = stats_to_json(network_stats(net));
        std::cout << out.dump(2) << '\n';
      }
    } else if (cmp->parsed()) {
      const auto result = compare(load_edge_list_file(edges_a), load_edge_list_file(edges_b));
      std::cout << comparison_to_json(result).dump(2) << '\n';
    } else if (heat->parsed()) {
      export_heatmap(std::cout, heat_scores(count_occurrences(source.load())), parse_heatmap_format(heat_format));
    } else if (serve->parsed()) {
      ServiceConfig merged = config_path.empty() ? ServiceConfig{} : load_config_file(config_path);
      apply_env_overrides(merged);
      // Explicit flags win over file and environment.
      for (const auto& [flag, value, target] :
           std::initializer_list<std::tuple<const char*, std::string*, std::string*>>{
               {"--corpus", &cfg.corpus, &merged.corpus},
               {"--lexicon", &cfg.lexicon, &merged.lexicon},
               {"--gazetteer", &cfg.gazetteer, &merged.gazetteer},
               {"--state-dir", &cfg.state_dir, &merged.state_dir},
               {"--bind", &cfg.bind, &merged.bind},
               {"--reference-dir", &cfg.reference_dir, &merged.reference_dir},
               {"--token", &cfg.token, &merged.token},
               {"--analyst", &cfg.analyst, &merged.analyst}}) {
        if (serve->count(flag) > 0) *target = *value;
      }
      if (serve->count("--snapshot-every") > 0) merged.snapshot_every = cfg.snapshot_every;

      auto session = Session::open(merged);
      const auto [host, port] = parse_bind(merged.bind);
      Server server(*session, merged.token);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << json{{"listening", host + ":" + std::to_string(bound)}, {"session", session->session_id()}}.dump()
                << std::endl;
      server.listen();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "risklab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
