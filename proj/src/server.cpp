#include "risklab/server.hpp"

#include <charconv>
#include <limits>
#include <sstream>
#include <type_traits>

#include "httplib.h"

namespace risklab {

using nlohmann::json;

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("bind address must be host:port, got '" + bind + "'");
  const std::string host = bind.substr(0, colon);
  const std::string port_text = bind.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw ConfigError("bad port in bind address '" + bind + "'");
  }
  return {host, port};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

std::optional<std::size_t> parse_count(const std::string& text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

json queue_item_json(const QueueItem& item) {
  json highlights = json::array();
  for (const auto& h : item.highlights) highlights.push_back({{"keyword", h.keyword}, {"start", h.start}, {"end", h.end}});
  json out{{"event", item.event},
           {"risk", item.tag.risk.value()},
           {"tag", item.tag.name},
           {"text", item.text},
           {"highlights", std::move(highlights)},
           {"status", item.pending() ? "pending" : "decided"}};
  out["verdict"] = item.verdict ? json(verdict_name(*item.verdict)) : json(nullptr);
  return out;
}

// Field accessors that report the offending key on a type mismatch.
struct BodyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
T field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) throw BodyError(std::string("missing field '") + key + "'");
  if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw BodyError(std::string("field '") + key + "' must be a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw BodyError(std::string("field '") + key + "' must be a boolean");
  } else {
    if (!it->is_number_integer()) throw BodyError(std::string("field '") + key + "' must be an integer");
  }
  return it->get<T>();
}

template <typename T>
T field_or(const json& body, const char* key, T fallback) {
  return body.contains(key) && !body.at(key).is_null() ? field<T>(body, key) : fallback;
}

}  // namespace

Server::Server(Session& session, std::string token)
    : session_(session), token_(std::move(token)), http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() { stop(); }

void Server::routes() {
  http_->set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!token_.empty() && req.get_header_value("Authorization") != "Bearer " + token_) {
      send_error(res, 401, "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  http_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const BodyError& e) {
      send_error(res, 400, e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  http_->Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session_.status());
  });

  http_->Get("/queue", [this](const httplib::Request& req, httplib::Response& res) {
    QueueFilter filter = QueueFilter::pending;
    const std::string status = req.has_param("status") ? req.get_param_value("status") : "pending";
    if (status == "pending") {
      filter = QueueFilter::pending;
    } else if (status == "decided") {
      filter = QueueFilter::decided;
    } else if (status == "all") {
      filter = QueueFilter::all;
    } else {
      return send_error(res, 400, "status must be pending, decided or all");
    }
    std::size_t limit = std::numeric_limits<std::size_t>::max();
    if (req.has_param("limit")) {
      auto parsed = parse_count(req.get_param_value("limit"));
      if (!parsed) return send_error(res, 400, "limit must be a non-negative integer");
      limit = *parsed;
    }
    json items = json::array();
    for (const auto& item : session_.queue(filter, limit)) items.push_back(queue_item_json(item));
    send_json(res, 200, {{"items", std::move(items)}});
  });

  http_->Post("/decisions", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    DecisionRequest request;
    request.event = field<EventId>(*body, "event");
    request.risk = field<int>(*body, "risk");
    request.tag = field<std::string>(*body, "tag");
    request.verdict = field<std::string>(*body, "verdict");
    request.analyst = field_or<std::string>(*body, "decided_by", "");
    request.supersede = field_or<bool>(*body, "supersede", false);
    Outcome outcome = session_.post_decision(request);
    send_json(res, outcome.status, outcome.body);
  });

  http_->Post("/keywords", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    KeywordRequest request;
    request.risk = field<int>(*body, "risk");
    request.tag = field<std::string>(*body, "tag");
    request.root = field<std::string>(*body, "root");
    request.new_tag = field_or<bool>(*body, "new_tag", false);
    Outcome outcome = session_.add_keyword(request);
    send_json(res, outcome.status, outcome.body);
  });

  http_->Post("/iterations", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    IterationRequest request;
    auto seed = body->find("seed");
    if (seed == body->end() || !seed->is_number_unsigned()) {
      return send_error(res, 400, "field 'seed' must be a non-negative integer");
    }
    request.seed = seed->get<std::uint64_t>();
    request.config = iteration_config_from_json(body->value("params", json(nullptr)));
    if (field_or<bool>(*body, "async", false)) {
      const int n = session_.reserve_iteration();
      std::lock_guard guard(workers_mutex_);
      workers_.emplace_back([this, n, request] { session_.execute_iteration(n, request); });
      send_json(res, 202, {{"iteration", n}, {"status", "running"}});
      return;
    }
    Outcome outcome = session_.run_iteration(request);
    send_json(res, outcome.status, outcome.body);
  });

  http_->Get(R"(/iterations/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    int n = 0;
    try {
      n = std::stoi(req.matches[1].str());
    } catch (const std::exception&) {
      return send_error(res, 404, "unknown iteration");
    }
    auto status = session_.iteration_status(n);
    if (!status) return send_error(res, 404, "unknown iteration " + std::to_string(n));
    send_json(res, 200, *status);
  });

  http_->Get("/lexicon", [this](const httplib::Request&, httplib::Response& res) {
    std::ostringstream out;
    write_lexicon(out, session_.lexicon());
    res.set_content(out.str(), "application/json");
  });

  http_->Get("/network", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session_.network_json());
  });

  http_->Get("/network/compare", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("ref")) return send_error(res, 400, "missing query parameter 'ref'");
    Outcome outcome = session_.compare_json(req.get_param_value("ref"));
    send_json(res, outcome.status, outcome.body);
  });

  http_->Get("/heatmap", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.has_param("format") ? req.get_param_value("format") : "geojson";
    HeatmapFormat format;
    try {
      format = parse_heatmap_format(name);
    } catch (const GeoError& e) {
      return send_error(res, 400, e.what());
    }
    res.set_content(session_.heatmap(format), format == HeatmapFormat::csv ? "text/csv" : "application/geo+json");
  });

  http_->Get("/graph", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session_.graph_json());
  });

  http_->Get("/audit", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t since = 0;
    if (req.has_param("since")) {
      auto parsed = parse_count(req.get_param_value("since"));
      if (!parsed) return send_error(res, 400, "since must be a non-negative integer");
      since = *parsed;
    }
    send_json(res, 200, session_.audit(since));
  });
}

int Server::bind(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Server::listen() { http_->listen_after_bind(); }

int Server::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  http_->wait_until_ready();
  return bound;
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
  std::lock_guard guard(workers_mutex_);
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

}  // namespace risklab
