#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "risklab/annotator.hpp"

namespace httplib {
class Server;
}

namespace risklab {

// "host:port" -> {host, port}. Port 0 asks the OS for a free port.
std::pair<std::string, int> parse_bind(const std::string& bind);

// REST front end for a Session.
class Server {
 public:
  Server(Session& session, std::string token = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Returns the bound port; throws if the address is unavailable.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind() + listen() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  void routes();

  Session& session_;
  std::string token_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  std::vector<std::thread> workers_;
  std::mutex workers_mutex_;
};

}  // namespace risklab
