#pragma once

#include <memory>
#include <string>
#include <thread>

#include "trialmatch/service/match_service.h"

namespace httplib {
class Server;
}

namespace trialmatch::service {

// cpp-httplib front end for a MatchService:
//   POST /v1/match/patient, POST /v1/match/space,
//   GET /v1/trials/{nct_id}, GET /v1/spaces/{space_id}, GET /v1/health,
//   POST /v1/admin/reload.
// Requests run on a pool of config.worker_threads threads. CORS headers go
// on every response; OPTIONS preflights answer 204. With require_auth every
// route except /v1/health needs the bearer token (401 otherwise).
class HttpServer {
 public:
  explicit HttpServer(MatchService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds host:port (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port; throws TransportError on bind failure.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  MatchService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace trialmatch::service
