#include "trialmatch/service/http_server.h"

#include <httplib.h>

#include "trialmatch/common/error.h"
#include "trialmatch/common/log.h"

namespace trialmatch::service {

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, "application/json");
}

}  // namespace

HttpServer::HttpServer(MatchService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  const auto threads = service_.config().worker_threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
  auto& s = *server_;
  const auto& cfg = service_.config();
  s.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                         {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (req.method == "OPTIONS" || req.path == "/v1/health") return httplib::Server::HandlerResponse::Unhandled;
    if (!service_.authorized(req.get_header_value("Authorization"))) {
      send(res, {401, R"({"error":"missing or invalid bearer token"})"});
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  s.Post("/v1/match/patient", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.handle_match_patient(req.body));
  });
  s.Post("/v1/match/space", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.handle_match_space(req.body));
  });
  s.Get(R"(/v1/trials/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.handle_trial(req.matches[1]));
  });
  // Space ids contain '#', so clients send it percent-encoded; httplib
  // decodes the path before matching.
  s.Get(R"(/v1/spaces/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.handle_space(req.matches[1]));
  });
  s.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) { send(res, service_.handle_health()); });
  s.Post("/v1/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
    send(res, service_.handle_reload());
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      res.status = status_for(e);
      res.set_content(R"({"error":"internal error"})", "application/json");
      log().error("service: unhandled exception: {}", e.what());
    } catch (...) {
      res.status = 500;
    }
  });
}

int HttpServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace trialmatch::service
