#pragma once

// HTTP faces of the gateway, the principal and the stand-alone agents.
// Errors are answered as {"error": <code>, "message": <text>} with a status
// derived from the error code.

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "dawn/agents.hpp"
#include "dawn/gateway.hpp"
#include "dawn/principal.hpp"

namespace httplib {
class Server;
}

namespace dawn::http {

int status_for(ErrorCode code);

/// Bearer token from an Authorization header value; empty when absent.
std::string bearer_token(std::string_view authorization);

/// A listening httplib server on a background thread.
class Service {
 public:
  Service();
  virtual ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free port) and starts serving. Returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void serve(const std::string& host, int port);
  virtual void stop();

  int port() const { return port_; }
  std::string base_url() const;

 protected:
  std::unique_ptr<httplib::Server> server_;

 private:
  std::string host_;
  int port_ = 0;
  std::thread thread_;
};

/// POST /v1/connect, /v1/search, /v1/execute; GET /v1/health, /v1/trace;
/// GET|POST /v1/resources; POST /v1/resources/{id}/validate.
class GatewayServer final : public Service {
 public:
  explicit GatewayServer(std::shared_ptr<gateway::Gateway> gateway);

 private:
  std::shared_ptr<gateway::Gateway> gateway_;
};

/// Intent, workflow, gateway roster and event-stream endpoints.
class PrincipalServer final : public Service {
 public:
  PrincipalServer(principal::Principal& principal, std::int64_t link_timeout_ms = 5000);
  void stop() override;

 private:
  principal::Principal& principal_;
  std::int64_t link_timeout_ms_;
};

/// POST /invoke and GET /health for one agent.
class AgentServer final : public Service {
 public:
  explicit AgentServer(std::shared_ptr<agents::Stub> stub);

 private:
  std::shared_ptr<agents::Stub> stub_;
};

/// JSON client for the principal workflow API; get/post also serve the
/// gateway endpoints. Error bodies are rethrown as Error(code).
class ApiClient {
 public:
  ApiClient(std::string base_url, std::string token, std::int64_t timeout_ms = 30000);

  Json submit_intent(const Json& intent);
  Json submit_graph(const Json& body);
  Json status(const std::string& workflow_id);
  Json approve(const std::string& workflow_id);
  Json gate(const std::string& workflow_id, const std::string& task_id, const Json& decision);
  Json pause(const std::string& workflow_id);
  Json resume(const std::string& workflow_id);
  Json trace(const std::string& workflow_id);
  Json gateways();

  Json get(const std::string& path);
  Json post(const std::string& path, const Json& body);

 private:
  std::string base_url_;
  std::string token_;
  std::int64_t timeout_ms_;
};

/// Gateway side of the handshake: asks a principal to admit `identity`.
/// Throws Error(bad_token), Error(probe_failed) or TransportError.
GatewayIdentity request_connection(const std::string& principal_url, const GatewayIdentity& identity,
                                   std::int64_t timeout_ms = 10000);

}  // namespace dawn::http
