#pragma once

// Calls from a gateway to resource endpoints. `local://name` endpoints are
// served by in-process handlers; `http(s)://` endpoints receive the encoded
// ExecutionCommand as a POST body and answer with an ExecutionResult.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dawn/error.hpp"
#include "dawn/protocol.hpp"

namespace dawn {

/// The endpoint could not be reached or answered with garbage.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& msg) : Error(ErrorCode::transport_error, msg) {}
};

/// The endpoint did not answer before the command deadline.
class DeadlineExceeded : public Error {
 public:
  explicit DeadlineExceeded(const std::string& msg) : Error(ErrorCode::deadline_exceeded, msg) {}
};

class ResourceInvoker {
 public:
  virtual ~ResourceInvoker() = default;
  /// Throws TransportError or DeadlineExceeded; a resource-level failure is
  /// an ExecutionResult with outcome=error.
  virtual ExecutionResult invoke(const ExecutionCommand& cmd) = 0;
};

using ResourceHandler = std::function<ExecutionResult(const ExecutionCommand&)>;

/// Routes `local://name` endpoints to registered handlers. Each call runs on
/// its own thread so the deadline can be enforced even if a handler hangs.
class LocalInvoker final : public ResourceInvoker {
 public:
  void bind(const std::string& endpoint, ResourceHandler handler);
  void unbind(const std::string& endpoint);
  ExecutionResult invoke(const ExecutionCommand& cmd) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<ResourceHandler>> handlers_;
};

class HttpInvoker final : public ResourceInvoker {
 public:
  ExecutionResult invoke(const ExecutionCommand& cmd) override;
};

/// Dispatches on endpoint scheme.
class RoutingInvoker final : public ResourceInvoker {
 public:
  RoutingInvoker(std::shared_ptr<LocalInvoker> local, std::shared_ptr<ResourceInvoker> http);
  ExecutionResult invoke(const ExecutionCommand& cmd) override;
  LocalInvoker& local() { return *local_; }

 private:
  std::shared_ptr<LocalInvoker> local_;
  std::shared_ptr<ResourceInvoker> http_;
};

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path;
};

ParsedUrl parse_url(std::string_view url);

}  // namespace dawn
