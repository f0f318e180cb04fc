#include "dawn/transport.hpp"

#include <future>
#include <thread>

#include "dawn/codec.hpp"
#include "httplib.h"

namespace dawn {

ParsedUrl parse_url(std::string_view url) {
  ParsedUrl out;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw TransportError("malformed url: " + std::string(url));
  out.scheme = std::string(url.substr(0, scheme_end));
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  auto hostport = rest.substr(0, slash);
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  auto colon = hostport.rfind(':');
  out.port = out.scheme == "https" ? 443 : 80;
  if (colon != std::string_view::npos) {
    out.host = std::string(hostport.substr(0, colon));
    try {
      out.port = std::stoi(std::string(hostport.substr(colon + 1)));
    } catch (...) {
      throw TransportError("malformed port in url: " + std::string(url));
    }
  } else {
    out.host = std::string(hostport);
  }
  return out;
}

// ---------------------------------------------------------------------------

void LocalInvoker::bind(const std::string& endpoint, ResourceHandler handler) {
  std::lock_guard lock(mu_);
  handlers_[endpoint] = std::make_shared<ResourceHandler>(std::move(handler));
}

void LocalInvoker::unbind(const std::string& endpoint) {
  std::lock_guard lock(mu_);
  handlers_.erase(endpoint);
}

ExecutionResult LocalInvoker::invoke(const ExecutionCommand& cmd) {
  std::shared_ptr<ResourceHandler> handler;
  {
    std::lock_guard lock(mu_);
    auto it = handlers_.find(cmd.endpoint);
    if (it == handlers_.end()) throw TransportError("no handler bound at " + cmd.endpoint);
    handler = it->second;
  }
  auto promise = std::make_shared<std::promise<ExecutionResult>>();
  auto future = promise->get_future();
  std::thread worker([handler, promise, cmd] {
    try {
      promise->set_value((*handler)(cmd));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  if (future.wait_for(std::chrono::milliseconds(cmd.deadline_ms)) == std::future_status::timeout) {
    // The handler keeps its own copies of everything it touches.
    worker.detach();
    throw DeadlineExceeded(cmd.endpoint + " exceeded " + std::to_string(cmd.deadline_ms) + " ms");
  }
  worker.join();
  try {
    return future.get();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    return ExecutionResult::failure(cmd.command_id, std::string("upstream_error: ") + e.what(), 0);
  }
}

// ---------------------------------------------------------------------------

ExecutionResult HttpInvoker::invoke(const ExecutionCommand& cmd) {
  auto url = parse_url(cmd.endpoint);
  if (url.scheme != "http") throw TransportError("unsupported scheme: " + url.scheme);
  httplib::Client client(url.host, url.port);
  auto deadline = std::chrono::milliseconds(cmd.deadline_ms);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));
  auto res = client.Post(url.path, encode(cmd), "application/json");
  if (!res) {
    if (res.error() == httplib::Error::Read) {
      throw DeadlineExceeded(cmd.endpoint + " exceeded " + std::to_string(cmd.deadline_ms) + " ms");
    }
    throw TransportError(cmd.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError(cmd.endpoint + " answered HTTP " + std::to_string(res->status));
  }
  try {
    return decode_as<ExecutionResult>(res->body);
  } catch (const ParseError& e) {
    throw TransportError(cmd.endpoint + " returned malformed result: " + e.what());
  }
}

RoutingInvoker::RoutingInvoker(std::shared_ptr<LocalInvoker> local,
                               std::shared_ptr<ResourceInvoker> http)
    : local_(std::move(local)), http_(std::move(http)) {}

ExecutionResult RoutingInvoker::invoke(const ExecutionCommand& cmd) {
  if (cmd.endpoint.starts_with("local://")) return local_->invoke(cmd);
  return http_->invoke(cmd);
}

}  // namespace dawn
