#include "dawn/gateway.hpp"

#include <chrono>
#include <set>

#include "dawn/log.hpp"
#include "httplib.h"

namespace dawn::gateway {

std::size_t PendingQueue::push(ResourceQuery q, Timestamp at) {
  std::lock_guard lk(mu_);
  if (items_.size() >= capacity_) {
    throw Error(ErrorCode::queue_full, "pending queue holds " + std::to_string(capacity_) + " queries");
  }
  items_.push_back({std::move(q), at});
  return items_.size();
}

std::optional<PendingQueue::Item> PendingQueue::pop() {
  std::lock_guard lk(mu_);
  if (items_.empty()) return std::nullopt;
  auto item = std::move(items_.front());
  items_.pop_front();
  return item;
}

std::size_t PendingQueue::size() const {
  std::lock_guard lk(mu_);
  return items_.size();
}

// ---------------------------------------------------------------------------

namespace {

registry::Options registry_options(const Config& c) {
  registry::Options o;
  o.gateway_id = c.gateway_id;
  o.snapshot_path = c.snapshot_path;
  o.clock = c.clock;
  return o;
}

std::string workflow_of(const std::string& command_id) {
  auto origin = parse_command_id(command_id);
  return origin ? origin->workflow_id : "";
}

std::string task_of(const std::string& command_id) {
  auto origin = parse_command_id(command_id);
  return origin ? origin->task_id : command_id;
}

bool has_known_code(const std::string& message) {
  auto colon = message.find(':');
  return colon != std::string::npos && error_code_from_string(message.substr(0, colon)).has_value();
}

}  // namespace

Gateway::Gateway(Config config, std::shared_ptr<ResourceInvoker> invoker)
    : config_(std::move(config)),
      invoker_(std::move(invoker)),
      reranker_(config_.reranker ? config_.reranker : std::make_shared<retrieval::LexicalOverlapReranker>()),
      registry_(registry_options(config_)),
      guard_log_(config_.clock) {}

GatewayIdentity Gateway::identity() const {
  GatewayIdentity id;
  id.gateway_id = config_.gateway_id;
  id.display_name = config_.display_name.empty() ? config_.gateway_id : config_.display_name;
  id.base_url = config_.base_url;
  id.capabilities = {ResourceKind::tool, ResourceKind::agent, ResourceKind::agentic_application};
  return id;
}

bool Gateway::authenticate(const std::string& token) const { return config_.tokens.count(token) > 0; }

ResourceOffer Gateway::handle_search(const std::string& token, const ResourceQuery& q) {
  if (!authenticate(token)) throw Error(ErrorCode::unauthenticated, "search rejected: bad bearer token");
  if (q.subtasks.empty()) throw Error(ErrorCode::malformed_query, "query has no subtasks");
  if (q.max_offers_per_task < 1) throw Error(ErrorCode::malformed_query, "max_offers_per_task must be >= 1");
  std::set<std::string> ids;
  for (const auto& t : q.subtasks) {
    if (t.task_id.empty()) throw Error(ErrorCode::malformed_query, "subtask with empty task_id");
    if (!ids.insert(t.task_id).second) throw Error(ErrorCode::malformed_query, "duplicate subtask " + t.task_id);
  }
  return search_unchecked(q);
}

ResourceOffer Gateway::search_unchecked(const ResourceQuery& q) {
  auto snap = registry_.snapshot();
  ResourceOffer offer;
  offer.query_id = q.query_id;
  int cap = std::min(q.max_offers_per_task, kOffersPerTask);
  for (const auto& t : q.subtasks) {
    auto text = t.description + " " + q.context_summary;
    std::vector<ScoredManifest> list;
    if (snap->index && snap->index->size() > 0) {
      auto stage1 = retrieval::retrieve(*snap->index, text, retrieval::kDefaultTopK);
      auto stage2 = retrieval::rerank(t.description, q.context_summary, stage1, *snap->index, *reranker_);
      for (const auto& item : stage2.list.items) {
        if (static_cast<int>(list.size()) >= cap) break;
        auto it = snap->entries.find(item.resource_id);
        if (it == snap->entries.end() || !it->second.searchable()) continue;
        list.push_back({it->second.manifest, std::clamp(item.score, 0.0, 1.0)});
      }
    }
    if (list.empty() || list.front().score < kScoreFloor) {
      offer.unfulfilled.push_back(t.task_id);
    } else {
      offer.per_task.emplace(t.task_id, std::move(list));
    }
  }
  assert_offer_partition(q, offer);
  return offer;
}

void Gateway::set_draining(bool draining) { draining_ = draining; }

std::optional<ResourceOffer> Gateway::submit_search(const std::string& token, const ResourceQuery& q) {
  if (!draining_) return handle_search(token, q);
  if (!authenticate(token)) throw Error(ErrorCode::unauthenticated, "search rejected: bad bearer token");
  queue_.push(q, config_.clock());
  return std::nullopt;
}

std::size_t Gateway::drain() {
  std::size_t n = 0;
  while (auto item = queue_.pop()) {
    try {
      auto offer = search_unchecked(item->query);
      std::lock_guard lk(offers_mu_);
      ready_offers_[offer.query_id] = std::move(offer);
    } catch (const Error& e) {
      log::warn("gateway", "queued query " + item->query.query_id + " dropped: " + e.what());
    }
    ++n;
  }
  return n;
}

std::optional<ResourceOffer> Gateway::take_offer(const std::string& query_id) {
  std::lock_guard lk(offers_mu_);
  auto it = ready_offers_.find(query_id);
  if (it == ready_offers_.end()) return std::nullopt;
  auto offer = std::move(it->second);
  ready_offers_.erase(it);
  return offer;
}

ExecutionResult Gateway::execute_resource(const ResourceManifest& m, const ExecutionCommand& c) {
  auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  };
  auto wf = workflow_of(c.command_id);
  guard::ScreenContext ctx{wf, task_of(c.command_id), m.resource_id, guard::Boundary::gateway_resource};

  Message out = c;
  auto v = guard::screen_message(out, guard::Direction::outbound, config_.policy, guard_log_, ctx);
  if (v.decision == guard::Decision::block) {
    return ExecutionResult::failure(c.command_id, "guard_blocked: " + v.blocking_rule, elapsed());
  }
  auto cmd = std::get<ExecutionCommand>(out);
  cmd.endpoint = m.endpoint;

  ExecutionResult result;
  bool from_resource = false;
  for (int attempt = 0;; ++attempt) {
    auto remaining = c.deadline_ms - elapsed();
    if (remaining <= 0) {
      result = ExecutionResult::failure(c.command_id, "deadline_exceeded: " + m.resource_id, elapsed());
      break;
    }
    cmd.deadline_ms = remaining;
    try {
      ++upstream_calls_;
      result = invoker_->invoke(cmd);
      from_resource = true;
      break;
    } catch (const DeadlineExceeded& e) {
      result = ExecutionResult::failure(c.command_id, "deadline_exceeded: " + e.detail(), elapsed());
      break;
    } catch (const TransportError& e) {
      if (attempt == 0) {
        log::info("gateway", "retrying " + m.resource_id + " after transport failure: " + e.detail());
        continue;
      }
      result = ExecutionResult::failure(c.command_id, "upstream_error: " + e.detail(), elapsed());
      break;
    }
  }
  result.command_id = c.command_id;
  result.elapsed_ms = elapsed();
  if (from_resource) {
    Message in = result;
    auto iv = guard::screen_message(in, guard::Direction::inbound, config_.policy, guard_log_, ctx);
    if (iv.decision == guard::Decision::block) {
      return ExecutionResult::failure(c.command_id, "guard_blocked: " + iv.blocking_rule, elapsed());
    }
    result = std::get<ExecutionResult>(std::move(in));
  }
  if (!result.ok()) {
    if (!has_known_code(*result.error_message)) result.error_message = "upstream_error: " + *result.error_message;
    return result;
  }
  for (const auto& f : m.output_schema) {
    auto it = result.payload->find(f.name);
    if (it == result.payload->end()) {
      if (f.required) return ExecutionResult::failure(c.command_id, "upstream_error: output missing " + f.name, elapsed());
      continue;
    }
    auto t = scalar_type_of(it->second);
    if (t != f.type && !(f.type == ScalarType::floating && t == ScalarType::integer)) {
      return ExecutionResult::failure(c.command_id, "upstream_error: output field " + f.name + " has wrong type", elapsed());
    }
  }
  return result;
}

ExecutionResult Gateway::handle_execute(const std::string& token, const ExecutionCommand& c) {
  if (!authenticate(token)) throw Error(ErrorCode::unauthenticated, "execute rejected: bad bearer token");
  auto entry = registry_.get(c.resource_id);
  if (!entry) return ExecutionResult::failure(c.command_id, "unknown_resource: " + c.resource_id, 0);

  ExecutionResult result;
  if (entry->manifest.status == ResourceStatus::suspended) {
    result = ExecutionResult::failure(c.command_id, "suspended_resource: " + c.resource_id, 0);
  } else if (auto violations = validate_values(entry->manifest.input_schema, c.inputs); !violations.empty()) {
    result = ExecutionResult::failure(c.command_id, "schema_violation: " + violations.front(), 0);
  } else {
    result = execute_resource(entry->manifest, c);
  }
  try {
    registry_.record_outcome(c.resource_id, result);
  } catch (const Error& e) {
    log::warn("gateway", std::string("record_outcome failed: ") + e.what());
  }
  return result;
}

Json Gateway::health() const {
  auto snap = registry_.snapshot();
  return {{"gateway_id", config_.gateway_id},
          {"status", draining_ ? "draining" : "ok"},
          {"resources", snap->entries.size()},
          {"searchable", snap->searchable.size()},
          {"queued", queue_.size()},
          {"snapshot_version", snap->version}};
}

std::vector<guard::GuardEvent> Gateway::trace(const std::string& workflow_id) const {
  return guard_log_.events(workflow_id);
}

// ---------------------------------------------------------------------------

InProcessLink::InProcessLink(std::shared_ptr<Gateway> gateway, std::string token)
    : gateway_(std::move(gateway)), token_(std::move(token)) {}

GatewayIdentity InProcessLink::identity() const { return gateway_->identity(); }

ResourceOffer InProcessLink::search(const ResourceQuery& q) {
  ++searches_;
  return gateway_->handle_search(token_, q);
}

ExecutionResult InProcessLink::execute(const ExecutionCommand& c) { return gateway_->handle_execute(token_, c); }

std::vector<guard::GuardEvent> InProcessLink::trace(const std::string& workflow_id) {
  return gateway_->trace(workflow_id);
}

// ---------------------------------------------------------------------------

namespace {

httplib::Client make_client(const std::string& base_url, std::int64_t timeout_ms, const std::string& token) {
  auto url = parse_url(base_url);
  if (url.scheme != "http") throw TransportError("unsupported scheme: " + url.scheme);
  httplib::Client client(url.host, url.port);
  auto t = std::chrono::milliseconds(timeout_ms);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(t));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(t));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(t));
  if (!token.empty()) client.set_bearer_token_auth(token);
  return client;
}

[[noreturn]] void throw_http(const std::string& what, const httplib::Result& res) {
  if (!res) {
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout) {
      throw DeadlineExceeded(what + ": " + httplib::to_string(res.error()));
    }
    throw TransportError(what + ": " + httplib::to_string(res.error()));
  }
  // Error bodies are {"error": code, "message": text}.
  try {
    auto j = parse_json(res->body);
    auto code = error_code_from_string(j.value("error", std::string{}));
    if (code) throw Error(*code, j.value("message", std::string{}));
  } catch (const ParseError&) {
  }
  throw TransportError(what + " answered HTTP " + std::to_string(res->status));
}

}  // namespace

HttpLink::HttpLink(GatewayIdentity identity, std::int64_t timeout_ms)
    : identity_(std::move(identity)), timeout_ms_(timeout_ms) {}

ResourceOffer HttpLink::search(const ResourceQuery& q) {
  auto client = make_client(identity_.base_url, timeout_ms_, identity_.auth_token);
  auto res = client.Post("/v1/search", encode(q), "application/json");
  if (!res || res->status != 200) throw_http(identity_.gateway_id + " search", res);
  try {
    return decode_as<ResourceOffer>(res->body);
  } catch (const ParseError& e) {
    throw TransportError(identity_.gateway_id + " returned malformed offer: " + e.what());
  }
}

ExecutionResult HttpLink::execute(const ExecutionCommand& c) {
  // Allow the gateway its full deadline plus transport slack.
  auto client = make_client(identity_.base_url, c.deadline_ms + 2000, identity_.auth_token);
  auto res = client.Post("/v1/execute", encode(c), "application/json");
  if (!res || res->status != 200) throw_http(identity_.gateway_id + " execute", res);
  try {
    return decode_as<ExecutionResult>(res->body);
  } catch (const ParseError& e) {
    throw TransportError(identity_.gateway_id + " returned malformed result: " + e.what());
  }
}

std::vector<guard::GuardEvent> HttpLink::trace(const std::string& workflow_id) {
  auto client = make_client(identity_.base_url, timeout_ms_, identity_.auth_token);
  auto res = client.Get("/v1/trace?workflow=" + httplib::detail::encode_query_param(workflow_id));
  if (!res || res->status != 200) throw_http(identity_.gateway_id + " trace", res);
  auto j = parse_json(res->body);
  std::vector<guard::GuardEvent> out;
  if (!j.is_array()) throw TransportError("trace response is not an array");
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(guard::guard_event_from_json(j[i], "$[" + std::to_string(i) + "]"));
  return out;
}

bool HttpLink::healthy() {
  try {
    auto client = make_client(identity_.base_url, timeout_ms_, identity_.auth_token);
    auto res = client.Get("/v1/health");
    return res && res->status == 200;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace dawn::gateway
