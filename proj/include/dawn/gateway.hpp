#pragma once

// Gateway Agent: registry-backed search, execution proxy with deadline and
// retry, guard screening on the gateway <-> resource boundary, and the
// principal-side link abstraction used to talk to a gateway.

#include <atomic>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dawn/guard.hpp"
#include "dawn/registry.hpp"
#include "dawn/retrieval.hpp"
#include "dawn/transport.hpp"

namespace dawn::gateway {

inline constexpr double kScoreFloor = 0.05;
inline constexpr int kOffersPerTask = 5;
inline constexpr std::size_t kQueueCapacity = 128;

/// Bounded FIFO of search requests received while the gateway is draining.
class PendingQueue {
 public:
  struct Item {
    ResourceQuery query;
    Timestamp enqueued_at = 0;
  };

  explicit PendingQueue(std::size_t capacity = kQueueCapacity) : capacity_(capacity) {}

  /// Throws Error(queue_full) at capacity. Returns the 1-based position.
  std::size_t push(ResourceQuery q, Timestamp at);
  std::optional<Item> pop();
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<Item> items_;
};

struct Config {
  std::string gateway_id;
  std::string display_name;
  std::string base_url = "http://127.0.0.1:0";
  std::set<std::string> tokens;
  std::optional<std::filesystem::path> snapshot_path;
  Clock clock = system_clock();
  guard::GuardPolicy policy = guard::default_policy();
  std::shared_ptr<retrieval::RerankProvider> reranker;  // lexical overlap when null
};

class Gateway {
 public:
  Gateway(Config config, std::shared_ptr<ResourceInvoker> invoker);

  GatewayIdentity identity() const;
  bool authenticate(const std::string& token) const;

  /// Throws Error(unauthenticated) or Error(malformed_query).
  ResourceOffer handle_search(const std::string& token, const ResourceQuery& q);

  /// Throws Error(unauthenticated); every other failure is an error result.
  ExecutionResult handle_execute(const std::string& token, const ExecutionCommand& c);

  /// While draining, searches are queued instead of answered.
  void set_draining(bool draining);
  bool draining() const { return draining_; }
  /// Queues a search (draining) or answers it immediately.
  std::optional<ResourceOffer> submit_search(const std::string& token, const ResourceQuery& q);
  /// Answers queued searches in FIFO order; offers become available via take_offer.
  std::size_t drain();
  std::optional<ResourceOffer> take_offer(const std::string& query_id);

  Json health() const;
  std::vector<guard::GuardEvent> trace(const std::string& workflow_id) const;

  registry::Registry& registry() { return registry_; }
  guard::GuardLog& guard_log() { return guard_log_; }
  PendingQueue& queue() { return queue_; }
  ResourceInvoker& invoker() { return *invoker_; }
  std::uint64_t upstream_calls() const { return upstream_calls_; }

 private:
  ResourceOffer search_unchecked(const ResourceQuery& q);
  ExecutionResult execute_resource(const ResourceManifest& m, const ExecutionCommand& c);

  Config config_;
  std::shared_ptr<ResourceInvoker> invoker_;
  std::shared_ptr<retrieval::RerankProvider> reranker_;
  registry::Registry registry_;
  guard::GuardLog guard_log_;
  PendingQueue queue_;
  std::atomic<bool> draining_{false};
  std::atomic<std::uint64_t> upstream_calls_{0};
  std::mutex offers_mu_;
  std::map<std::string, ResourceOffer> ready_offers_;
};

// ---------------------------------------------------------------------------
// Principal-side view of a gateway

class GatewayLink {
 public:
  virtual ~GatewayLink() = default;
  virtual GatewayIdentity identity() const = 0;
  virtual ResourceOffer search(const ResourceQuery& q) = 0;
  virtual ExecutionResult execute(const ExecutionCommand& c) = 0;
  virtual std::vector<guard::GuardEvent> trace(const std::string& workflow_id) = 0;
  virtual bool healthy() = 0;
};

class InProcessLink final : public GatewayLink {
 public:
  InProcessLink(std::shared_ptr<Gateway> gateway, std::string token);

  GatewayIdentity identity() const override;
  ResourceOffer search(const ResourceQuery& q) override;
  ExecutionResult execute(const ExecutionCommand& c) override;
  std::vector<guard::GuardEvent> trace(const std::string& workflow_id) override;
  bool healthy() override { return true; }

  std::uint64_t searches() const { return searches_; }

 private:
  std::shared_ptr<Gateway> gateway_;
  std::string token_;
  std::atomic<std::uint64_t> searches_{0};
};

/// Talks to a gateway's HTTP endpoints with a bearer token.
class HttpLink final : public GatewayLink {
 public:
  HttpLink(GatewayIdentity identity, std::int64_t timeout_ms = 5000);

  GatewayIdentity identity() const override { return identity_; }
  ResourceOffer search(const ResourceQuery& q) override;
  ExecutionResult execute(const ExecutionCommand& c) override;
  std::vector<guard::GuardEvent> trace(const std::string& workflow_id) override;
  bool healthy() override;

 private:
  GatewayIdentity identity_;
  std::int64_t timeout_ms_;
};

}  // namespace dawn::gateway
