#pragma once

// Principal Agent: intent API, gateway roster with EWMA ratings, local
// resource pool with an LRU reference cache, concurrent fan-out of resource
// queries, and execution of orchestrator dispatches.

#include <condition_variable>
#include <deque>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dawn/agents.hpp"
#include "dawn/context.hpp"
#include "dawn/gateway.hpp"
#include "dawn/guard.hpp"
#include "dawn/orchestrator.hpp"
#include "dawn/planner.hpp"

namespace dawn::principal {

inline constexpr double kRatingAlpha = 0.2;
inline constexpr double kInitialRating = 0.5;
inline constexpr std::size_t kPoolCapacity = 64;
inline constexpr std::size_t kGlobalOfferCap = 10;
inline constexpr std::int64_t kFanOutTimeoutMs = 5000;
inline constexpr double kLocalMatchThreshold = 0.5;

/// rating <- (1 - alpha) * rating + alpha * observation, clamped to [0,1].
double ewma(double rating, double observation, double alpha = kRatingAlpha);

enum class JoinGranularity { workflow, round };
std::string_view to_string(JoinGranularity g);
std::optional<JoinGranularity> join_granularity_from_string(std::string_view s);

struct RosterEntry {
  GatewayIdentity identity;
  double rating = kInitialRating;
  bool connected = true;
  Timestamp last_seen = 0;
  std::uint64_t joined_epoch = 0;
  std::shared_ptr<gateway::GatewayLink> link;
};

class GatewayRoster {
 public:
  explicit GatewayRoster(double alpha = kRatingAlpha) : alpha_(alpha) {}

  void add(std::shared_ptr<gateway::GatewayLink> link, Timestamp now);
  void set_connected(const std::string& gateway_id, bool connected);
  /// Throws Error(unknown_gateway).
  double update_rating(const std::string& gateway_id, double observation);
  double rating(const std::string& gateway_id) const;
  std::map<std::string, double> ratings() const;
  std::vector<RosterEntry> entries() const;
  std::shared_ptr<gateway::GatewayLink> link(const std::string& gateway_id) const;

  /// Advances the epoch; gateways added before the returned value are eligible.
  std::uint64_t tick();
  std::uint64_t epoch() const;
  /// Connected gateways that joined before `epoch`.
  std::vector<RosterEntry> eligible(std::uint64_t epoch) const;

 private:
  double alpha_;
  mutable std::mutex mu_;
  std::uint64_t epoch_ = 0;
  std::map<std::string, RosterEntry> entries_;
};

/// Builtins plus an LRU cache of manifest references (never executables).
class LocalResourcePool {
 public:
  explicit LocalResourcePool(std::size_t capacity = kPoolCapacity,
                             const guard::GuardPolicy& policy = guard::default_policy());

  /// Refreshes recency of a cached reference.
  std::optional<ResourceManifest> get(const std::string& resource_id);
  /// Inserts or refreshes a reference; returns the evicted id, if any.
  /// Builtin ids are ignored.
  std::optional<std::string> put(ResourceManifest manifest);

  bool is_builtin(const std::string& resource_id) const;
  bool contains(const std::string& resource_id) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  /// Cached ids, most recently used first.
  std::vector<std::string> recency() const;
  const std::vector<ResourceManifest>& builtins() const { return builtins_; }

  /// Local matches for a task: shared keyword with name or description and
  /// cosine >= kLocalMatchThreshold.
  std::vector<ScoredManifest> match(const TaskSpec& task) const;

  /// Runs a builtin.
  ExecutionResult execute(const ExecutionCommand& cmd);

 private:
  std::size_t capacity_;
  std::vector<ResourceManifest> builtins_;
  std::map<std::string, std::shared_ptr<agents::Stub>> builtin_stubs_;
  mutable std::mutex mu_;
  std::list<std::string> order_;  // MRU at front
  std::unordered_map<std::string, std::pair<ResourceManifest, std::list<std::string>::iterator>> cache_;
};

/// Broadcast of workflow events to server-push subscribers.
class EventHub {
 public:
  struct Subscription {
    std::string tenant_id;
    std::string workflow_id;  // empty = every workflow of the tenant
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> queue;
    bool closed = false;
  };

  std::shared_ptr<Subscription> subscribe(const std::string& tenant_id, const std::string& workflow_id);
  void unsubscribe(const std::shared_ptr<Subscription>& s);
  void publish(const std::string& tenant_id, const std::string& workflow_id, const std::string& data);
  void close_all();
  std::size_t subscribers() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> subs_;
};

struct Caller {
  std::string tenant_id;
  std::string user_id;
};

struct Config {
  std::string principal_id = "principal";
  std::map<std::string, Caller> user_tokens;       // bearer token -> caller
  std::set<std::string> gateway_allow_list;        // tokens accepted from gateways
  std::optional<std::filesystem::path> state_dir;
  std::size_t pool_capacity = kPoolCapacity;
  double alpha = kRatingAlpha;
  std::int64_t fanout_timeout_ms = kFanOutTimeoutMs;
  std::int64_t node_deadline_ms = orchestrator::kDefaultNodeDeadlineMs;
  JoinGranularity join = JoinGranularity::round;
  planner::Strategy strategy = planner::Strategy::react;
  orchestrator::GatePolicy gate_policy = orchestrator::GatePolicy::every_agentic;
  std::map<std::string, std::string> no_llm_bindings;  // task_id -> resource_id
  guard::GuardPolicy policy = guard::default_policy();
  Clock clock = system_clock();
  // Execute dispatches on the calling thread instead of the worker pool.
  bool synchronous = false;
  int workers = 8;
};

struct FanOutResult {
  std::vector<planner::SourcedOffer> offers;
  planner::LocalHits local;
  std::vector<std::string> contacted;
  std::vector<std::string> timed_out;
  std::size_t outbound_subtasks = 0;
};

class Principal {
 public:
  Principal(Config config, std::shared_ptr<planner::ReasoningProvider> provider);
  ~Principal();
  Principal(const Principal&) = delete;
  Principal& operator=(const Principal&) = delete;

  std::optional<Caller> authenticate(const std::string& token) const;

  /// Vets a connecting gateway: token allow-list, then a probe search.
  /// Throws Error(bad_token) or Error(probe_failed).
  GatewayIdentity connect(const GatewayIdentity& proposal, std::shared_ptr<gateway::GatewayLink> link);

  /// Local-first fan-out to the gateways eligible at `epoch`. Local hits
  /// rejected by `usable` do not count as a local match.
  FanOutResult fan_out_query(const ResourceQuery& q, std::uint64_t epoch, const std::string& workflow_id = "",
                             const std::function<bool(const ResourceManifest&)>& usable = {});

  /// Plans, fans out and composes. The workflow halts before start until
  /// approve_graph. Throws Error(invalid_mode_transition) for no_llm intents.
  std::string submit_intent(const Caller& caller, planner::Intent intent);
  /// Starts a hand-authored no-LLM graph.
  std::string submit_graph(const Caller& caller, planner::Intent intent, TaskGraph graph,
                           std::map<std::string, ResourceManifest> manifests);

  orchestrator::WorkflowRecord get_status(const Caller& caller, const std::string& workflow_id) const;
  orchestrator::WorkflowRecord approve_graph(const Caller& caller, const std::string& workflow_id);
  orchestrator::WorkflowRecord decide_gate(const Caller& caller, const orchestrator::GateDecision& d);
  orchestrator::WorkflowRecord pause(const Caller& caller, const std::string& workflow_id);
  orchestrator::WorkflowRecord resume(const Caller& caller, const std::string& workflow_id);

  /// Orchestrator audit merged with principal and gateway guard events,
  /// ordered by time.
  Json trace(const Caller& caller, const std::string& workflow_id);

  /// Blocks until the workflow is terminal or awaiting a human, or timeout.
  orchestrator::WorkflowRecord wait_idle(const std::string& workflow_id, std::int64_t timeout_ms);
  /// Blocks until every queued dispatch has been executed.
  void quiesce();

  GatewayRoster& roster() { return roster_; }
  LocalResourcePool& pool() { return pool_; }
  orchestrator::Orchestrator& orchestrator() { return *orch_; }
  context::ContextStore& context() { return *context_; }
  guard::GuardLog& guard_log() { return guard_log_; }
  EventHub& events() { return events_; }
  const Config& config() const { return config_; }

  /// Executes one dispatch: local builtin or gateway, with screening.
  ExecutionResult execute(const orchestrator::Dispatch& d);

 private:
  void check_tenant(const Caller& caller, const orchestrator::WorkflowRecord& r) const;
  void run(std::vector<orchestrator::Dispatch> dispatches);
  void worker_loop();
  void on_audit(const orchestrator::WorkflowRecord& r, const orchestrator::AuditEvent& e);
  std::optional<orchestrator::Substitute> find_substitute(const orchestrator::WorkflowRecord& r,
                                                          const TaskSpec& task,
                                                          const std::vector<std::string>& tried);
  std::uint64_t fanout_epoch(const std::string& workflow_id);
  std::string next_workflow_id();

  Config config_;
  std::shared_ptr<planner::ReasoningProvider> provider_;
  GatewayRoster roster_;
  LocalResourcePool pool_;
  guard::GuardLog guard_log_;
  EventHub events_;
  std::unique_ptr<context::ContextStore> context_;
  std::unique_ptr<orchestrator::Orchestrator> orch_;

  std::mutex wf_mu_;
  std::uint64_t wf_counter_ = 0;
  std::map<std::string, std::uint64_t> wf_epoch_;
  std::map<std::string, int> wf_queries_;
  std::set<std::string> rated_;

  std::mutex q_mu_;
  std::condition_variable q_cv_;
  std::condition_variable idle_cv_;
  std::deque<orchestrator::Dispatch> queue_;
  std::size_t busy_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace dawn::principal
