#pragma once

// Executes TaskGraphs as finite state machines.
//
// The orchestrator never calls resources itself. Each operation returns the
// commands that became dispatchable; the caller executes them and feeds the
// results back through on_result. Mutations of one workflow are serialised
// by a per-workflow lock, so results and gate decisions may arrive from any
// thread. Every state transition is persisted as one JSON snapshot per
// workflow.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dawn/codec.hpp"
#include "dawn/context.hpp"
#include "dawn/planner.hpp"
#include "dawn/protocol.hpp"

namespace dawn::orchestrator {

inline constexpr int kMaxParallelNodes = 4;
inline constexpr std::int64_t kDefaultNodeDeadlineMs = 30000;

enum class WorkflowStatus { composing, running, awaiting_human, failed, completed };
std::string_view to_string(WorkflowStatus s);
std::optional<WorkflowStatus> workflow_status_from_string(std::string_view s);

enum class GatePolicy { every_agentic, marked_only };
std::string_view to_string(GatePolicy p);
std::optional<GatePolicy> gate_policy_from_string(std::string_view s);

enum class GateAction { approve, reject, edit };
std::string_view to_string(GateAction a);
std::optional<GateAction> gate_action_from_string(std::string_view s);

struct GateDecision {
  std::string workflow_id;
  std::string task_id;
  GateAction action = GateAction::approve;
  ValueMap inputs;  // edit only
  std::string actor;
  std::string note;
};

/// kind is one of: node, workflow, gate, override, retry, recovery, pause,
/// resume, unfulfilled. `node` events are the node status transitions.
struct AuditEvent {
  std::uint64_t seq = 0;
  Timestamp at = 0;
  std::string kind;
  std::string task_id;
  std::string from;
  std::string to;
  std::string actor;
  std::string detail;

  bool operator==(const AuditEvent&) const = default;
};

/// Per-node execution bookkeeping.
struct NodeRuntime {
  int attempt = 0;         // dispatches so far
  bool retried = false;    // same-resource retry spent for the current resource
  std::vector<std::string> tried;  // resources that failed this node

  bool operator==(const NodeRuntime&) const = default;
};

struct WorkflowRecord {
  std::string workflow_id;
  std::string tenant_id;
  std::string user_id;
  planner::Intent intent;
  TaskGraph graph;
  std::map<std::string, ExecutionResult> node_outputs;
  std::vector<std::string> pending_gates;
  std::vector<AuditEvent> audit;
  WorkflowStatus status = WorkflowStatus::composing;
  Timestamp created_at = 0;
  Timestamp updated_at = 0;

  // Execution state.
  bool approved = false;
  bool paused = false;
  GatePolicy gate_policy = GatePolicy::every_agentic;
  std::map<std::string, ResourceManifest> manifests;  // task_id -> assigned manifest
  std::map<std::string, NodeRuntime> runtime;
  std::map<std::string, std::string> in_flight;  // command_id -> task_id
  std::map<std::string, ValueMap> overrides;
  std::set<std::string> decided_gates;
  std::set<std::string> approved_gates;  // approved but not yet dispatched
  int replan_rounds = 0;
  std::vector<std::string> unfulfilled;
  std::string failure_reason;

  bool terminal() const { return status == WorkflowStatus::failed || status == WorkflowStatus::completed; }
  bool operator==(const WorkflowRecord&) const = default;
};

Json to_json(const AuditEvent& e);
AuditEvent audit_event_from_json(const Json& j, const std::string& path);
Json to_json(const WorkflowRecord& r);
WorkflowRecord workflow_record_from_json(const Json& j);

/// Audit log as JSON lines.
std::string export_audit(const WorkflowRecord& r);

/// One snapshot file per workflow, `<dir>/<workflow_id>.json`.
class WorkflowStore {
 public:
  explicit WorkflowStore(std::filesystem::path dir);
  void save(const WorkflowRecord& r) const;
  /// Throws Error(unknown_workflow) or Error(corrupt_snapshot).
  WorkflowRecord load(const std::string& workflow_id) const;
  bool exists(const std::string& workflow_id) const;
  std::vector<std::string> list() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct Dispatch {
  std::string workflow_id;
  std::string task_id;
  std::string gateway_id;
  ExecutionCommand command;
};

struct Step {
  WorkflowRecord record;
  std::vector<Dispatch> dispatches;
};

struct Substitute {
  ResourceManifest manifest;
  std::string gateway_id;
};

/// Looks for a replacement resource for a failed node, excluding `tried`.
using SubstituteFinder = std::function<std::optional<Substitute>(
    const WorkflowRecord&, const TaskSpec&, const std::vector<std::string>& tried)>;

using AuditListener = std::function<void(const WorkflowRecord&, const AuditEvent&)>;

struct Options {
  std::optional<std::filesystem::path> store_dir;
  Clock clock = system_clock();
  int max_parallel = kMaxParallelNodes;
  std::int64_t node_deadline_ms = kDefaultNodeDeadlineMs;
  SubstituteFinder find_substitute;
  context::ContextStore* context = nullptr;
};

class Orchestrator {
 public:
  explicit Orchestrator(Options options = {});

  /// Stores a record in `composing` status without starting it.
  WorkflowRecord put(WorkflowRecord record);

  /// Marks the composed graph as approved by the user.
  WorkflowRecord approve_graph(const std::string& workflow_id, const std::string& actor);

  /// Throws Error(invalid_graph) or Error(not_approved).
  Step start(WorkflowRecord record);
  Step start(const std::string& workflow_id);

  /// Hand-authored graph, every agentic node pre-assigned. Throws
  /// Error(unassigned_node) or Error(invalid_graph).
  Step run_no_llm(WorkflowRecord record);

  /// Unknown command ids are stale: logged and ignored.
  Step on_result(const std::string& workflow_id, const std::string& command_id, ExecutionResult result);

  /// Throws Error(no_such_gate) or Error(decision_conflict).
  Step decide_gate(const GateDecision& d);

  Step pause(const std::string& workflow_id);
  /// Reloads the persisted record and re-dispatches the frontier.
  Step resume(const std::string& workflow_id);

  /// Marks a composing workflow failed (unfulfilled tasks, planning errors).
  WorkflowRecord fail(const std::string& workflow_id, const std::string& reason,
                      std::vector<std::string> unfulfilled = {});

  WorkflowRecord get(const std::string& workflow_id) const;
  bool has(const std::string& workflow_id) const;
  std::vector<std::string> workflows() const;

  void set_listener(AuditListener listener);

 private:
  struct Slot {
    std::mutex mu;
    WorkflowRecord record;
  };

  std::shared_ptr<Slot> slot(const std::string& workflow_id) const;
  std::shared_ptr<Slot> install(WorkflowRecord record);

  Step start_locked(WorkflowRecord& r);
  std::vector<Dispatch> pump(WorkflowRecord& r);
  Dispatch dispatch(WorkflowRecord& r, GraphNode& node);
  ValueMap bind_inputs(const WorkflowRecord& r, const GraphNode& node) const;
  void complete_locally(WorkflowRecord& r, GraphNode& node, const std::string& actor);
  void handle_failure(WorkflowRecord& r, GraphNode& node, const ExecutionResult& result,
                      std::vector<Dispatch>& out);
  void transition(WorkflowRecord& r, GraphNode& node, NodeStatus to, const std::string& detail = {});
  void set_status(WorkflowRecord& r, WorkflowStatus to, const std::string& detail = {});
  void audit(WorkflowRecord& r, AuditEvent e);
  void refresh_status(WorkflowRecord& r);
  void persist(WorkflowRecord& r);

  Options options_;
  std::optional<WorkflowStore> store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::mutex listener_mu_;
  AuditListener listener_;
};

/// Single-threaded deterministic driver used by tests and the no-LLM CLI:
/// executes dispatches one at a time, picking the next one in FIFO order or,
/// with an rng, uniformly at random.
using Executor = std::function<ExecutionResult(const Dispatch&)>;

struct DriveOptions {
  std::mt19937_64* rng = nullptr;
  // Called before each dispatch is executed; returning false stops driving
  // and leaves the remaining dispatches undelivered.
  std::function<bool(const Dispatch&)> before;
};

struct DriveResult {
  WorkflowRecord record;
  std::vector<Dispatch> undelivered;
};

DriveResult drive(Orchestrator& orch, Step step, const Executor& exec, const DriveOptions& opts = {});

}  // namespace dawn::orchestrator
