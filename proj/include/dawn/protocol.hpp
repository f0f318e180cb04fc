#pragma once

// Shared domain types for every DAWN component. All types here are plain
// values; nothing holds a reference into another object.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dawn {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

Timestamp now_ms();

/// Injectable time source; tests substitute a manual clock.
using Clock = std::function<Timestamp()>;
Clock system_clock();

// ---------------------------------------------------------------------------
// Scalars and flat schemas
// ---------------------------------------------------------------------------

enum class ScalarType { string, integer, floating, boolean };

using Scalar = std::variant<std::string, std::int64_t, double, bool>;
using ValueMap = std::map<std::string, Scalar>;

ScalarType scalar_type_of(const Scalar& v);
std::string_view to_string(ScalarType t);
std::optional<ScalarType> scalar_type_from_string(std::string_view s);

/// Human-readable rendering used in prompts, summaries and guard screening.
std::string render(const Scalar& v);

struct FieldSpec {
  std::string name;
  ScalarType type = ScalarType::string;
  bool required = true;
  // Value used when a validation probe needs a sample input for this field.
  std::optional<Scalar> example;

  bool operator==(const FieldSpec&) const = default;
};

using Schema = std::vector<FieldSpec>;

/// Violations of `values` against `schema`: missing required fields, type
/// mismatches and undeclared fields. Integers are accepted for float fields.
std::vector<std::string> validate_values(const Schema& schema, const ValueMap& values);

/// Probe inputs: each required field, plus optional fields that carry an example.
ValueMap sample_inputs(const Schema& schema);

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

enum class ResourceKind { tool, agent, agentic_application };
enum class ResourceStatus { active, suspended };

std::string_view to_string(ResourceKind k);
std::string_view to_string(ResourceStatus s);
std::optional<ResourceKind> resource_kind_from_string(std::string_view s);

/// Fixed-capacity ring of latency samples. Oldest samples are overwritten.
class LatencyRing {
 public:
  static constexpr std::size_t kCapacity = 1024;

  void push(std::int64_t sample_ms);
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  /// Samples oldest-first.
  std::vector<std::int64_t> ordered() const;

  bool operator==(const LatencyRing& o) const { return ordered() == o.ordered(); }

 private:
  std::vector<std::int64_t> samples_;
  std::size_t head_ = 0;
};

/// Nearest-rank percentile (rank = ceil(p/100 * n), 1-based) of `samples`.
/// Returns 0 for an empty set.
std::int64_t nearest_rank_percentile(std::span<const std::int64_t> samples, double p);

struct ResourceMetrics {
  std::uint64_t success_count = 0;
  std::uint64_t failure_count = 0;
  LatencyRing latency_samples_ms;
  std::optional<Timestamp> last_validated_at;
  // Carried but not used for ranking; the unit is provider-defined.
  double cost = 0.0;

  std::int64_t p50_ms() const;
  std::int64_t p90_ms() const;
  /// success / (success + failure), 1.0 before any outcome.
  double completion_rate() const;

  bool operator==(const ResourceMetrics&) const = default;
};

struct ResourceManifest {
  std::string resource_id;
  ResourceKind kind = ResourceKind::tool;
  std::string name;
  std::string description;
  std::vector<std::string> usage_examples;
  std::string endpoint;
  Schema input_schema;
  Schema output_schema;
  std::string owner_gateway;
  ResourceMetrics metrics;
  ResourceStatus status = ResourceStatus::active;

  /// Text indexed by retrieval: description followed by usage examples.
  std::string search_text() const;

  bool operator==(const ResourceManifest&) const = default;
};

/// Empty iff every manifest invariant holds. Each entry names its field.
std::vector<std::string> validate_manifest(const ResourceManifest& m);

/// Endpoints are `http://host[:port]/path`, `https://...` or `local://name`.
bool is_well_formed_url(std::string_view url);

// ---------------------------------------------------------------------------
// Tasks and graphs
// ---------------------------------------------------------------------------

enum class NodeKind { agentic, no_llm, human_gate };
enum class NodeStatus { pending, awaiting_approval, running, succeeded, failed, skipped };
enum class OperationalMode { no_llm, copilot, llm_agent };

std::string_view to_string(NodeKind k);
std::string_view to_string(NodeStatus s);
std::string_view to_string(OperationalMode m);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
std::optional<NodeStatus> node_status_from_string(std::string_view s);
std::optional<OperationalMode> mode_from_string(std::string_view s);

struct TaskSpec {
  std::string task_id;
  std::string description;
  std::vector<std::string> depends_on;
  NodeKind node_kind = NodeKind::agentic;

  bool operator==(const TaskSpec&) const = default;
};

/// Structural violations of a task list: duplicate ids, empty ids or
/// descriptions, self-dependencies, dependencies on unknown ids.
std::vector<std::string> validate_task_list(std::span<const TaskSpec> tasks);

struct GraphNode {
  TaskSpec task;
  std::optional<std::string> assignment;  // resource_id
  std::optional<std::string> gateway_id;  // provenance of the assignment
  NodeStatus status = NodeStatus::pending;
  // Copilot gate marker used when the graph gates only marked nodes.
  bool gated = false;

  bool operator==(const GraphNode&) const = default;
};

struct TaskGraph {
  std::string graph_id;
  std::vector<GraphNode> nodes;
  OperationalMode mode = OperationalMode::llm_agent;

  const GraphNode* find(std::string_view task_id) const;
  GraphNode* find(std::string_view task_id);
  std::vector<TaskSpec> tasks() const;

  bool operator==(const TaskGraph&) const = default;
};

/// Result of a cycle check. `cycle` is empty when the graph is acyclic and
/// otherwise holds one witness cycle in dependency-following order.
struct DagCheck {
  bool ok = true;
  std::vector<std::string> cycle;
};

DagCheck check_dag(std::span<const TaskSpec> tasks);
DagCheck check_dag(const TaskGraph& g);

// ---------------------------------------------------------------------------
// Protocol messages
// ---------------------------------------------------------------------------

struct ResourceQuery {
  std::string query_id;
  std::vector<TaskSpec> subtasks;
  std::string context_summary;
  int max_offers_per_task = 5;

  bool operator==(const ResourceQuery&) const = default;
};

struct ScoredManifest {
  ResourceManifest manifest;
  double score = 0.0;

  bool operator==(const ScoredManifest&) const = default;
};

struct ResourceOffer {
  std::string query_id;
  std::map<std::string, std::vector<ScoredManifest>> per_task;
  std::vector<std::string> unfulfilled;

  bool operator==(const ResourceOffer&) const = default;
};

/// Partition check: every query task appears in exactly one of per_task or
/// unfulfilled, nothing else appears, and each list is score-descending.
std::vector<std::string> check_offer_partition(const ResourceQuery& q, const ResourceOffer& o);

/// Throws Error(malformed_query) when a constructed offer breaks the partition.
void assert_offer_partition(const ResourceQuery& q, const ResourceOffer& o);

struct ExecutionCommand {
  std::string command_id;
  std::string resource_id;
  std::string endpoint;
  ValueMap inputs;
  std::int64_t deadline_ms = 30000;

  bool operator==(const ExecutionCommand&) const = default;
};

enum class Outcome { ok, error };

struct ExecutionResult {
  std::string command_id;
  Outcome outcome = Outcome::ok;
  std::optional<ValueMap> payload;
  std::optional<std::string> error_message;
  std::int64_t elapsed_ms = 0;

  static ExecutionResult success(std::string command_id, ValueMap payload, std::int64_t elapsed);
  static ExecutionResult failure(std::string command_id, std::string message, std::int64_t elapsed);

  bool ok() const { return outcome == Outcome::ok; }
  bool operator==(const ExecutionResult&) const = default;
};

/// Error results carry "<code>: <detail>" messages; this extracts the code.
std::optional<std::string> error_code_of(const ExecutionResult& r);

struct GatewayIdentity {
  std::string gateway_id;
  std::string display_name;
  std::string base_url;
  std::string auth_token;
  std::vector<ResourceKind> capabilities;

  bool operator==(const GatewayIdentity&) const = default;
};

/// Command ids encode their origin as `<workflow>/<task>/<attempt>`.
std::string make_command_id(std::string_view workflow_id, std::string_view task_id, int attempt);
struct CommandOrigin {
  std::string workflow_id;
  std::string task_id;
  int attempt = 0;
};
std::optional<CommandOrigin> parse_command_id(std::string_view command_id);

}  // namespace dawn
