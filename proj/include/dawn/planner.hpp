#pragma once

// Intent -> task list planning with pluggable reasoning strategies, and task
// list -> TaskGraph composition with resource assignment.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dawn/context.hpp"
#include "dawn/error.hpp"
#include "dawn/plan_step.hpp"
#include "dawn/protocol.hpp"

namespace dawn::planner {

inline constexpr int kStepBudget = 32;
inline constexpr int kMaxPromptCandidates = 10;
inline constexpr int kReplanBudget = 3;
inline constexpr std::string_view kLocalGatewayId = "local";

struct Intent {
  std::string intent_id;
  std::string text;
  std::string user_id;
  std::string tenant_id;
  OperationalMode mode = OperationalMode::llm_agent;
  std::map<std::string, std::string> preferences;

  bool operator==(const Intent&) const = default;
};

Json to_json(const Intent& i);
Intent intent_from_json(const Json& j, const std::string& path);

struct CandidateSummary {
  std::string resource_id;
  std::string name;
  std::string description;
};

struct PlanPrompt {
  std::string intent_text;
  std::string context;
  std::vector<CandidateSummary> candidates;  // at most kMaxPromptCandidates
  int branch = 0;                            // tree-of-thought branch index
};

class ReasoningProvider {
 public:
  virtual ~ReasoningProvider() = default;
  virtual std::string name() const = 0;
  virtual bool deterministic() const = 0;

  /// Next step(s) given the trace so far. Interleaved strategies use only
  /// the first; one-shot strategies take the whole list as the plan.
  virtual std::vector<PlanStep> propose(const PlanPrompt& prompt, std::span<const PlanStep> trace) = 0;

  /// Branch score for tree-of-thought selection. Higher is better.
  virtual double evaluate(const PlanPrompt&, std::span<const PlanStep>) { return 0.0; }

  /// Re-phrasing hook used when re-querying for unassigned tasks.
  virtual std::string refine_task(const TaskSpec& task, std::string_view) { return task.description; }
};

/// Replays JSON scripts keyed by case-insensitive intent substrings.
///
///   {"scripts": [{"pattern": "plan a trip", "steps": [PlanStep...]}]}
class ScriptedProvider final : public ReasoningProvider {
 public:
  struct Script {
    std::string pattern;
    std::vector<PlanStep> steps;
  };

  explicit ScriptedProvider(std::vector<Script> scripts);
  static ScriptedProvider from_json(const Json& j);
  static ScriptedProvider from_file(const std::filesystem::path& file);

  std::string name() const override { return "scripted"; }
  bool deterministic() const override { return true; }
  std::vector<PlanStep> propose(const PlanPrompt& prompt, std::span<const PlanStep> trace) override;

 private:
  std::vector<Script> scripts_;
};

/// The bundled scripts (data/providers/scripted.json).
ScriptedProvider default_scripted_provider();

enum class Strategy { react, rewoo, tot };
std::string_view to_string(Strategy s);

using ResourceLookup = std::function<std::vector<CandidateSummary>(const std::string& query)>;

struct PlanOptions {
  Strategy strategy = Strategy::react;
  int step_budget = kStepBudget;
  int tot_breadth = 3;
  int tot_depth = 2;
  std::string context;
  ResourceLookup lookup;
  // When set, every trace step is appended to this workflow's scratchpad.
  context::ContextStore* scratchpad = nullptr;
  std::string workflow_id;
};

struct PlanResult {
  std::vector<TaskSpec> tasks;
  std::vector<PlanStep> trace;
};

/// Planning failure; carries the trace up to the failing step and, for a
/// cyclic plan, the witness cycle.
class PlanError : public Error {
 public:
  PlanError(ErrorCode code, const std::string& msg, std::vector<PlanStep> trace,
            std::vector<std::string> cycle = {});
  const std::vector<PlanStep>& trace() const { return trace_; }
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<PlanStep> trace_;
  std::vector<std::string> cycle_;
};

PlanResult plan(const Intent& intent, ReasoningProvider& provider, const PlanOptions& options = {});

// ---------------------------------------------------------------------------
// Composition

struct SourcedOffer {
  std::string gateway_id;
  ResourceOffer offer;
};

struct Candidate {
  ResourceManifest manifest;
  double offer_score = 0.0;
  std::string gateway_id;
  double gateway_rating = 0.0;

  /// 0.7 offer score + 0.2 gateway rating + 0.1 completion rate.
  double composite() const;
};

struct ComposeResult {
  TaskGraph graph;
  std::vector<std::string> unassigned;  // agentic tasks with no candidate
  std::map<std::string, ResourceManifest> manifests;  // task_id -> assigned
};

using LocalHits = std::map<std::string, std::vector<ScoredManifest>>;

/// Local-pool builtins are attributed to kLocalGatewayId with rating 1.0;
/// cached references to their owning gateway.
/// Unknown gateways default to rating 0.5.
ComposeResult compose(std::span<const TaskSpec> tasks, std::span<const SourcedOffer> offers,
                      const LocalHits& local_hits, const std::map<std::string, double>& gateway_ratings,
                      const std::string& graph_id, OperationalMode mode);

/// Chooses the best candidate: composite desc, then gateway rating desc,
/// then resource_id asc. Suspended manifests are ignored.
std::optional<Candidate> pick_best(std::span<const Candidate> candidates);

/// Narrowed query for the unassigned tasks. Increments `rounds_used`; throws
/// Error(replan_budget_exhausted) once kReplanBudget rounds are spent.
ResourceQuery replan(const TaskGraph& graph, std::span<const std::string> unassigned,
                     ReasoningProvider& provider, const std::string& context_summary,
                     const std::string& query_id, int& rounds_used);

}  // namespace dawn::planner
