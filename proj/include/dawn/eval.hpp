#pragma once

// Evaluation harness: planner success-rate protocol over generated ground
// truth cases, and the two-stage IR benchmark on a synthetic corpus.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dawn/planner.hpp"
#include "dawn/retrieval.hpp"

namespace dawn::eval {

inline constexpr double kMatchThreshold = 0.6;
inline constexpr int kDefaultRepeats = 5;
inline constexpr std::size_t kIrAgents = 200;
inline constexpr std::size_t kIrQueries = 1000;
inline constexpr std::size_t kIrQueriesFull = 20000;

/// Uniform double in [0,1) from the top 53 bits of one draw.
double unit_draw(std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Planner evaluation

struct GroundTruthCase {
  std::string case_id;
  std::string intent_text;
  std::vector<TaskSpec> truth_tasks;  // topological order
};

/// 10 cases of 6-10 tasks built from chain and diamond segments.
std::vector<GroundTruthCase> generate_cases(std::uint64_t seed);

/// True when neither task is reachable from the other in the truth graph.
bool reorder_tolerant(const GroundTruthCase& c, const std::string& a, const std::string& b);

/// Content tokens of a description (stop words removed).
std::set<std::string> normalized_tokens(std::string_view description);
/// |A ∩ B| / min(|A|, |B|); 0 when either is empty.
double overlap_coefficient(const std::set<std::string>& a, const std::set<std::string>& b);

struct TaskListScore {
  bool complete = false;
  bool order_ok = false;
  bool success = false;
  std::vector<std::string> missing;     // truth descriptions without a match
  std::vector<std::string> extra;       // candidate descriptions without a match
  std::vector<std::string> order_violations;  // "before -> after" truth edges broken
};

TaskListScore score_task_list(std::span<const TaskSpec> candidate, const GroundTruthCase& truth);

/// Serves each case's truth task list as emit_task steps. With probability
/// `drop_probability` per trial one uniformly chosen task is omitted (its
/// dependants inherit its dependencies). A trial starts at each empty trace.
class CaseProvider final : public planner::ReasoningProvider {
 public:
  CaseProvider(std::vector<GroundTruthCase> cases, double drop_probability, std::uint64_t seed);

  std::string name() const override;
  bool deterministic() const override { return true; }
  std::vector<PlanStep> propose(const planner::PlanPrompt& prompt, std::span<const PlanStep> trace) override;

  std::uint64_t trials() const { return trials_; }
  std::uint64_t drops() const { return drops_; }

 private:
  std::vector<GroundTruthCase> cases_;
  double drop_probability_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<PlanStep> current_;
  std::uint64_t trials_ = 0;
  std::uint64_t drops_ = 0;
};

/// Expected success rate of a CaseProvider: the fraction of `trials` in
/// which its seeded draws keep every task, replayed without planning.
double expected_case_provider_rate(std::uint64_t seed, double drop_probability, std::span<const GroundTruthCase> cases,
                                   int repeats);

struct TrialFailure {
  std::string case_id;
  int repeat = 0;
  std::string reason;
  TaskListScore score;
};

struct PlannerReport {
  std::string provider;
  std::uint64_t seed = 0;
  int repeats = 0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::map<std::string, int> per_case_successes;
  std::vector<TrialFailure> failures;
};

PlannerReport run_planner_eval(planner::ReasoningProvider& provider, std::span<const GroundTruthCase> cases,
                               int repeats = kDefaultRepeats, planner::Strategy strategy = planner::Strategy::react,
                               std::uint64_t seed = 0);

Json to_json(const PlannerReport& r);
std::string format_table(const PlannerReport& r);

// ---------------------------------------------------------------------------
// IR evaluation

struct IrQuery {
  std::string query_id;
  std::string text;
  std::set<std::string> relevant;
};

struct IrCorpus {
  std::uint64_t seed = 0;
  std::vector<ResourceManifest> manifests;
  std::vector<IrQuery> queries;

  /// Empty when every relevant id exists and every query has one.
  std::vector<std::string> problems() const;
};

/// 200 agents and 1000 queries (20000 with `full`), relevance by construction.
IrCorpus generate_ir_corpus(std::uint64_t seed, bool full = false);

/// Writes manifests.json and queries.jsonl into `dir`.
void write_ir_corpus(const IrCorpus& corpus, const std::filesystem::path& dir);
IrCorpus read_ir_corpus(const std::filesystem::path& dir);

/// Sorts candidates relevant-first, keeping stage-1 order within each group.
class OracleReranker final : public retrieval::RerankProvider {
 public:
  explicit OracleReranker(const IrCorpus& corpus);
  std::string name() const override { return "oracle"; }
  std::vector<retrieval::RankedItem> rank(std::string_view query, std::string_view context,
                                          std::span<const retrieval::RerankCandidate> candidates) override;

 private:
  std::map<std::string, std::set<std::string>> relevant_by_text_;
};

struct IrMetrics {
  double ndcg1 = 0, ndcg3 = 0, recall1 = 0, recall3 = 0, recall5 = 0;
};

/// Per-query metrics for a ranking under binary relevance.
IrMetrics score_ranking(std::span<const std::string> ranking, const std::set<std::string>& relevant);

struct IrReport {
  std::uint64_t seed = 0;
  std::size_t agents = 0;
  std::size_t queries = 0;
  std::string reranker;
  IrMetrics stage1;
  IrMetrics stage2;
  std::size_t fallbacks = 0;
  double elapsed_ms = 0;
};

/// Stage-1 top-5 then rerank, averaged over queries. Queries are scored in
/// parallel and summed in query order.
IrReport run_ir_eval(const IrCorpus& corpus, retrieval::RerankProvider& reranker,
                     retrieval::Execution exec = retrieval::Execution::parallel);

Json to_json(const IrReport& r);
std::string format_table(const IrReport& r);

}  // namespace dawn::eval
