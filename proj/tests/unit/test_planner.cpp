#include <gtest/gtest.h>

#include <random>

#include "dawn/context.hpp"
#include "dawn/planner.hpp"
#include "test_support.hpp"

namespace dawn::planner {
namespace {

using testing::text_manifest;

Intent intent(const std::string& text, OperationalMode mode = OperationalMode::llm_agent) {
  Intent i;
  i.intent_id = "i1";
  i.text = text;
  i.mode = mode;
  return i;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

PlanStep emit(const std::string& id, std::vector<std::string> deps = {}) {
  PlanStep s;
  s.action = PlanAction::emit_task;
  s.action_payload = to_json(TaskSpec{id, "do " + id, std::move(deps)});
  return s;
}

PlanStep finish_step() {
  PlanStep s;
  s.action = PlanAction::finish;
  return s;
}

// ---------------------------------------------------------------------------
// Planning

TEST(Plan, TripPlanIsAThreeStepChain) {
  auto provider = default_scripted_provider();
  auto r = plan(intent("Plan a trip to Tokyo in May"), provider);
  ASSERT_EQ(r.tasks.size(), 3u);
  EXPECT_EQ(r.tasks[0].task_id, "book_flight");
  EXPECT_EQ(r.tasks[1].depends_on, std::vector<std::string>{"book_flight"});
  EXPECT_EQ(r.tasks[2].depends_on, std::vector<std::string>{"reserve_accommodation"});
  ASSERT_EQ(r.trace.size(), 4u);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    EXPECT_EQ(r.trace[i].step_no, static_cast<int>(i) + 1);
    EXPECT_FALSE(r.trace[i].observation.empty());
  }
  EXPECT_EQ(r.trace.back().action, PlanAction::finish);
}

TEST(Plan, EveryStrategyYieldsTheSameScriptedPlan) {
  auto provider = default_scripted_provider();
  auto base = plan(intent("plan a trip"), provider).tasks;
  for (auto s : {Strategy::rewoo, Strategy::tot}) {
    PlanOptions o;
    o.strategy = s;
    EXPECT_EQ(plan(intent("plan a trip"), provider, o).tasks, base) << to_string(s);
  }
}

TEST(Plan, HrIntentPlansSixSteps) {
  auto provider = default_scripted_provider();
  auto r = plan(intent("Hire a senior ML Engineer"), provider);
  std::vector<std::string> ids;
  for (const auto& t : r.tasks) ids.push_back(t.task_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"jd_write", "profile_search", "schedule_interviews", "collect_feedback",
                                           "hiring_decision", "onboarding"}));
  EXPECT_EQ(r.tasks[4].node_kind, NodeKind::no_llm);
  EXPECT_TRUE(check_dag(r.tasks).ok);
}

TEST(Plan, CyclicPlanIsRejectedWithWitness) {
  auto provider = default_scripted_provider();
  try {
    plan(intent("write a cyclic report"), provider);
    FAIL();
  } catch (const PlanError& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_plan);
    auto cycle = e.cycle();
    std::sort(cycle.begin(), cycle.end());
    EXPECT_EQ(cycle, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(e.trace().size(), 3u);
  }
}

TEST(Plan, ModeAndInputErrors) {
  auto provider = default_scripted_provider();
  EXPECT_EQ(code_of([&] { plan(intent("plan a trip", OperationalMode::no_llm), provider); }),
            ErrorCode::invalid_mode_transition);
  EXPECT_EQ(code_of([&] { plan(intent(""), provider); }), ErrorCode::empty_plan);
  EXPECT_EQ(code_of([&] { plan(intent("something unscripted"), provider); }), ErrorCode::provider_failure);
}

class EndlessProvider final : public ReasoningProvider {
 public:
  std::string name() const override { return "endless"; }
  bool deterministic() const override { return true; }
  std::vector<PlanStep> propose(const PlanPrompt&, std::span<const PlanStep> trace) override {
    return {emit("t" + std::to_string(trace.size()))};
  }
};

TEST(Plan, StepBudgetIsEnforced) {
  EndlessProvider p;
  PlanOptions o;
  o.step_budget = 7;
  try {
    plan(intent("x"), p, o);
    FAIL();
  } catch (const PlanError& e) {
    EXPECT_EQ(e.code(), ErrorCode::step_budget_exceeded);
    EXPECT_EQ(e.trace().size(), 7u);
  }
}

class ListProvider final : public ReasoningProvider {
 public:
  explicit ListProvider(std::vector<PlanStep> steps) : steps_(std::move(steps)) {}
  std::string name() const override { return "list"; }
  bool deterministic() const override { return true; }
  std::vector<PlanStep> propose(const PlanPrompt& prompt, std::span<const PlanStep> trace) override {
    prompts.push_back(prompt);
    return {steps_.begin() + static_cast<std::ptrdiff_t>(trace.size()), steps_.end()};
  }
  std::vector<PlanPrompt> prompts;

 private:
  std::vector<PlanStep> steps_;
};

TEST(Plan, ReviseAndRequestResources) {
  PlanStep req;
  req.action = PlanAction::request_resources;
  req.action_payload = {{"query", "flights"}};
  PlanStep revise;
  revise.action = PlanAction::revise_plan;
  revise.action_payload = {{"remove", {"b"}}, {"add", {to_json(TaskSpec{"c", "do c", {"a"}})}}};
  ListProvider p({req, emit("a"), emit("b", {"a"}), emit("a"), revise, finish_step()});
  PlanOptions o;
  o.lookup = [](const std::string&) {
    std::vector<CandidateSummary> out;
    for (int i = 0; i < 15; ++i) out.push_back({"r" + std::to_string(i), "n", "d"});
    return out;
  };
  auto r = plan(intent("x"), p, o);
  ASSERT_EQ(r.tasks.size(), 2u);
  EXPECT_EQ(r.tasks[1].task_id, "c");
  EXPECT_EQ(r.trace[3].observation, "task a already planned");
  EXPECT_EQ(r.trace[4].observation, "removed 1, added 1");
  EXPECT_EQ(p.prompts.back().candidates.size(), static_cast<std::size_t>(kMaxPromptCandidates));
}

TEST(Plan, MalformedStepPayloadIsAProviderFailure) {
  PlanStep bad;
  bad.action = PlanAction::emit_task;
  bad.action_payload = {{"task_id", 3}};
  ListProvider p({bad, finish_step()});
  EXPECT_EQ(code_of([&] { plan(intent("x"), p); }), ErrorCode::provider_failure);
}

TEST(Plan, ScratchpadRecordsEveryStep) {
  context::ContextStore store;
  store.register_workflow("wf", "t", "u", "plan a trip");
  auto provider = default_scripted_provider();
  PlanOptions o;
  o.scratchpad = &store;
  o.workflow_id = "wf";
  auto r = plan(intent("plan a trip"), provider, o);
  auto pad = store.scratchpad("wf");
  ASSERT_EQ(pad.size(), r.trace.size());
  for (std::size_t i = 0; i < pad.size(); ++i) EXPECT_EQ(pad[i].content, r.trace[i]);
}

TEST(Intent, JsonRoundTrip) {
  Intent i = intent("hello", OperationalMode::copilot);
  i.preferences = {{"city", "Tokyo"}};
  i.tenant_id = "t";
  EXPECT_EQ(intent_from_json(to_json(i), "$"), i);
}

// ---------------------------------------------------------------------------
// Composition

ScoredManifest scored(const std::string& id, double score, const std::string& owner = "gw") {
  return {text_manifest(id, "resource " + id, owner), score};
}

TEST(Compose, CompositeWeights) {
  Candidate c{text_manifest("x", "y"), 0.8, "gw", 0.5};
  c.manifest.metrics.success_count = 1;
  c.manifest.metrics.failure_count = 1;
  EXPECT_DOUBLE_EQ(c.composite(), 0.7 * 0.8 + 0.2 * 0.5 + 0.1 * 0.5);
}

TEST(Compose, DedupsAcrossGatewaysKeepingTheBestInstance) {
  std::vector<TaskSpec> tasks = {{"a", "do a", {}}};
  std::vector<SourcedOffer> offers = {
      {"gw1", {"q", {{"a", {scored("shared", 0.6, "gw1"), scored("other", 0.5, "gw1")}}}, {}}},
      {"gw2", {"q", {{"a", {scored("shared", 0.6, "gw2")}}}, {}}},
  };
  auto r = compose(tasks, offers, {}, {{"gw1", 0.3}, {"gw2", 0.9}}, "g", OperationalMode::llm_agent);
  ASSERT_TRUE(r.unassigned.empty());
  EXPECT_EQ(r.graph.nodes[0].assignment, "shared");
  EXPECT_EQ(r.graph.nodes[0].gateway_id, "gw2");
  EXPECT_EQ(r.manifests.at("a").resource_id, "shared");
}

TEST(Compose, TieBreaksOnResourceId) {
  std::vector<TaskSpec> tasks = {{"a", "do a", {}}};
  std::vector<SourcedOffer> equal = {{"gw1", {"q", {{"a", {scored("zeta", 0.5), scored("alpha", 0.5)}}}, {}}}};
  auto r = compose(tasks, equal, {}, {{"gw1", 0.5}}, "g", OperationalMode::llm_agent);
  EXPECT_EQ(r.graph.nodes[0].assignment, "alpha");
}

TEST(Compose, LocalBuiltinsAndCachedReferences) {
  std::vector<TaskSpec> tasks = {{"sum", "add numbers", {}}, {"ref", "cached", {}}};
  LocalHits local = {{"sum", {scored("builtin.calculator", 0.6, "local")}},
                     {"ref", {scored("remote.thing", 0.6, "gw-owner")}}};
  auto r = compose(tasks, {}, local, {{"gw-owner", 0.7}}, "g", OperationalMode::llm_agent);
  EXPECT_EQ(r.graph.find("sum")->gateway_id, std::string(kLocalGatewayId));
  EXPECT_EQ(r.graph.find("ref")->gateway_id, "gw-owner");
}

TEST(Compose, NonAgenticNodesAreNotAssignedAndMissingOnesAreReported) {
  std::vector<TaskSpec> tasks = {{"a", "do a", {}}, {"gate", "approve", {"a"}, NodeKind::human_gate},
                                 {"calc", "compute", {"a"}, NodeKind::no_llm}, {"lost", "nothing", {}}};
  std::vector<SourcedOffer> offers = {{"gw", {"q", {{"a", {scored("ra", 0.9)}}}, {"lost"}}}};
  auto r = compose(tasks, offers, {}, {}, "g", OperationalMode::copilot);
  EXPECT_EQ(r.graph.mode, OperationalMode::copilot);
  EXPECT_FALSE(r.graph.find("gate")->assignment);
  EXPECT_FALSE(r.graph.find("calc")->assignment);
  EXPECT_EQ(r.unassigned, std::vector<std::string>{"lost"});
}

TEST(Compose, SuspendedOffersAreIgnored) {
  std::vector<TaskSpec> tasks = {{"a", "do a", {}}};
  auto s = scored("bad", 0.99);
  s.manifest.status = ResourceStatus::suspended;
  std::vector<SourcedOffer> offers = {{"gw", {"q", {{"a", {s, scored("good", 0.1)}}}, {}}}};
  EXPECT_EQ(compose(tasks, offers, {}, {}, "g", OperationalMode::llm_agent).graph.nodes[0].assignment, "good");
}

TEST(PickBest, MatchesSortOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Candidate> cands;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 6); i < n; ++i) {
      Candidate c{text_manifest("r" + std::to_string(rng() % 5), "x"), (rng() % 4) / 4.0,
                  "gw" + std::to_string(rng() % 3), (rng() % 3) / 2.0};
      c.manifest.metrics.success_count = rng() % 2;
      c.manifest.metrics.failure_count = rng() % 2;
      if (rng() % 8 == 0) c.manifest.status = ResourceStatus::suspended;
      cands.push_back(c);
    }
    std::vector<Candidate> live;
    for (const auto& c : cands) {
      if (c.manifest.status == ResourceStatus::active) live.push_back(c);
    }
    auto got = pick_best(cands);
    if (live.empty()) {
      ASSERT_FALSE(got);
      continue;
    }
    std::stable_sort(live.begin(), live.end(), [](const Candidate& a, const Candidate& b) {
      if (a.composite() != b.composite()) return a.composite() > b.composite();
      if (a.gateway_rating != b.gateway_rating) return a.gateway_rating > b.gateway_rating;
      return a.manifest.resource_id < b.manifest.resource_id;
    });
    ASSERT_TRUE(got);
    ASSERT_EQ(got->manifest.resource_id, live[0].manifest.resource_id);
    ASSERT_EQ(got->composite(), live[0].composite());
    ASSERT_EQ(got->gateway_rating, live[0].gateway_rating);
  }
}

// ---------------------------------------------------------------------------
// Re-planning

class RefiningProvider final : public ReasoningProvider {
 public:
  std::string name() const override { return "refining"; }
  bool deterministic() const override { return true; }
  std::vector<PlanStep> propose(const PlanPrompt&, std::span<const PlanStep>) override { return {finish_step()}; }
  std::string refine_task(const TaskSpec& t, std::string_view) override { return t.description + " (refined)"; }
};

TEST(Replan, NarrowsTheQueryAndSpendsTheBudget) {
  TaskGraph g;
  g.nodes = {{{"a", "do a", {}}}, {{"b", "do b", {"a"}}}};
  RefiningProvider p;
  int rounds = 0;
  std::vector<std::string> missing = {"b"};
  for (int i = 1; i <= kReplanBudget; ++i) {
    auto q = replan(g, missing, p, "ctx", "q" + std::to_string(i), rounds);
    EXPECT_EQ(rounds, i);
    ASSERT_EQ(q.subtasks.size(), 1u);
    EXPECT_EQ(q.subtasks[0].description, "do b (refined)");
    EXPECT_TRUE(q.subtasks[0].depends_on.empty());
    EXPECT_EQ(q.context_summary, "ctx");
  }
  try {
    replan(g, missing, p, "ctx", "q4", rounds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::replan_budget_exhausted);
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  EXPECT_EQ(rounds, kReplanBudget);
}

}  // namespace
}  // namespace dawn::planner
