#include "dawn/planner.hpp"

#include <algorithm>
#include <cctype>

#include "dawn/guard.hpp"
#include "dawn/log.hpp"
#include "dawn/registry.hpp"

namespace dawn::planner {

Json to_json(const Intent& i) {
  return {{"intent_id", i.intent_id}, {"text", i.text},         {"user_id", i.user_id},
          {"tenant_id", i.tenant_id}, {"mode", to_string(i.mode)}, {"preferences", i.preferences}};
}

Intent intent_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  Intent i;
  i.intent_id = r.has("intent_id") ? r.string("intent_id") : "";
  i.text = r.string("text");
  i.user_id = r.has("user_id") ? r.string("user_id") : "";
  i.tenant_id = r.has("tenant_id") ? r.string("tenant_id") : "";
  auto mode = mode_from_string(r.string("mode"));
  if (!mode) throw_at(r.child_path("mode"), "unknown mode");
  i.mode = *mode;
  if (r.has("preferences")) {
    const auto& p = r.object("preferences");
    for (const auto& [k, v] : p.items()) {
      if (!v.is_string()) throw_at(r.child_path("preferences") + "." + k, "expected string");
      i.preferences[k] = v.get<std::string>();
    }
  }
  r.finish();
  return i;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::react: return "react";
    case Strategy::rewoo: return "rewoo";
    case Strategy::tot: return "tot";
  }
  return "react";
}

// ---------------------------------------------------------------------------

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

ScriptedProvider::ScriptedProvider(std::vector<Script> scripts) : scripts_(std::move(scripts)) {}

ScriptedProvider ScriptedProvider::from_json(const Json& j) {
  JsonReader r(j, "$");
  const auto& arr = r.array("scripts");
  r.finish();
  std::vector<Script> scripts;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto p = "$.scripts[" + std::to_string(i) + "]";
    JsonReader sr(arr[i], p);
    Script s;
    s.pattern = sr.string("pattern");
    const auto& steps = sr.array("steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      s.steps.push_back(plan_step_from_json(steps[k], sr.child_path("steps") + "[" + std::to_string(k) + "]"));
    }
    sr.finish();
    scripts.push_back(std::move(s));
  }
  return ScriptedProvider(std::move(scripts));
}

ScriptedProvider ScriptedProvider::from_file(const std::filesystem::path& file) {
  return from_json(parse_json(registry::read_file(file)));
}

ScriptedProvider default_scripted_provider() {
  return ScriptedProvider::from_file(guard::default_data_dir() / "providers" / "scripted.json");
}

std::vector<PlanStep> ScriptedProvider::propose(const PlanPrompt& prompt, std::span<const PlanStep> trace) {
  auto text = lower(prompt.intent_text);
  for (const auto& s : scripts_) {
    if (text.find(lower(s.pattern)) == std::string::npos) continue;
    if (trace.size() >= s.steps.size()) throw Error(ErrorCode::provider_failure, "script exhausted");
    return {s.steps.begin() + static_cast<std::ptrdiff_t>(trace.size()), s.steps.end()};
  }
  throw Error(ErrorCode::provider_failure, "no script matches intent");
}

// ---------------------------------------------------------------------------

PlanError::PlanError(ErrorCode code, const std::string& msg, std::vector<PlanStep> trace,
                     std::vector<std::string> cycle)
    : Error(code, msg), trace_(std::move(trace)), cycle_(std::move(cycle)) {}

namespace {

class PlanBuilder {
 public:
  PlanBuilder(const PlanOptions& options, PlanPrompt& prompt) : options_(options), prompt_(prompt) {}

  // Applies one step, fills in its observation and appends it to the trace.
  // Returns true when the step finishes the plan.
  bool apply(PlanStep step) {
    if (static_cast<int>(trace_.size()) >= options_.step_budget) {
      fail(ErrorCode::step_budget_exceeded, "step budget of " + std::to_string(options_.step_budget) + " exhausted");
    }
    step.step_no = static_cast<int>(trace_.size()) + 1;
    bool done = false;
    try {
      switch (step.action) {
        case PlanAction::emit_task: {
          auto t = task_from_json(step.action_payload, "$.action_payload");
          bool dup = std::any_of(tasks_.begin(), tasks_.end(),
                                 [&](const TaskSpec& x) { return x.task_id == t.task_id; });
          if (dup) {
            step.observation = "task " + t.task_id + " already planned";
          } else {
            step.observation = "task " + t.task_id + " recorded";
            tasks_.push_back(std::move(t));
          }
          break;
        }
        case PlanAction::request_resources: {
          auto query = step.action_payload.value("query", std::string{});
          if (!options_.lookup) {
            step.observation = "no resource lookup available";
            break;
          }
          auto found = options_.lookup(query);
          if (found.size() > static_cast<std::size_t>(kMaxPromptCandidates)) found.resize(kMaxPromptCandidates);
          prompt_.candidates = found;
          std::string obs = "candidates:";
          for (const auto& c : found) obs += " " + c.resource_id;
          step.observation = found.empty() ? "no candidates" : obs;
          break;
        }
        case PlanAction::revise_plan: {
          std::size_t removed = 0;
          if (step.action_payload.contains("remove")) {
            for (const auto& id : step.action_payload.at("remove")) {
              removed += std::erase_if(tasks_, [&](const TaskSpec& t) { return t.task_id == id.get<std::string>(); });
            }
          }
          std::size_t added = 0;
          if (step.action_payload.contains("add")) {
            const auto& add = step.action_payload.at("add");
            for (std::size_t i = 0; i < add.size(); ++i) {
              tasks_.push_back(task_from_json(add[i], "$.action_payload.add[" + std::to_string(i) + "]"));
              ++added;
            }
          }
          step.observation = "removed " + std::to_string(removed) + ", added " + std::to_string(added);
          break;
        }
        case PlanAction::finish:
          step.observation = "plan complete with " + std::to_string(tasks_.size()) + " tasks";
          done = true;
          break;
      }
    } catch (const ParseError& e) {
      push(step);
      fail(ErrorCode::provider_failure, std::string("malformed step payload: ") + e.what());
    }
    push(step);
    return done;
  }

  [[noreturn]] void fail(ErrorCode code, const std::string& msg, std::vector<std::string> cycle = {}) {
    throw PlanError(code, msg, trace_, std::move(cycle));
  }

  PlanResult finish() {
    if (tasks_.empty()) fail(ErrorCode::empty_plan, "provider produced no tasks");
    auto violations = validate_task_list(tasks_);
    auto dag = check_dag(tasks_);
    if (!dag.ok) {
      std::string witness;
      for (const auto& id : dag.cycle) witness += (witness.empty() ? "" : " -> ") + id;
      fail(ErrorCode::invalid_plan, "cycle: " + witness, dag.cycle);
    }
    if (!violations.empty()) fail(ErrorCode::invalid_plan, violations.front());
    return {tasks_, trace_};
  }

  std::span<const PlanStep> trace() const { return trace_; }

 private:
  void push(const PlanStep& step) {
    trace_.push_back(step);
    if (options_.scratchpad) options_.scratchpad->append_scratchpad(options_.workflow_id, step);
  }

  const PlanOptions& options_;
  PlanPrompt& prompt_;
  std::vector<TaskSpec> tasks_;
  std::vector<PlanStep> trace_;
};

std::vector<PlanStep> ask(ReasoningProvider& provider, const PlanPrompt& prompt,
                          std::span<const PlanStep> trace, PlanBuilder& b) {
  try {
    auto steps = provider.propose(prompt, trace);
    if (steps.empty()) b.fail(ErrorCode::provider_failure, "provider returned no step");
    return steps;
  } catch (const PlanError&) {
    throw;
  } catch (const std::exception& e) {
    b.fail(ErrorCode::provider_failure, e.what());
  }
}

}  // namespace

PlanResult plan(const Intent& intent, ReasoningProvider& provider, const PlanOptions& options) {
  if (intent.mode == OperationalMode::no_llm) {
    throw Error(ErrorCode::invalid_mode_transition, "no_llm workflows are authored, not planned");
  }
  if (intent.text.empty()) throw Error(ErrorCode::empty_plan, "intent text empty");

  PlanPrompt prompt{intent.text, options.context, {}, 0};
  PlanBuilder b(options, prompt);

  switch (options.strategy) {
    case Strategy::react: {
      while (true) {
        auto steps = ask(provider, prompt, b.trace(), b);
        if (b.apply(std::move(steps.front()))) break;
      }
      break;
    }
    case Strategy::rewoo: {
      // One call produces the whole plan; observations are never fed back.
      auto steps = ask(provider, prompt, {}, b);
      bool done = false;
      for (auto& s : steps) {
        if ((done = b.apply(std::move(s)))) break;
      }
      if (!done) b.fail(ErrorCode::provider_failure, "one-shot plan did not finish");
      break;
    }
    case Strategy::tot: {
      bool done = false;
      for (int depth = 0; depth < options.tot_depth && !done; ++depth) {
        std::vector<PlanStep> best;
        double best_score = 0.0;
        for (int branch = 0; branch < options.tot_breadth; ++branch) {
          prompt.branch = branch;
          auto steps = ask(provider, prompt, b.trace(), b);
          std::vector<PlanStep> candidate(b.trace().begin(), b.trace().end());
          candidate.insert(candidate.end(), steps.begin(), steps.end());
          double score = provider.evaluate(prompt, candidate);
          if (best.empty() || score > best_score) {
            best = std::move(steps);
            best_score = score;
          }
        }
        // Commit the chosen branch's next step.
        done = b.apply(std::move(best.front()));
      }
      prompt.branch = 0;
      while (!done) {
        auto steps = ask(provider, prompt, b.trace(), b);
        done = b.apply(std::move(steps.front()));
      }
      break;
    }
  }
  return b.finish();
}

// ---------------------------------------------------------------------------

double Candidate::composite() const {
  return 0.7 * offer_score + 0.2 * gateway_rating + 0.1 * manifest.metrics.completion_rate();
}

std::optional<Candidate> pick_best(std::span<const Candidate> candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (c.manifest.status == ResourceStatus::suspended) continue;
    if (!best) {
      best = &c;
      continue;
    }
    double a = c.composite();
    double b = best->composite();
    if (a != b) {
      if (a > b) best = &c;
    } else if (c.gateway_rating != best->gateway_rating) {
      if (c.gateway_rating > best->gateway_rating) best = &c;
    } else if (c.manifest.resource_id < best->manifest.resource_id) {
      best = &c;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

ComposeResult compose(std::span<const TaskSpec> tasks, std::span<const SourcedOffer> offers,
                      const LocalHits& local_hits, const std::map<std::string, double>& gateway_ratings,
                      const std::string& graph_id, OperationalMode mode) {
  auto rating_of = [&](const std::string& gw) {
    if (gw == kLocalGatewayId) return 1.0;
    auto it = gateway_ratings.find(gw);
    return it == gateway_ratings.end() ? 0.5 : it->second;
  };

  ComposeResult out;
  out.graph.graph_id = graph_id;
  out.graph.mode = mode;
  for (const auto& t : tasks) {
    GraphNode node;
    node.task = t;
    if (t.node_kind == NodeKind::agentic) {
      // Dedup by resource_id across every source, keeping the best instance.
      std::map<std::string, Candidate> by_id;
      auto consider = [&](Candidate c) {
        if (c.manifest.status == ResourceStatus::suspended) return;
        auto it = by_id.find(c.manifest.resource_id);
        if (it == by_id.end()) {
          by_id.emplace(c.manifest.resource_id, std::move(c));
          return;
        }
        Candidate pair[2] = {it->second, c};
        it->second = *pick_best(pair);
      };
      for (const auto& so : offers) {
        auto it = so.offer.per_task.find(t.task_id);
        if (it == so.offer.per_task.end()) continue;
        for (const auto& sm : it->second) {
          consider({sm.manifest, sm.score, so.gateway_id, rating_of(so.gateway_id)});
        }
      }
      if (auto it = local_hits.find(t.task_id); it != local_hits.end()) {
        for (const auto& sm : it->second) {
          // Cached references execute through their owning gateway.
          const auto& owner = sm.manifest.owner_gateway;
          if (owner.empty() || owner == kLocalGatewayId) {
            consider({sm.manifest, sm.score, std::string(kLocalGatewayId), 1.0});
          } else {
            consider({sm.manifest, sm.score, owner, rating_of(owner)});
          }
        }
      }
      std::vector<Candidate> pool;
      for (auto& [_, c] : by_id) pool.push_back(std::move(c));
      if (auto best = pick_best(pool)) {
        node.assignment = best->manifest.resource_id;
        node.gateway_id = best->gateway_id;
        out.manifests.emplace(t.task_id, best->manifest);
      } else {
        out.unassigned.push_back(t.task_id);
      }
    }
    out.graph.nodes.push_back(std::move(node));
  }
  return out;
}

ResourceQuery replan(const TaskGraph& graph, std::span<const std::string> unassigned,
                     ReasoningProvider& provider, const std::string& context_summary,
                     const std::string& query_id, int& rounds_used) {
  if (unassigned.empty()) throw Error(ErrorCode::invalid_plan, "nothing to re-plan");
  if (rounds_used >= kReplanBudget) {
    std::string ids;
    for (const auto& id : unassigned) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::replan_budget_exhausted, "unfulfilled after " + std::to_string(kReplanBudget) + " rounds: " + ids);
  }
  ++rounds_used;
  ResourceQuery q;
  q.query_id = query_id;
  q.context_summary = context_summary;
  for (const auto& id : unassigned) {
    const auto* n = graph.find(id);
    if (!n) throw Error(ErrorCode::invalid_plan, "unknown task " + id);
    TaskSpec t = n->task;
    t.description = provider.refine_task(n->task, context_summary);
    t.depends_on.clear();  // the gateway only needs the task itself
    q.subtasks.push_back(std::move(t));
  }
  return q;
}

}  // namespace dawn::planner
