#include "dawn/plan_step.hpp"

namespace dawn {

std::string_view to_string(PlanAction a) {
  switch (a) {
    case PlanAction::emit_task: return "emit_task";
    case PlanAction::request_resources: return "request_resources";
    case PlanAction::revise_plan: return "revise_plan";
    case PlanAction::finish: return "finish";
  }
  return "finish";
}

std::optional<PlanAction> plan_action_from_string(std::string_view s) {
  for (auto a : {PlanAction::emit_task, PlanAction::request_resources, PlanAction::revise_plan,
                 PlanAction::finish}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

Json to_json(const PlanStep& s) {
  return {{"step_no", s.step_no},
          {"thought", s.thought},
          {"action", to_string(s.action)},
          {"action_payload", s.action_payload},
          {"observation", s.observation}};
}

PlanStep plan_step_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  PlanStep s;
  s.step_no = r.has("step_no") ? static_cast<int>(r.integer("step_no")) : 0;
  s.thought = r.has("thought") ? r.string("thought") : "";
  auto a = plan_action_from_string(r.string("action"));
  if (!a) throw_at(r.child_path("action"), "unknown plan action");
  s.action = *a;
  s.action_payload = r.has("action_payload") ? r.raw("action_payload") : Json::object();
  s.observation = r.has("observation") ? r.string("observation") : "";
  r.finish();
  return s;
}

}  // namespace dawn
