#pragma once

#include <string>

#include "dawn/codec.hpp"

namespace dawn {

enum class PlanAction { emit_task, request_resources, revise_plan, finish };

std::string_view to_string(PlanAction a);
std::optional<PlanAction> plan_action_from_string(std::string_view s);

/// One element of a reasoning trace.
///
/// Payloads by action:
///   emit_task          a TaskSpec object
///   request_resources  {"query": "<text>"}
///   revise_plan        {"remove": [task ids]} and/or {"add": [TaskSpec...]}
///   finish             {}
struct PlanStep {
  int step_no = 0;
  std::string thought;
  PlanAction action = PlanAction::finish;
  Json action_payload = Json::object();
  std::string observation;

  bool operator==(const PlanStep&) const = default;
};

Json to_json(const PlanStep& s);
PlanStep plan_step_from_json(const Json& j, const std::string& path);

}  // namespace dawn
