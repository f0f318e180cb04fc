#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dawn {

enum class ErrorCode {
  // registry
  duplicate_id,
  invalid_manifest,
  unknown_resource,
  reinstate_without_validation,
  // gateway
  bad_token,
  probe_failed,
  unauthenticated,
  malformed_query,
  suspended_resource,
  schema_violation,
  deadline_exceeded,
  upstream_error,
  queue_full,
  // planner
  provider_failure,
  step_budget_exceeded,
  empty_plan,
  invalid_plan,
  replan_budget_exhausted,
  // orchestrator
  invalid_graph,
  not_approved,
  no_such_gate,
  decision_conflict,
  unknown_workflow,
  corrupt_snapshot,
  unassigned_node,
  invalid_mode_transition,
  // principal
  unknown_gateway,
  no_gateways_and_no_local_match,
  // codec
  parse_error,
  // transport
  transport_error,
  guard_blocked,
  io_error,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Malformed wire input. Either `offset` (byte position of a syntax error) or
// `path` (JSON path of a structurally invalid field) is set.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::optional<std::size_t> offset, std::string path);

  const std::optional<std::size_t>& offset() const noexcept { return offset_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::optional<std::size_t> offset_;
  std::string path_;
};

}  // namespace dawn
