#include "dawn/error.hpp"

#include <array>
#include <atomic>
#include <iostream>
#include <mutex>
#include <utility>

#include "dawn/log.hpp"

namespace dawn {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 32> kNames{{
    {ErrorCode::duplicate_id, "duplicate_id"},
    {ErrorCode::invalid_manifest, "invalid_manifest"},
    {ErrorCode::unknown_resource, "unknown_resource"},
    {ErrorCode::reinstate_without_validation, "reinstate_without_validation"},
    {ErrorCode::bad_token, "bad_token"},
    {ErrorCode::probe_failed, "probe_failed"},
    {ErrorCode::unauthenticated, "unauthenticated"},
    {ErrorCode::malformed_query, "malformed_query"},
    {ErrorCode::suspended_resource, "suspended_resource"},
    {ErrorCode::schema_violation, "schema_violation"},
    {ErrorCode::deadline_exceeded, "deadline_exceeded"},
    {ErrorCode::upstream_error, "upstream_error"},
    {ErrorCode::queue_full, "queue_full"},
    {ErrorCode::provider_failure, "provider_failure"},
    {ErrorCode::step_budget_exceeded, "step_budget_exceeded"},
    {ErrorCode::empty_plan, "empty_plan"},
    {ErrorCode::invalid_plan, "invalid_plan"},
    {ErrorCode::replan_budget_exhausted, "replan_budget_exhausted"},
    {ErrorCode::invalid_graph, "invalid_graph"},
    {ErrorCode::not_approved, "not_approved"},
    {ErrorCode::no_such_gate, "no_such_gate"},
    {ErrorCode::decision_conflict, "decision_conflict"},
    {ErrorCode::unknown_workflow, "unknown_workflow"},
    {ErrorCode::corrupt_snapshot, "corrupt_snapshot"},
    {ErrorCode::unassigned_node, "unassigned_node"},
    {ErrorCode::invalid_mode_transition, "invalid_mode_transition"},
    {ErrorCode::unknown_gateway, "unknown_gateway"},
    {ErrorCode::no_gateways_and_no_local_match, "no_gateways_and_no_local_match"},
    {ErrorCode::parse_error, "parse_error"},
    {ErrorCode::transport_error, "transport_error"},
    {ErrorCode::guard_blocked, "guard_blocked"},
    {ErrorCode::io_error, "io_error"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + (message.empty() ? "" : ": " + message)),
      code_(code),
      detail_(message) {}

ParseError::ParseError(std::string message, std::optional<std::size_t> offset, std::string path)
    : Error(ErrorCode::parse_error,
            offset ? message + " at byte " + std::to_string(*offset)
                   : message + (path.empty() ? "" : " at " + path)),
      offset_(offset),
      path_(std::move(path)) {}

namespace log {

namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mu;

std::string_view tag(Level l) {
  switch (l) {
    case Level::debug: return "DEBUG";
    case Level::info: return "INFO";
    case Level::warn: return "WARN";
    case Level::error: return "ERROR";
    default: return "";
  }
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level l, std::string_view component, std::string_view message) {
  if (l < g_level.load()) return;
  std::lock_guard lock(g_mu);
  std::cerr << "[" << tag(l) << "] " << component << ": " << message << "\n";
}

}  // namespace log
}  // namespace dawn
