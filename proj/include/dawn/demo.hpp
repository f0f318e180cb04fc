#pragma once

// The HR hiring demo: one principal, two gateways and six agent services on
// localhost HTTP, driven through the principal's workflow API.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dawn/agents.hpp"
#include "dawn/gateway.hpp"
#include "dawn/http_services.hpp"
#include "dawn/principal.hpp"

namespace dawn::demo {

inline constexpr std::string_view kHrIntent =
    "Hire a senior ML Engineer: write the job description, search profiles, schedule interviews, "
    "collect feedback, decide and onboard the new hire.";
inline constexpr std::string_view kDemoUserToken = "demo-user-token";
inline constexpr std::string_view kDemoTenant = "acme";
inline constexpr std::string_view kDemoUser = "hr-manager";

/// Agents hosted by each gateway (3 + 3).
inline const std::map<std::string, std::vector<std::string>> kGatewayAgents = {
    {"gw-talent", {"jd_write", "profile_search", "schedule_interviews"}},
    {"gw-people", {"collect_feedback", "hiring_decision", "onboarding"}},
};

struct ClusterOptions {
  std::map<std::string, agents::StubBehavior> behaviors;  // agent name -> behavior
  std::optional<std::filesystem::path> state_dir;
  planner::Strategy strategy = planner::Strategy::react;
  orchestrator::GatePolicy gate_policy = orchestrator::GatePolicy::every_agentic;
  std::int64_t node_deadline_ms = orchestrator::kDefaultNodeDeadlineMs;
  std::filesystem::path hr_dir = agents::default_hr_dir();
  std::string host = "127.0.0.1";
  int principal_port = 0;
};

/// All demo services, started on construction and stopped on destruction.
class HrCluster {
 public:
  explicit HrCluster(ClusterOptions options = {});
  ~HrCluster();

  principal::Principal& principal() { return *principal_; }
  gateway::Gateway& gateway(const std::string& id) { return *gateways_.at(id); }
  std::vector<std::string> gateway_ids() const;
  agents::Stub& agent(const std::string& name) { return *stubs_.at(name); }
  std::string principal_url() const { return principal_server_->base_url(); }
  http::ApiClient client(std::int64_t timeout_ms = 30000) const;

 private:
  ClusterOptions options_;
  std::shared_ptr<const agents::HrData> data_;
  std::map<std::string, std::shared_ptr<agents::Stub>> stubs_;
  std::vector<std::unique_ptr<http::AgentServer>> agent_servers_;
  std::map<std::string, std::shared_ptr<gateway::Gateway>> gateways_;
  std::vector<std::unique_ptr<http::GatewayServer>> gateway_servers_;
  std::unique_ptr<principal::Principal> principal_;
  std::unique_ptr<http::PrincipalServer> principal_server_;
};

struct DemoOptions {
  OperationalMode mode = OperationalMode::llm_agent;
  std::string intent = std::string(kHrIntent);
  std::int64_t timeout_ms = 10000;
  // Copilot mode: called for each pending gate; returns the decision body
  // ({"action": ...}). Without a handler the demo returns at the first gate.
  std::function<Json(const Json& record, const std::string& task_id)> on_gate;
};

struct DemoResult {
  std::string workflow_id;
  Json record;  // final WorkflowRecord view
  Json trace;
  double wall_ms = 0;
};

/// Submits the HR intent over HTTP, approves the composed graph and waits
/// for completion (or for a gate, in copilot mode without a handler).
DemoResult run_hr_demo(HrCluster& cluster, const DemoOptions& options = {});

/// One line per audit event.
std::string format_audit(const Json& record);

}  // namespace dawn::demo
