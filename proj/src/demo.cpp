#include "dawn/demo.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "dawn/log.hpp"

namespace dawn::demo {

namespace {

std::string gateway_token(const std::string& gateway_id) { return gateway_id + "-secret"; }

}  // namespace

HrCluster::HrCluster(ClusterOptions options) : options_(std::move(options)) {
  data_ = std::make_shared<const agents::HrData>(agents::load_hr_data(options_.hr_dir));

  std::map<std::string, std::string> endpoints;
  for (const auto& name : agents::kHrAgents) {
    stubs_[name] = agents::make_stub(name, data_);
    auto& server = agent_servers_.emplace_back(std::make_unique<http::AgentServer>(stubs_[name]));
    server->start(options_.host, 0);
    endpoints[name] = server->base_url() + "/invoke";
  }

  principal::Config pc;
  pc.principal_id = "principal";
  pc.user_tokens[std::string(kDemoUserToken)] = {std::string(kDemoTenant), std::string(kDemoUser)};
  for (const auto& [gw, _] : kGatewayAgents) pc.gateway_allow_list.insert(gateway_token(gw));
  pc.state_dir = options_.state_dir;
  pc.strategy = options_.strategy;
  pc.gate_policy = options_.gate_policy;
  pc.node_deadline_ms = options_.node_deadline_ms;
  pc.no_llm_bindings = {{"hiring_decision", "hr.hiring_decision"}};
  pc.policy = data_->policy;
  principal_ = std::make_unique<principal::Principal>(
      pc, std::make_shared<planner::ScriptedProvider>(planner::default_scripted_provider()));
  principal_server_ = std::make_unique<http::PrincipalServer>(*principal_);
  principal_server_->start(options_.host, options_.principal_port);

  for (const auto& [gw_id, names] : kGatewayAgents) {
    auto& gws = gateway_servers_.emplace_back();
    gateway::Config gc;
    gc.gateway_id = gw_id;
    gc.display_name = gw_id;
    gc.tokens = {gateway_token(gw_id)};
    gc.policy = data_->policy;
    if (options_.state_dir) gc.snapshot_path = *options_.state_dir / (gw_id + "-registry.json");
    auto invoker = std::make_shared<RoutingInvoker>(std::make_shared<LocalInvoker>(), std::make_shared<HttpInvoker>());
    auto gw = std::make_shared<gateway::Gateway>(gc, invoker);
    for (const auto& name : names) {
      auto id = "hr." + name;
      if (!gw->registry().get(id)) gw->registry().register_resource(agents::hr_manifest(name, endpoints[name], gw_id));
      auto report = gw->registry().validate(id, *invoker);
      if (!report.overall) log::warn("demo", id + " failed validation");
    }
    gws = std::make_unique<http::GatewayServer>(gw);
    gws->start(options_.host, 0);
    gateways_[gw_id] = gw;

    GatewayIdentity proposal;
    proposal.gateway_id = gw_id;
    proposal.display_name = gw_id;
    proposal.base_url = gws->base_url();
    proposal.auth_token = gateway_token(gw_id);
    proposal.capabilities = {ResourceKind::agent};
    http::request_connection(principal_url(), proposal);
  }

  // Behaviors apply after validation so probes do not consume error_once.
  for (const auto& [name, behavior] : options_.behaviors) stubs_.at(name)->set_behavior(behavior);
}

HrCluster::~HrCluster() {
  if (principal_server_) principal_server_->stop();
  if (principal_) principal_->quiesce();
  for (auto& s : gateway_servers_) s->stop();
  for (auto& s : agent_servers_) s->stop();
}

std::vector<std::string> HrCluster::gateway_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : gateways_) out.push_back(id);
  return out;
}

http::ApiClient HrCluster::client(std::int64_t timeout_ms) const {
  return http::ApiClient(principal_url(), std::string(kDemoUserToken), timeout_ms);
}

DemoResult run_hr_demo(HrCluster& cluster, const DemoOptions& options) {
  auto started = std::chrono::steady_clock::now();
  auto client = cluster.client();
  DemoResult out;
  Json intent = {{"text", options.intent}, {"mode", to_string(options.mode)}};
  out.workflow_id = client.submit_intent(intent).at("workflow_id").get<std::string>();
  auto record = client.status(out.workflow_id);
  if (record.at("status") == "composing") record = client.approve(out.workflow_id);

  auto deadline = started + std::chrono::milliseconds(options.timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    const auto& status = record.at("status");
    if (status == "completed" || status == "failed") break;
    const auto& gates = record.at("pending_gates");
    if (!gates.empty()) {
      if (!options.on_gate) break;
      auto task = gates.front().get<std::string>();
      record = client.gate(out.workflow_id, task, options.on_gate(record, task));
      continue;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    record = client.status(out.workflow_id);
  }
  if (record.at("status") == "completed" || record.at("status") == "failed") cluster.principal().quiesce();
  out.record = client.status(out.workflow_id);
  out.trace = client.trace(out.workflow_id);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::string format_audit(const Json& record) {
  std::ostringstream os;
  for (const auto& e : record.at("audit")) {
    os << "#" << e.value("seq", 0) << " " << e.value("kind", "");
    if (!e.value("task_id", "").empty()) os << " " << e.value("task_id", "");
    if (!e.value("from", "").empty() || !e.value("to", "").empty()) {
      os << " " << e.value("from", "") << " -> " << e.value("to", "");
    }
    if (!e.value("actor", "").empty()) os << " by " << e.value("actor", "");
    if (!e.value("detail", "").empty()) os << " (" << e.value("detail", "") << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace dawn::demo
