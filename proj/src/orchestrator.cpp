#include "dawn/orchestrator.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "dawn/log.hpp"
#include "dawn/registry.hpp"

namespace dawn::orchestrator {

std::string_view to_string(WorkflowStatus s) {
  switch (s) {
    case WorkflowStatus::composing: return "composing";
    case WorkflowStatus::running: return "running";
    case WorkflowStatus::awaiting_human: return "awaiting_human";
    case WorkflowStatus::failed: return "failed";
    case WorkflowStatus::completed: return "completed";
  }
  return "composing";
}

std::optional<WorkflowStatus> workflow_status_from_string(std::string_view s) {
  for (auto v : {WorkflowStatus::composing, WorkflowStatus::running, WorkflowStatus::awaiting_human,
                 WorkflowStatus::failed, WorkflowStatus::completed}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(GatePolicy p) {
  return p == GatePolicy::every_agentic ? "every_agentic" : "marked_only";
}

std::optional<GatePolicy> gate_policy_from_string(std::string_view s) {
  if (s == "every_agentic") return GatePolicy::every_agentic;
  if (s == "marked_only") return GatePolicy::marked_only;
  return std::nullopt;
}

std::string_view to_string(GateAction a) {
  switch (a) {
    case GateAction::approve: return "approve";
    case GateAction::reject: return "reject";
    case GateAction::edit: return "edit";
  }
  return "approve";
}

std::optional<GateAction> gate_action_from_string(std::string_view s) {
  for (auto v : {GateAction::approve, GateAction::reject, GateAction::edit}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const AuditEvent& e) {
  Json j = {{"seq", e.seq}, {"at", e.at}, {"kind", e.kind}};
  if (!e.task_id.empty()) j["task_id"] = e.task_id;
  if (!e.from.empty()) j["from"] = e.from;
  if (!e.to.empty()) j["to"] = e.to;
  if (!e.actor.empty()) j["actor"] = e.actor;
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

AuditEvent audit_event_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  AuditEvent e;
  e.seq = static_cast<std::uint64_t>(r.integer("seq"));
  e.at = r.integer("at");
  e.kind = r.string("kind");
  e.task_id = r.opt_string("task_id").value_or("");
  e.from = r.opt_string("from").value_or("");
  e.to = r.opt_string("to").value_or("");
  e.actor = r.opt_string("actor").value_or("");
  e.detail = r.opt_string("detail").value_or("");
  r.finish();
  return e;
}

namespace {

Json to_json(const NodeRuntime& n) {
  return {{"attempt", n.attempt}, {"retried", n.retried}, {"tried", n.tried}};
}

NodeRuntime runtime_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  NodeRuntime n;
  n.attempt = static_cast<int>(r.integer("attempt"));
  n.retried = r.boolean("retried");
  n.tried = r.strings("tried");
  r.finish();
  return n;
}

template <class T, class F>
std::map<std::string, T> map_from_json(const Json& j, const std::string& path, F&& f) {
  if (!j.is_object()) throw_at(path, "expected object");
  std::map<std::string, T> out;
  for (const auto& [k, v] : j.items()) out.emplace(k, f(v, path + "." + k));
  return out;
}

}  // namespace

Json to_json(const WorkflowRecord& r) {
  Json outputs = Json::object();
  for (const auto& [k, v] : r.node_outputs) outputs[k] = body_to_json(v);
  Json audit = Json::array();
  for (const auto& e : r.audit) audit.push_back(to_json(e));
  Json manifests = Json::object();
  for (const auto& [k, v] : r.manifests) manifests[k] = body_to_json(v);
  Json runtime = Json::object();
  for (const auto& [k, v] : r.runtime) runtime[k] = to_json(v);
  Json overrides = Json::object();
  for (const auto& [k, v] : r.overrides) overrides[k] = dawn::to_json(v);
  return {{"type", "workflow_record"},
          {"v", kWireVersion},
          {"workflow_id", r.workflow_id},
          {"tenant_id", r.tenant_id},
          {"user_id", r.user_id},
          {"intent", planner::to_json(r.intent)},
          {"graph", dawn::to_json(r.graph)},
          {"node_outputs", outputs},
          {"pending_gates", r.pending_gates},
          {"audit", audit},
          {"status", to_string(r.status)},
          {"created_at", r.created_at},
          {"updated_at", r.updated_at},
          {"approved", r.approved},
          {"paused", r.paused},
          {"gate_policy", to_string(r.gate_policy)},
          {"manifests", manifests},
          {"runtime", runtime},
          {"in_flight", r.in_flight},
          {"overrides", overrides},
          {"decided_gates", r.decided_gates},
          {"approved_gates", r.approved_gates},
          {"replan_rounds", r.replan_rounds},
          {"unfulfilled", r.unfulfilled},
          {"failure_reason", r.failure_reason}};
}

WorkflowRecord workflow_record_from_json(const Json& j) {
  JsonReader r(j, "$");
  if (r.string("type") != "workflow_record") throw_at("$.type", "expected workflow_record");
  if (r.integer("v") != kWireVersion) throw_at("$.v", "unsupported version");
  WorkflowRecord w;
  w.workflow_id = r.string("workflow_id");
  w.tenant_id = r.string("tenant_id");
  w.user_id = r.string("user_id");
  w.intent = planner::intent_from_json(r.object("intent"), "$.intent");
  w.graph = graph_from_json(r.object("graph"), "$.graph");
  w.node_outputs = map_from_json<ExecutionResult>(r.object("node_outputs"), "$.node_outputs", result_from_json);
  w.pending_gates = r.strings("pending_gates");
  const auto& audit = r.array("audit");
  for (std::size_t i = 0; i < audit.size(); ++i) {
    w.audit.push_back(audit_event_from_json(audit[i], "$.audit[" + std::to_string(i) + "]"));
  }
  auto status = workflow_status_from_string(r.string("status"));
  if (!status) throw_at("$.status", "unknown status");
  w.status = *status;
  w.created_at = r.integer("created_at");
  w.updated_at = r.integer("updated_at");
  w.approved = r.boolean("approved");
  w.paused = r.boolean("paused");
  auto policy = r.string("gate_policy");
  if (policy != "every_agentic" && policy != "marked_only") throw_at("$.gate_policy", "unknown policy");
  w.gate_policy = policy == "every_agentic" ? GatePolicy::every_agentic : GatePolicy::marked_only;
  w.manifests = map_from_json<ResourceManifest>(r.object("manifests"), "$.manifests", manifest_from_json);
  w.runtime = map_from_json<NodeRuntime>(r.object("runtime"), "$.runtime", runtime_from_json);
  w.in_flight = map_from_json<std::string>(r.object("in_flight"), "$.in_flight",
                                           [](const Json& v, const std::string& p) {
                                             if (!v.is_string()) throw_at(p, "expected string");
                                             return v.get<std::string>();
                                           });
  w.overrides = map_from_json<ValueMap>(r.object("overrides"), "$.overrides", value_map_from_json);
  for (auto& s : r.strings("decided_gates")) w.decided_gates.insert(std::move(s));
  for (auto& s : r.strings("approved_gates")) w.approved_gates.insert(std::move(s));
  w.replan_rounds = static_cast<int>(r.integer("replan_rounds"));
  w.unfulfilled = r.strings("unfulfilled");
  w.failure_reason = r.string("failure_reason");
  r.finish();
  return w;
}

std::string export_audit(const WorkflowRecord& r) {
  std::string out;
  for (const auto& e : r.audit) {
    Json j = to_json(e);
    j["workflow_id"] = r.workflow_id;
    out += j.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// WorkflowStore

WorkflowStore::WorkflowStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void WorkflowStore::save(const WorkflowRecord& r) const {
  registry::write_file_atomic(dir_ / (r.workflow_id + ".json"), to_json(r).dump());
}

bool WorkflowStore::exists(const std::string& workflow_id) const {
  return std::filesystem::exists(dir_ / (workflow_id + ".json"));
}

WorkflowRecord WorkflowStore::load(const std::string& workflow_id) const {
  auto file = dir_ / (workflow_id + ".json");
  if (!std::filesystem::exists(file)) throw Error(ErrorCode::unknown_workflow, workflow_id);
  try {
    auto rec = workflow_record_from_json(parse_json(registry::read_file(file)));
    if (rec.workflow_id != workflow_id) throw Error(ErrorCode::corrupt_snapshot, "workflow id mismatch");
    return rec;
  } catch (const ParseError& e) {
    throw Error(ErrorCode::corrupt_snapshot, file.string() + ": " + e.detail());
  }
}

std::vector<std::string> WorkflowStore::list() const {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Orchestrator

namespace {

std::optional<Scalar> coerce(const Scalar& v, ScalarType t) {
  if (scalar_type_of(v) == t) return v;
  if (t == ScalarType::string) return render(v);
  if (t == ScalarType::floating) {
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  }
  const auto* s = std::get_if<std::string>(&v);
  if (!s) return std::nullopt;
  if (t == ScalarType::integer) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), out);
    if (ec == std::errc() && p == s->data() + s->size()) return out;
    return std::nullopt;
  }
  if (t == ScalarType::floating) {
    try {
      std::size_t used = 0;
      double d = std::stod(*s, &used);
      if (used == s->size()) return d;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  if (*s == "true") return true;
  if (*s == "false") return false;
  return std::nullopt;
}

std::string summarize(const ExecutionResult& r) {
  std::string out;
  if (r.payload) {
    for (const auto& [k, v] : *r.payload) {
      if (!out.empty()) out += ", ";
      auto text = render(v);
      if (text.size() > 80) text = text.substr(0, 80) + "...";
      out += k + "=" + text;
    }
  }
  return out;
}

bool preds_succeeded(const TaskGraph& g, const GraphNode& n) {
  for (const auto& d : n.task.depends_on) {
    const auto* p = g.find(d);
    if (!p || p->status != NodeStatus::succeeded) return false;
  }
  return true;
}

void validate_graph(const WorkflowRecord& r) {
  auto tasks = r.graph.tasks();
  if (tasks.empty()) throw Error(ErrorCode::invalid_graph, "graph has no nodes");
  auto violations = validate_task_list(tasks);
  if (!violations.empty()) throw Error(ErrorCode::invalid_graph, violations.front());
  auto dag = check_dag(tasks);
  if (!dag.ok) {
    std::string w;
    for (const auto& id : dag.cycle) w += (w.empty() ? "" : " -> ") + id;
    throw Error(ErrorCode::invalid_graph, "cycle: " + w);
  }
  if (r.workflow_id.empty() || r.workflow_id.find('/') != std::string::npos) {
    throw Error(ErrorCode::invalid_graph, "workflow id must be non-empty and contain no '/'");
  }
}

}  // namespace

Orchestrator::Orchestrator(Options options) : options_(std::move(options)) {
  if (options_.store_dir) store_.emplace(*options_.store_dir);
}

void Orchestrator::set_listener(AuditListener listener) {
  std::lock_guard lk(listener_mu_);
  listener_ = std::move(listener);
}

std::shared_ptr<Orchestrator::Slot> Orchestrator::slot(const std::string& workflow_id) const {
  std::lock_guard lk(mu_);
  auto it = slots_.find(workflow_id);
  if (it == slots_.end()) throw Error(ErrorCode::unknown_workflow, workflow_id);
  return it->second;
}

std::shared_ptr<Orchestrator::Slot> Orchestrator::install(WorkflowRecord record) {
  auto s = std::make_shared<Slot>();
  auto id = record.workflow_id;
  s->record = std::move(record);
  std::lock_guard lk(mu_);
  slots_[id] = s;
  return s;
}

bool Orchestrator::has(const std::string& workflow_id) const {
  std::lock_guard lk(mu_);
  return slots_.count(workflow_id) > 0;
}

std::vector<std::string> Orchestrator::workflows() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [k, _] : slots_) out.push_back(k);
  return out;
}

WorkflowRecord Orchestrator::get(const std::string& workflow_id) const {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  return s->record;
}

void Orchestrator::audit(WorkflowRecord& r, AuditEvent e) {
  Timestamp at = options_.clock();
  if (!r.audit.empty()) at = std::max(at, r.audit.back().at);
  e.seq = r.audit.empty() ? 1 : r.audit.back().seq + 1;
  e.at = at;
  r.updated_at = at;
  r.audit.push_back(e);
  AuditListener l;
  {
    std::lock_guard lk(listener_mu_);
    l = listener_;
  }
  if (l) l(r, r.audit.back());
}

void Orchestrator::transition(WorkflowRecord& r, GraphNode& node, NodeStatus to, const std::string& detail) {
  if (node.status == to) return;
  audit(r, {0, 0, "node", node.task.task_id, std::string(to_string(node.status)), std::string(to_string(to)), "", detail});
  node.status = to;
}

void Orchestrator::set_status(WorkflowRecord& r, WorkflowStatus to, const std::string& detail) {
  if (r.status == to) return;
  audit(r, {0, 0, "workflow", "", std::string(to_string(r.status)), std::string(to_string(to)), "", detail});
  r.status = to;
}

void Orchestrator::refresh_status(WorkflowRecord& r) {
  if (r.terminal() || r.status == WorkflowStatus::composing) return;
  bool all_done = std::all_of(r.graph.nodes.begin(), r.graph.nodes.end(), [](const GraphNode& n) {
    return n.status == NodeStatus::succeeded || n.status == NodeStatus::skipped;
  });
  if (all_done) {
    set_status(r, WorkflowStatus::completed);
    return;
  }
  set_status(r, r.pending_gates.empty() ? WorkflowStatus::running : WorkflowStatus::awaiting_human);
}

void Orchestrator::persist(WorkflowRecord& r) {
  if (store_) store_->save(r);
}

ValueMap Orchestrator::bind_inputs(const WorkflowRecord& r, const GraphNode& node) const {
  ValueMap out;
  auto mit = r.manifests.find(node.task.task_id);
  if (mit != r.manifests.end()) {
    for (const auto& f : mit->second.input_schema) {
      std::optional<Scalar> v;
      if (f.example) v = f.example;
      for (const auto& dep : node.task.depends_on) {
        auto o = r.node_outputs.find(dep);
        if (o == r.node_outputs.end() || !o->second.payload) continue;
        auto p = o->second.payload->find(f.name);
        if (p == o->second.payload->end()) continue;
        if (auto c = coerce(p->second, f.type)) v = c;
      }
      if (auto p = r.intent.preferences.find(f.name); p != r.intent.preferences.end()) {
        if (auto c = coerce(Scalar(p->second), f.type)) v = c;
      }
      if (!v && f.required) v = sample_inputs({f}).begin()->second;
      if (v) out[f.name] = *v;
    }
  }
  if (auto o = r.overrides.find(node.task.task_id); o != r.overrides.end()) {
    for (const auto& [k, v] : o->second) out[k] = v;
  }
  return out;
}

Dispatch Orchestrator::dispatch(WorkflowRecord& r, GraphNode& node) {
  auto& rt = r.runtime[node.task.task_id];
  ++rt.attempt;
  ExecutionCommand cmd;
  cmd.command_id = make_command_id(r.workflow_id, node.task.task_id, rt.attempt);
  cmd.resource_id = node.assignment.value_or("");
  if (auto m = r.manifests.find(node.task.task_id); m != r.manifests.end()) cmd.endpoint = m->second.endpoint;
  cmd.inputs = bind_inputs(r, node);
  cmd.deadline_ms = options_.node_deadline_ms;
  r.in_flight[cmd.command_id] = node.task.task_id;
  transition(r, node, NodeStatus::running);
  return {r.workflow_id, node.task.task_id, node.gateway_id.value_or(""), std::move(cmd)};
}

void Orchestrator::complete_locally(WorkflowRecord& r, GraphNode& node, const std::string& actor) {
  transition(r, node, NodeStatus::running);
  ValueMap payload;
  for (const auto& dep : node.task.depends_on) {
    auto o = r.node_outputs.find(dep);
    if (o == r.node_outputs.end() || !o->second.payload) continue;
    for (const auto& [k, v] : *o->second.payload) payload[k] = v;
  }
  if (node.task.node_kind == NodeKind::human_gate) payload["approved_by"] = actor;
  auto result = ExecutionResult::success(make_command_id(r.workflow_id, node.task.task_id, 0), payload, 0);
  r.node_outputs[node.task.task_id] = result;
  transition(r, node, NodeStatus::succeeded, "completed locally");
  if (options_.context && options_.context->has_workflow(r.workflow_id)) {
    options_.context->record_completed(r.workflow_id, node.task.task_id, summarize(result));
  }
}

std::vector<Dispatch> Orchestrator::pump(WorkflowRecord& r) {
  std::vector<Dispatch> out;
  if (r.paused || r.terminal() || r.status == WorkflowStatus::composing) return out;
  bool copilot = r.graph.mode == OperationalMode::copilot;
  bool changed = true;
  while (changed && !r.terminal()) {
    changed = false;
    int running = static_cast<int>(std::count_if(r.graph.nodes.begin(), r.graph.nodes.end(),
                                                 [](const GraphNode& n) { return n.status == NodeStatus::running; }));
    for (auto& node : r.graph.nodes) {
      const auto& id = node.task.task_id;
      if (node.status == NodeStatus::awaiting_approval && r.approved_gates.count(id)) {
        if (running >= options_.max_parallel) continue;
        r.approved_gates.erase(id);
        out.push_back(dispatch(r, node));
        ++running;
        continue;
      }
      if (node.status != NodeStatus::pending || !preds_succeeded(r.graph, node)) continue;
      bool gated = node.task.node_kind == NodeKind::human_gate ||
                   (copilot && node.task.node_kind == NodeKind::agentic &&
                    (r.gate_policy == GatePolicy::every_agentic || node.gated));
      if (gated && !r.decided_gates.count(id)) {
        transition(r, node, NodeStatus::awaiting_approval);
        r.pending_gates.push_back(id);
        continue;
      }
      if (!node.assignment) {
        complete_locally(r, node, "");
        changed = true;
        continue;
      }
      if (running >= options_.max_parallel) continue;
      out.push_back(dispatch(r, node));
      ++running;
    }
  }
  refresh_status(r);
  return out;
}

void Orchestrator::handle_failure(WorkflowRecord& r, GraphNode& node, const ExecutionResult& result,
                                  std::vector<Dispatch>& out) {
  const auto& id = node.task.task_id;
  auto& rt = r.runtime[id];
  auto code = error_code_of(result).value_or("");
  auto message = result.error_message.value_or("");
  bool retryable = code != to_string(ErrorCode::guard_blocked);
  auto hold = [&](Dispatch d) {
    // A paused workflow keeps the command in flight; resume re-emits it.
    if (!r.paused) out.push_back(std::move(d));
  };

  if (retryable && !rt.retried) {
    rt.retried = true;
    audit(r, {0, 0, "retry", id, node.assignment.value_or(""), node.assignment.value_or(""), "", message});
    hold(dispatch(r, node));
    return;
  }
  if (node.assignment) rt.tried.push_back(*node.assignment);

  if (options_.find_substitute && r.replan_rounds < planner::kReplanBudget) {
    ++r.replan_rounds;
    std::optional<Substitute> sub;
    try {
      sub = options_.find_substitute(r, node.task, rt.tried);
    } catch (const std::exception& e) {
      log::warn("orchestrator", std::string("substitute search failed: ") + e.what());
    }
    if (sub && std::find(rt.tried.begin(), rt.tried.end(), sub->manifest.resource_id) == rt.tried.end()) {
      audit(r, {0, 0, "recovery", id, node.assignment.value_or(""), sub->manifest.resource_id, "",
                "substitute from " + sub->gateway_id + " after: " + message});
      node.assignment = sub->manifest.resource_id;
      node.gateway_id = sub->gateway_id;
      r.manifests[id] = sub->manifest;
      rt.retried = false;
      hold(dispatch(r, node));
      return;
    }
  }

  r.node_outputs[id] = result;
  transition(r, node, NodeStatus::failed, message);
  r.unfulfilled.push_back(id);
  r.failure_reason = "task " + id + " failed: " + message;
  audit(r, {0, 0, "unfulfilled", id, "", "", "", r.failure_reason});
  set_status(r, WorkflowStatus::failed, r.failure_reason);
}

Step Orchestrator::start_locked(WorkflowRecord& r) {
  validate_graph(r);
  for (const auto& n : r.graph.nodes) {
    if (n.task.node_kind != NodeKind::agentic) continue;
    if (!n.assignment || !r.manifests.count(n.task.task_id)) {
      throw Error(ErrorCode::invalid_graph, "agentic node " + n.task.task_id + " is unassigned");
    }
  }
  if (r.graph.mode != OperationalMode::no_llm && !r.approved) {
    throw Error(ErrorCode::not_approved, "graph " + r.graph.graph_id + " awaits user approval");
  }
  if (r.status != WorkflowStatus::composing) {
    throw Error(ErrorCode::invalid_graph, "workflow " + r.workflow_id + " already started");
  }
  if (r.created_at == 0) r.created_at = options_.clock();
  set_status(r, WorkflowStatus::running);
  auto out = pump(r);
  persist(r);
  return {r, std::move(out)};
}

WorkflowRecord Orchestrator::put(WorkflowRecord record) {
  if (record.created_at == 0) record.created_at = options_.clock();
  record.updated_at = std::max(record.updated_at, record.created_at);
  record.status = WorkflowStatus::composing;
  auto s = install(std::move(record));
  std::lock_guard lk(s->mu);
  persist(s->record);
  return s->record;
}

WorkflowRecord Orchestrator::approve_graph(const std::string& workflow_id, const std::string& actor) {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  if (r.status != WorkflowStatus::composing) throw Error(ErrorCode::invalid_graph, "graph already approved");
  if (!r.approved) {
    r.approved = true;
    audit(r, {0, 0, "gate", "", "", "graph_approved", actor, r.graph.graph_id});
    persist(r);
  }
  return r;
}

Step Orchestrator::start(WorkflowRecord record) {
  if (has(record.workflow_id)) {
    auto cur = get(record.workflow_id);
    if (cur.status != WorkflowStatus::composing) {
      throw Error(ErrorCode::invalid_graph, "workflow " + record.workflow_id + " already started");
    }
  }
  record.status = WorkflowStatus::composing;
  auto s = install(std::move(record));
  std::lock_guard lk(s->mu);
  return start_locked(s->record);
}

Step Orchestrator::start(const std::string& workflow_id) {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  return start_locked(s->record);
}

Step Orchestrator::run_no_llm(WorkflowRecord record) {
  for (const auto& n : record.graph.nodes) {
    if (n.task.node_kind == NodeKind::agentic && (!n.assignment || !record.manifests.count(n.task.task_id))) {
      throw Error(ErrorCode::unassigned_node, n.task.task_id);
    }
  }
  record.graph.mode = OperationalMode::no_llm;
  record.intent.mode = OperationalMode::no_llm;
  record.approved = true;
  return start(std::move(record));
}

Step Orchestrator::on_result(const std::string& workflow_id, const std::string& command_id, ExecutionResult result) {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  auto it = r.in_flight.find(command_id);
  if (it == r.in_flight.end()) {
    log::warn("orchestrator", "stale result " + command_id + " ignored");
    return {r, {}};
  }
  auto task = it->second;
  r.in_flight.erase(it);
  auto* node = r.graph.find(task);
  if (!node || node->status != NodeStatus::running) {
    log::warn("orchestrator", "result for non-running task " + task + " ignored");
    persist(r);
    return {r, {}};
  }
  // A re-emitted command may still have a twin in flight; drop it.
  std::erase_if(r.in_flight, [&](const auto& kv) { return kv.second == task; });

  std::vector<Dispatch> out;
  if (result.ok()) {
    r.node_outputs[task] = result;
    transition(r, *node, NodeStatus::succeeded);
    if (options_.context && options_.context->has_workflow(r.workflow_id)) {
      options_.context->record_completed(r.workflow_id, task, summarize(result));
    }
  } else {
    handle_failure(r, *node, result, out);
  }
  auto more = pump(r);
  out.insert(out.end(), more.begin(), more.end());
  persist(r);
  return {r, std::move(out)};
}

Step Orchestrator::decide_gate(const GateDecision& d) {
  auto s = slot(d.workflow_id);
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  if (r.decided_gates.count(d.task_id)) {
    throw Error(ErrorCode::decision_conflict, "gate " + d.task_id + " already decided");
  }
  auto pg = std::find(r.pending_gates.begin(), r.pending_gates.end(), d.task_id);
  if (pg == r.pending_gates.end()) throw Error(ErrorCode::no_such_gate, d.task_id);
  auto* node = r.graph.find(d.task_id);
  if (!node) throw Error(ErrorCode::no_such_gate, d.task_id);
  r.pending_gates.erase(pg);
  r.decided_gates.insert(d.task_id);
  audit(r, {0, 0, "gate", d.task_id, "pending", std::string(to_string(d.action)), d.actor, d.note});

  switch (d.action) {
    case GateAction::edit: {
      std::string rendered;
      for (const auto& [k, v] : d.inputs) rendered += (rendered.empty() ? "" : ", ") + k + "=" + render(v);
      auto& o = r.overrides[d.task_id];
      for (const auto& [k, v] : d.inputs) o[k] = v;
      audit(r, {0, 0, "override", d.task_id, "", "", d.actor, rendered});
      [[fallthrough]];
    }
    case GateAction::approve:
      if (node->task.node_kind == NodeKind::human_gate) {
        complete_locally(r, *node, d.actor);
      } else {
        r.approved_gates.insert(d.task_id);
      }
      break;
    case GateAction::reject: {
      auto reason = "rejected by " + d.actor + (d.note.empty() ? "" : ": " + d.note);
      transition(r, *node, NodeStatus::failed, reason);
      r.failure_reason = "task " + d.task_id + " " + reason;
      set_status(r, WorkflowStatus::failed, r.failure_reason);
      break;
    }
  }
  auto out = pump(r);
  refresh_status(r);
  persist(r);
  return {r, std::move(out)};
}

Step Orchestrator::pause(const std::string& workflow_id) {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  if (r.paused || r.terminal() || r.status == WorkflowStatus::composing) return {r, {}};
  r.paused = true;
  audit(r, {0, 0, "pause", "", std::string(to_string(r.status)), "paused", "", ""});
  persist(r);
  return {r, {}};
}

Step Orchestrator::resume(const std::string& workflow_id) {
  std::shared_ptr<Slot> live;
  {
    std::lock_guard lk(mu_);
    if (auto it = slots_.find(workflow_id); it != slots_.end()) live = it->second;
  }
  if (live) {
    std::lock_guard lk(live->mu);
    if (!live->record.paused || live->record.terminal()) return {live->record, {}};
  }
  WorkflowRecord rec;
  if (store_) {
    rec = store_->load(workflow_id);
  } else if (live) {
    std::lock_guard lk(live->mu);
    rec = live->record;
  } else {
    throw Error(ErrorCode::unknown_workflow, workflow_id);
  }
  auto s = install(std::move(rec));
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  if (r.terminal() || r.status == WorkflowStatus::composing) return {r, {}};

  std::string detail;
  if (options_.context && options_.context->has_workflow(r.workflow_id)) {
    std::vector<std::pair<std::string, std::string>> pending;
    for (const auto& n : r.graph.nodes) {
      if (n.status != NodeStatus::succeeded) pending.emplace_back(n.task.task_id, n.task.description);
    }
    options_.context->set_pending(r.workflow_id, pending);
    auto ctx = options_.context->assemble_context(r.workflow_id, context::Purpose::resume);
    for (const auto& c : ctx.citations) detail += (detail.empty() ? "" : " ") + c;
  }
  r.paused = false;
  audit(r, {0, 0, "resume", "", "paused", std::string(to_string(r.status)), "", detail});

  std::vector<Dispatch> out;
  for (const auto& [command_id, task] : r.in_flight) {
    auto* node = r.graph.find(task);
    if (!node || node->status != NodeStatus::running) continue;
    ExecutionCommand cmd;
    cmd.command_id = command_id;
    cmd.resource_id = node->assignment.value_or("");
    if (auto m = r.manifests.find(task); m != r.manifests.end()) cmd.endpoint = m->second.endpoint;
    cmd.inputs = bind_inputs(r, *node);
    cmd.deadline_ms = options_.node_deadline_ms;
    out.push_back({r.workflow_id, task, node->gateway_id.value_or(""), std::move(cmd)});
  }
  auto more = pump(r);
  out.insert(out.end(), more.begin(), more.end());
  persist(r);
  return {r, std::move(out)};
}

WorkflowRecord Orchestrator::fail(const std::string& workflow_id, const std::string& reason,
                                  std::vector<std::string> unfulfilled) {
  auto s = slot(workflow_id);
  std::lock_guard lk(s->mu);
  auto& r = s->record;
  if (r.terminal()) return r;
  r.failure_reason = reason;
  for (auto& u : unfulfilled) {
    audit(r, {0, 0, "unfulfilled", u, "", "", "", reason});
    r.unfulfilled.push_back(std::move(u));
  }
  set_status(r, WorkflowStatus::failed, reason);
  persist(r);
  return r;
}

// ---------------------------------------------------------------------------

DriveResult drive(Orchestrator& orch, Step step, const Executor& exec, const DriveOptions& opts) {
  std::vector<Dispatch> queue = std::move(step.dispatches);
  WorkflowRecord rec = std::move(step.record);
  while (!queue.empty()) {
    std::size_t pick = 0;
    if (opts.rng) pick = std::uniform_int_distribution<std::size_t>(0, queue.size() - 1)(*opts.rng);
    if (opts.before && !opts.before(queue[pick])) break;
    Dispatch d = std::move(queue[pick]);
    queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(pick));
    auto result = exec(d);
    result.command_id = d.command.command_id;
    auto next = orch.on_result(d.workflow_id, d.command.command_id, std::move(result));
    rec = std::move(next.record);
    queue.insert(queue.end(), next.dispatches.begin(), next.dispatches.end());
  }
  return {std::move(rec), std::move(queue)};
}

}  // namespace dawn::orchestrator
