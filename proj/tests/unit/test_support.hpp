#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dawn/agents.hpp"
#include "dawn/gateway.hpp"
#include "dawn/orchestrator.hpp"
#include "dawn/protocol.hpp"

namespace dawn::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dawn-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Clock that only moves when told to.
class ManualClock {
 public:
  explicit ManualClock(Timestamp start = 1'700'000'000'000) : now_(std::make_shared<std::atomic<Timestamp>>(start)) {}
  Clock clock() const {
    auto n = now_;
    return [n] { return n->load(); };
  }
  void advance(Timestamp ms) { *now_ += ms; }
  Timestamp now() const { return *now_; }

 private:
  std::shared_ptr<std::atomic<Timestamp>> now_;
};

inline FieldSpec field(std::string name, ScalarType t, bool required = true,
                       std::optional<Scalar> example = std::nullopt) {
  return FieldSpec{std::move(name), t, required, std::move(example)};
}

/// A valid manifest served at local://<id>, echoing its "text" input.
inline ResourceManifest text_manifest(const std::string& id, const std::string& description,
                                      const std::string& owner = "gw") {
  ResourceManifest m;
  m.resource_id = id;
  m.kind = ResourceKind::tool;
  m.name = id;
  m.description = description;
  m.usage_examples = {description};
  m.endpoint = "local://" + id;
  m.input_schema = {field("text", ScalarType::string, true, std::string("hello"))};
  m.output_schema = {field("text", ScalarType::string)};
  m.owner_gateway = owner;
  return m;
}

/// Handler that answers {"text": "<id>:<input text>"}.
inline ResourceHandler text_handler(const std::string& id) {
  return [id](const ExecutionCommand& c) {
    auto it = c.inputs.find("text");
    std::string in = it == c.inputs.end() ? "" : render(it->second);
    return ExecutionResult::success(c.command_id, {{"text", id + ":" + in}}, 1);
  };
}

struct TestGateway {
  std::shared_ptr<gateway::Gateway> gw;
  std::shared_ptr<LocalInvoker> local;
  std::string token;
};

/// In-process gateway whose resources are local:// text handlers. Each
/// manifest is registered, bound and validated.
inline TestGateway make_gateway(const std::string& id, const std::vector<ResourceManifest>& manifests,
                                Clock clock = system_clock()) {
  TestGateway t;
  t.local = std::make_shared<LocalInvoker>();
  t.token = id + "-token";
  gateway::Config c;
  c.gateway_id = id;
  c.display_name = id;
  c.base_url = "http://127.0.0.1:1/" + id;
  c.tokens = {t.token};
  c.clock = std::move(clock);
  t.gw = std::make_shared<gateway::Gateway>(c, t.local);
  for (auto m : manifests) {
    m.owner_gateway = id;
    t.local->bind(m.endpoint, text_handler(m.resource_id));
    t.gw->registry().register_resource(m);
    t.gw->registry().validate(m.resource_id, *t.local);
  }
  return t;
}

/// Random DAG of 1..max_nodes tasks, ids n0..n{k-1}; edges only point back.
inline std::vector<TaskSpec> random_dag(std::mt19937_64& rng, int max_nodes, double edge_p = 0.35) {
  int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
  std::bernoulli_distribution edge(edge_p);
  std::vector<TaskSpec> out;
  for (int i = 0; i < n; ++i) {
    TaskSpec t;
    t.task_id = "n" + std::to_string(i);
    t.description = "step " + std::to_string(i);
    for (int j = 0; j < i; ++j) {
      if (edge(rng)) t.depends_on.push_back("n" + std::to_string(j));
    }
    out.push_back(std::move(t));
  }
  // Shuffle the listing order so the orchestrator cannot rely on it.
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// A no-LLM workflow over `tasks`, each assigned to a text resource "r.<task>".
inline orchestrator::WorkflowRecord text_workflow(const std::string& workflow_id, const std::vector<TaskSpec>& tasks,
                                                  OperationalMode mode = OperationalMode::no_llm) {
  orchestrator::WorkflowRecord r;
  r.workflow_id = workflow_id;
  r.tenant_id = "t";
  r.user_id = "u";
  r.intent.intent_id = workflow_id;
  r.intent.text = "test workflow";
  r.intent.mode = mode;
  r.graph.graph_id = workflow_id + "/graph";
  r.graph.mode = mode;
  for (const auto& t : tasks) {
    GraphNode n;
    n.task = t;
    n.assignment = "r." + t.task_id;
    n.gateway_id = "gw";
    r.graph.nodes.push_back(n);
    r.manifests[t.task_id] = text_manifest("r." + t.task_id, "text resource for " + t.task_id);
  }
  return r;
}

/// Deterministic executor: output text is the task id joined with the input.
inline ExecutionResult deterministic_exec(const orchestrator::Dispatch& d) {
  auto it = d.command.inputs.find("text");
  std::string in = it == d.command.inputs.end() ? "" : render(it->second);
  return ExecutionResult::success(d.command.command_id, {{"text", d.task_id + "(" + in + ")"}}, 1);
}

}  // namespace dawn::testing
