#include "dawn/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dawn/error.hpp"

namespace dawn {

Timestamp now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Clock system_clock() { return [] { return now_ms(); }; }

// ---------------------------------------------------------------------------

ScalarType scalar_type_of(const Scalar& v) {
  switch (v.index()) {
    case 0: return ScalarType::string;
    case 1: return ScalarType::integer;
    case 2: return ScalarType::floating;
    default: return ScalarType::boolean;
  }
}

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::string: return "string";
    case ScalarType::integer: return "int";
    case ScalarType::floating: return "float";
    case ScalarType::boolean: return "bool";
  }
  return "string";
}

std::optional<ScalarType> scalar_type_from_string(std::string_view s) {
  if (s == "string") return ScalarType::string;
  if (s == "int") return ScalarType::integer;
  if (s == "float") return ScalarType::floating;
  if (s == "bool") return ScalarType::boolean;
  return std::nullopt;
}

std::string render(const Scalar& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os << x;
          return os.str();
        } else {
          return std::to_string(x);
        }
      },
      v);
}

std::vector<std::string> validate_values(const Schema& schema, const ValueMap& values) {
  std::vector<std::string> out;
  for (const auto& f : schema) {
    auto it = values.find(f.name);
    if (it == values.end()) {
      if (f.required) out.push_back("missing required field: " + f.name);
      continue;
    }
    auto actual = scalar_type_of(it->second);
    bool ok = actual == f.type || (f.type == ScalarType::floating && actual == ScalarType::integer);
    if (!ok) {
      out.push_back("field " + f.name + " expected " + std::string(to_string(f.type)) + " got " +
                    std::string(to_string(actual)));
    }
  }
  for (const auto& [name, _] : values) {
    bool declared = std::any_of(schema.begin(), schema.end(),
                                [&](const FieldSpec& f) { return f.name == name; });
    if (!declared) out.push_back("undeclared field: " + name);
  }
  return out;
}

ValueMap sample_inputs(const Schema& schema) {
  ValueMap out;
  for (const auto& f : schema) {
    if (!f.required && !f.example) continue;
    if (f.example) {
      out[f.name] = *f.example;
      continue;
    }
    switch (f.type) {
      case ScalarType::string: out[f.name] = std::string("sample"); break;
      case ScalarType::integer: out[f.name] = std::int64_t{1}; break;
      case ScalarType::floating: out[f.name] = 1.0; break;
      case ScalarType::boolean: out[f.name] = true; break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ResourceKind k) {
  switch (k) {
    case ResourceKind::tool: return "tool";
    case ResourceKind::agent: return "agent";
    case ResourceKind::agentic_application: return "agentic_application";
  }
  return "tool";
}

std::string_view to_string(ResourceStatus s) {
  return s == ResourceStatus::active ? "active" : "suspended";
}

std::optional<ResourceKind> resource_kind_from_string(std::string_view s) {
  if (s == "tool") return ResourceKind::tool;
  if (s == "agent") return ResourceKind::agent;
  if (s == "agentic_application") return ResourceKind::agentic_application;
  return std::nullopt;
}

void LatencyRing::push(std::int64_t sample_ms) {
  if (samples_.size() < kCapacity) {
    samples_.push_back(sample_ms);
    return;
  }
  samples_[head_] = sample_ms;
  head_ = (head_ + 1) % kCapacity;
}

std::vector<std::int64_t> LatencyRing::ordered() const {
  std::vector<std::int64_t> out;
  out.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    out.push_back(samples_[(head_ + i) % samples_.size()]);
  }
  return out;
}

std::int64_t nearest_rank_percentile(std::span<const std::int64_t> samples, double p) {
  if (samples.empty()) return 0;
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

std::int64_t ResourceMetrics::p50_ms() const {
  auto s = latency_samples_ms.ordered();
  return nearest_rank_percentile(s, 50);
}

std::int64_t ResourceMetrics::p90_ms() const {
  auto s = latency_samples_ms.ordered();
  return nearest_rank_percentile(s, 90);
}

double ResourceMetrics::completion_rate() const {
  auto total = success_count + failure_count;
  if (total == 0) return 1.0;
  return static_cast<double>(success_count) / static_cast<double>(total);
}

std::string ResourceManifest::search_text() const {
  std::string text = description;
  for (const auto& ex : usage_examples) {
    text += " ";
    text += ex;
  }
  return text;
}

bool is_well_formed_url(std::string_view url) {
  std::string_view rest;
  if (url.starts_with("http://")) {
    rest = url.substr(7);
  } else if (url.starts_with("https://")) {
    rest = url.substr(8);
  } else if (url.starts_with("local://")) {
    rest = url.substr(8);
    return !rest.empty() && rest.find_first_of(" \t\n") == std::string_view::npos;
  } else {
    return false;
  }
  auto slash = rest.find('/');
  auto host = rest.substr(0, slash);
  if (host.empty() || host.find_first_of(" \t\n") != std::string_view::npos) return false;
  auto colon = host.rfind(':');
  if (colon != std::string_view::npos) {
    auto port = host.substr(colon + 1);
    if (port.empty() || port.size() > 5) return false;
    if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return false;
    if (colon == 0) return false;
  }
  return true;
}

namespace {

void check_schema(const Schema& schema, std::string_view label, std::vector<std::string>& out) {
  std::set<std::string> seen;
  for (const auto& f : schema) {
    if (f.name.empty()) {
      out.push_back(std::string(label) + " empty field name");
      continue;
    }
    if (!seen.insert(f.name).second) {
      out.push_back(std::string(label) + " duplicate field: " + f.name);
    }
    if (f.example && scalar_type_of(*f.example) != f.type &&
        !(f.type == ScalarType::floating && scalar_type_of(*f.example) == ScalarType::integer)) {
      out.push_back(std::string(label) + " example type mismatch: " + f.name);
    }
  }
}

}  // namespace

std::vector<std::string> validate_manifest(const ResourceManifest& m) {
  std::vector<std::string> out;
  if (m.resource_id.empty()) out.emplace_back("resource_id empty");
  if (m.name.empty()) out.emplace_back("name empty");
  if (m.description.empty()) out.emplace_back("description empty");
  if (!is_well_formed_url(m.endpoint)) out.push_back("endpoint malformed: " + m.endpoint);
  check_schema(m.input_schema, "input_schema", out);
  check_schema(m.output_schema, "output_schema", out);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::agentic: return "agentic";
    case NodeKind::no_llm: return "no_llm";
    case NodeKind::human_gate: return "human_gate";
  }
  return "agentic";
}

std::string_view to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::pending: return "pending";
    case NodeStatus::awaiting_approval: return "awaiting_approval";
    case NodeStatus::running: return "running";
    case NodeStatus::succeeded: return "succeeded";
    case NodeStatus::failed: return "failed";
    case NodeStatus::skipped: return "skipped";
  }
  return "pending";
}

std::string_view to_string(OperationalMode m) {
  switch (m) {
    case OperationalMode::no_llm: return "no_llm";
    case OperationalMode::copilot: return "copilot";
    case OperationalMode::llm_agent: return "llm_agent";
  }
  return "llm_agent";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  if (s == "agentic") return NodeKind::agentic;
  if (s == "no_llm") return NodeKind::no_llm;
  if (s == "human_gate") return NodeKind::human_gate;
  return std::nullopt;
}

std::optional<NodeStatus> node_status_from_string(std::string_view s) {
  for (auto st : {NodeStatus::pending, NodeStatus::awaiting_approval, NodeStatus::running,
                  NodeStatus::succeeded, NodeStatus::failed, NodeStatus::skipped}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<OperationalMode> mode_from_string(std::string_view s) {
  if (s == "no_llm") return OperationalMode::no_llm;
  if (s == "copilot") return OperationalMode::copilot;
  if (s == "llm_agent") return OperationalMode::llm_agent;
  return std::nullopt;
}

std::vector<std::string> validate_task_list(std::span<const TaskSpec> tasks) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (t.task_id.empty()) out.emplace_back("task_id empty");
    if (!ids.insert(t.task_id).second) out.push_back("duplicate task_id: " + t.task_id);
    if (t.description.empty()) out.push_back("description empty: " + t.task_id);
  }
  for (const auto& t : tasks) {
    for (const auto& d : t.depends_on) {
      if (d == t.task_id) {
        out.push_back("self dependency: " + t.task_id);
      } else if (!ids.contains(d)) {
        out.push_back("unknown dependency: " + t.task_id + " -> " + d);
      }
    }
  }
  return out;
}

const GraphNode* TaskGraph::find(std::string_view task_id) const {
  for (const auto& n : nodes) {
    if (n.task.task_id == task_id) return &n;
  }
  return nullptr;
}

GraphNode* TaskGraph::find(std::string_view task_id) {
  for (auto& n : nodes) {
    if (n.task.task_id == task_id) return &n;
  }
  return nullptr;
}

std::vector<TaskSpec> TaskGraph::tasks() const {
  std::vector<TaskSpec> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.task);
  return out;
}

DagCheck check_dag(std::span<const TaskSpec> tasks) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tasks.size(); ++i) index.emplace(tasks[i].task_id, i);

  // Iterative three-colour DFS along depends_on edges; a grey hit is a cycle.
  enum : std::uint8_t { white, grey, black };
  std::vector<std::uint8_t> colour(tasks.size(), white);
  std::vector<std::size_t> stack;

  for (std::size_t root = 0; root < tasks.size(); ++root) {
    if (colour[root] != white) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    colour[root] = grey;
    stack.assign(1, root);
    while (!frames.empty()) {
      auto& [node, next] = frames.back();
      const auto& deps = tasks[node].depends_on;
      if (next == deps.size()) {
        colour[node] = black;
        frames.pop_back();
        stack.pop_back();
        continue;
      }
      auto it = index.find(deps[next++]);
      if (it == index.end()) continue;
      auto dep = it->second;
      if (colour[dep] == grey) {
        DagCheck r{false, {}};
        auto start = std::find(stack.begin(), stack.end(), dep);
        for (auto s = start; s != stack.end(); ++s) r.cycle.push_back(tasks[*s].task_id);
        return r;
      }
      if (colour[dep] == white) {
        colour[dep] = grey;
        frames.emplace_back(dep, 0);
        stack.push_back(dep);
      }
    }
  }
  return {};
}

DagCheck check_dag(const TaskGraph& g) {
  auto t = g.tasks();
  return check_dag(t);
}

// ---------------------------------------------------------------------------

std::vector<std::string> check_offer_partition(const ResourceQuery& q, const ResourceOffer& o) {
  std::vector<std::string> out;
  std::set<std::string> query_ids;
  for (const auto& t : q.subtasks) query_ids.insert(t.task_id);
  std::set<std::string> unfulfilled(o.unfulfilled.begin(), o.unfulfilled.end());
  if (unfulfilled.size() != o.unfulfilled.size()) out.emplace_back("duplicate unfulfilled id");
  for (const auto& id : query_ids) {
    bool in_offer = o.per_task.contains(id);
    bool in_unf = unfulfilled.contains(id);
    if (in_offer == in_unf) out.push_back("task not partitioned: " + id);
  }
  for (const auto& [id, list] : o.per_task) {
    if (!query_ids.contains(id)) out.push_back("offer for unknown task: " + id);
    if (list.empty()) out.push_back("empty offer list: " + id);
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].score > list[i - 1].score) out.push_back("offer not sorted: " + id);
    }
  }
  for (const auto& id : unfulfilled) {
    if (!query_ids.contains(id)) out.push_back("unfulfilled unknown task: " + id);
  }
  return out;
}

void assert_offer_partition(const ResourceQuery& q, const ResourceOffer& o) {
  auto v = check_offer_partition(q, o);
  if (!v.empty()) throw Error(ErrorCode::malformed_query, "offer partition violated: " + v.front());
}

ExecutionResult ExecutionResult::success(std::string command_id, ValueMap payload,
                                         std::int64_t elapsed) {
  ExecutionResult r;
  r.command_id = std::move(command_id);
  r.outcome = Outcome::ok;
  r.payload = std::move(payload);
  r.elapsed_ms = elapsed;
  return r;
}

ExecutionResult ExecutionResult::failure(std::string command_id, std::string message,
                                         std::int64_t elapsed) {
  ExecutionResult r;
  r.command_id = std::move(command_id);
  r.outcome = Outcome::error;
  r.error_message = std::move(message);
  r.elapsed_ms = elapsed;
  return r;
}

std::optional<std::string> error_code_of(const ExecutionResult& r) {
  if (r.ok() || !r.error_message) return std::nullopt;
  const auto& m = *r.error_message;
  auto colon = m.find(':');
  return colon == std::string::npos ? m : m.substr(0, colon);
}

std::string make_command_id(std::string_view workflow_id, std::string_view task_id, int attempt) {
  std::string out(workflow_id);
  out += '/';
  out += task_id;
  out += '/';
  out += std::to_string(attempt);
  return out;
}

std::optional<CommandOrigin> parse_command_id(std::string_view command_id) {
  auto first = command_id.find('/');
  auto last = command_id.rfind('/');
  if (first == std::string_view::npos || first == last) return std::nullopt;
  CommandOrigin o;
  o.workflow_id = std::string(command_id.substr(0, first));
  o.task_id = std::string(command_id.substr(first + 1, last - first - 1));
  try {
    o.attempt = std::stoi(std::string(command_id.substr(last + 1)));
  } catch (...) {
    return std::nullopt;
  }
  return o;
}

}  // namespace dawn
