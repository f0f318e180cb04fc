#include "dawn/codec.hpp"

#include <algorithm>

#include "dawn/error.hpp"

namespace dawn {

namespace {

std::string type_name(const Json& j) {
  return std::string(j.type_name());
}

template <class T>
struct MessageTag;
template <>
struct MessageTag<ResourceManifest> {
  static constexpr std::string_view name = "resource_manifest";
};
template <>
struct MessageTag<ResourceQuery> {
  static constexpr std::string_view name = "resource_query";
};
template <>
struct MessageTag<ResourceOffer> {
  static constexpr std::string_view name = "resource_offer";
};
template <>
struct MessageTag<ExecutionCommand> {
  static constexpr std::string_view name = "execution_command";
};
template <>
struct MessageTag<ExecutionResult> {
  static constexpr std::string_view name = "execution_result";
};
template <>
struct MessageTag<GatewayIdentity> {
  static constexpr std::string_view name = "gateway_identity";
};

}  // namespace

[[noreturn]] void throw_at(const std::string& path, const std::string& what) {
  throw ParseError(what, std::nullopt, path);
}

Json parse_json(std::string_view bytes) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann counts bytes from 1; report the 0-based offending position.
    std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, bytes.size());
    throw ParseError("malformed JSON at byte " + std::to_string(offset), offset, "");
  }
}

// ---------------------------------------------------------------------------
// JsonReader

JsonReader::JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw_at(path_, "expected object, got " + type_name(j_));
}

std::string JsonReader::child_path(std::string_view key) const {
  return path_ + "." + std::string(key);
}

bool JsonReader::has(std::string_view key) const {
  return j_.contains(std::string(key));
}

const Json& JsonReader::require(std::string_view key) {
  auto it = j_.find(std::string(key));
  if (it == j_.end()) throw_at(child_path(key), "missing field");
  consumed_.emplace_back(key);
  return *it;
}

const Json& JsonReader::raw(std::string_view key) { return require(key); }

std::string JsonReader::string(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_string()) throw_at(child_path(key), "expected string, got " + type_name(v));
  return v.get<std::string>();
}

std::int64_t JsonReader::integer(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_number_integer()) throw_at(child_path(key), "expected integer, got " + type_name(v));
  return v.get<std::int64_t>();
}

double JsonReader::number(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_number()) throw_at(child_path(key), "expected number, got " + type_name(v));
  return v.get<double>();
}

bool JsonReader::boolean(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_boolean()) throw_at(child_path(key), "expected bool, got " + type_name(v));
  return v.get<bool>();
}

const Json& JsonReader::array(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_array()) throw_at(child_path(key), "expected array, got " + type_name(v));
  return v;
}

const Json& JsonReader::object(std::string_view key) {
  const auto& v = require(key);
  if (!v.is_object()) throw_at(child_path(key), "expected object, got " + type_name(v));
  return v;
}

std::vector<std::string> JsonReader::strings(std::string_view key) {
  const auto& arr = array(key);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) {
      throw_at(child_path(key) + "[" + std::to_string(i) + "]", "expected string");
    }
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

std::optional<std::string> JsonReader::opt_string(std::string_view key) {
  if (!has(key)) return std::nullopt;
  return string(key);
}

std::optional<std::int64_t> JsonReader::opt_integer(std::string_view key) {
  if (!has(key)) return std::nullopt;
  return integer(key);
}

void JsonReader::skip(std::string_view key) {
  if (has(key)) consumed_.emplace_back(key);
}

void JsonReader::finish() {
  for (const auto& [k, _] : j_.items()) {
    if (std::find(consumed_.begin(), consumed_.end(), k) == consumed_.end()) {
      throw_at(child_path(k), "unknown field");
    }
  }
}

// ---------------------------------------------------------------------------
// Field conversions

Json to_json(const Scalar& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

Scalar scalar_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  throw_at(path, "expected scalar, got " + type_name(j));
}

Json to_json(const ValueMap& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[k] = to_json(v);
  return out;
}

ValueMap value_map_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw_at(path, "expected object, got " + type_name(j));
  ValueMap out;
  for (const auto& [k, v] : j.items()) out[k] = scalar_from_json(v, path + "." + k);
  return out;
}

Json to_json(const Schema& s) {
  Json out = Json::array();
  for (const auto& f : s) {
    Json e = {{"name", f.name}, {"type", to_string(f.type)}, {"required", f.required}};
    if (f.example) e["example"] = to_json(*f.example);
    out.push_back(std::move(e));
  }
  return out;
}

Schema schema_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw_at(path, "expected array, got " + type_name(j));
  Schema out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto p = path + "[" + std::to_string(i) + "]";
    JsonReader r(j[i], p);
    FieldSpec f;
    f.name = r.string("name");
    auto t = scalar_type_from_string(r.string("type"));
    if (!t) throw_at(r.child_path("type"), "unknown scalar type");
    f.type = *t;
    f.required = r.boolean("required");
    if (r.has("example")) f.example = scalar_from_json(r.raw("example"), r.child_path("example"));
    r.finish();
    out.push_back(std::move(f));
  }
  return out;
}

Json to_json(const ResourceMetrics& m) {
  Json out = {
      {"success_count", m.success_count},
      {"failure_count", m.failure_count},
      {"latency_samples_ms", m.latency_samples_ms.ordered()},
      {"p50_ms", m.p50_ms()},
      {"p90_ms", m.p90_ms()},
      {"completion_rate", m.completion_rate()},
      {"cost", m.cost},
  };
  if (m.last_validated_at) out["last_validated_at"] = *m.last_validated_at;
  return out;
}

ResourceMetrics metrics_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ResourceMetrics m;
  auto s = r.integer("success_count");
  auto f = r.integer("failure_count");
  if (s < 0 || f < 0) throw_at(path, "negative counter");
  m.success_count = static_cast<std::uint64_t>(s);
  m.failure_count = static_cast<std::uint64_t>(f);
  const auto& samples = r.array("latency_samples_ms");
  if (samples.size() > LatencyRing::kCapacity) throw_at(r.child_path("latency_samples_ms"), "ring overflow");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].is_number_integer() || samples[i].get<std::int64_t>() < 0) {
      throw_at(r.child_path("latency_samples_ms") + "[" + std::to_string(i) + "]",
               "expected nonnegative integer");
    }
    m.latency_samples_ms.push(samples[i].get<std::int64_t>());
  }
  // Derived values are recomputed, not trusted.
  r.skip("p50_ms");
  r.skip("p90_ms");
  r.skip("completion_rate");
  m.cost = r.number("cost");
  m.last_validated_at = r.opt_integer("last_validated_at");
  r.finish();
  return m;
}

Json to_json(const TaskSpec& t) {
  return {{"task_id", t.task_id},
          {"description", t.description},
          {"depends_on", t.depends_on},
          {"node_kind", to_string(t.node_kind)}};
}

TaskSpec task_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  TaskSpec t;
  t.task_id = r.string("task_id");
  t.description = r.string("description");
  t.depends_on = r.strings("depends_on");
  auto k = node_kind_from_string(r.string("node_kind"));
  if (!k) throw_at(r.child_path("node_kind"), "unknown node kind");
  t.node_kind = *k;
  r.finish();
  return t;
}

Json to_json(const TaskGraph& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes) {
    Json e = {{"task", to_json(n.task)}, {"status", to_string(n.status)}, {"gated", n.gated}};
    if (n.assignment) e["assignment"] = *n.assignment;
    if (n.gateway_id) e["gateway_id"] = *n.gateway_id;
    nodes.push_back(std::move(e));
  }
  return {{"graph_id", g.graph_id}, {"mode", to_string(g.mode)}, {"nodes", nodes}};
}

TaskGraph graph_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  TaskGraph g;
  g.graph_id = r.string("graph_id");
  auto mode = mode_from_string(r.string("mode"));
  if (!mode) throw_at(r.child_path("mode"), "unknown mode");
  g.mode = *mode;
  const auto& nodes = r.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto p = r.child_path("nodes") + "[" + std::to_string(i) + "]";
    JsonReader nr(nodes[i], p);
    GraphNode n;
    n.task = task_from_json(nr.object("task"), nr.child_path("task"));
    auto st = node_status_from_string(nr.string("status"));
    if (!st) throw_at(nr.child_path("status"), "unknown status");
    n.status = *st;
    n.gated = nr.boolean("gated");
    n.assignment = nr.opt_string("assignment");
    n.gateway_id = nr.opt_string("gateway_id");
    nr.finish();
    g.nodes.push_back(std::move(n));
  }
  r.finish();
  return g;
}

// ---------------------------------------------------------------------------
// Message bodies

Json body_to_json(const ResourceManifest& m) {
  return {{"resource_id", m.resource_id},
          {"kind", to_string(m.kind)},
          {"name", m.name},
          {"description", m.description},
          {"usage_examples", m.usage_examples},
          {"endpoint", m.endpoint},
          {"input_schema", to_json(m.input_schema)},
          {"output_schema", to_json(m.output_schema)},
          {"owner_gateway", m.owner_gateway},
          {"metrics", to_json(m.metrics)},
          {"status", to_string(m.status)}};
}

ResourceManifest manifest_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ResourceManifest m;
  m.resource_id = r.string("resource_id");
  auto kind = resource_kind_from_string(r.string("kind"));
  if (!kind) throw_at(r.child_path("kind"), "unknown resource kind");
  m.kind = *kind;
  m.name = r.string("name");
  m.description = r.string("description");
  m.usage_examples = r.strings("usage_examples");
  m.endpoint = r.string("endpoint");
  m.input_schema = schema_from_json(r.array("input_schema"), r.child_path("input_schema"));
  m.output_schema = schema_from_json(r.array("output_schema"), r.child_path("output_schema"));
  m.owner_gateway = r.string("owner_gateway");
  m.metrics = metrics_from_json(r.object("metrics"), r.child_path("metrics"));
  auto status = r.string("status");
  if (status == "active") {
    m.status = ResourceStatus::active;
  } else if (status == "suspended") {
    m.status = ResourceStatus::suspended;
  } else {
    throw_at(r.child_path("status"), "unknown status");
  }
  r.finish();
  return m;
}

Json body_to_json(const ResourceQuery& q) {
  Json subtasks = Json::array();
  for (const auto& t : q.subtasks) subtasks.push_back(to_json(t));
  return {{"query_id", q.query_id},
          {"subtasks", subtasks},
          {"context_summary", q.context_summary},
          {"max_offers_per_task", q.max_offers_per_task}};
}

ResourceQuery query_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ResourceQuery q;
  q.query_id = r.string("query_id");
  const auto& subtasks = r.array("subtasks");
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    q.subtasks.push_back(
        task_from_json(subtasks[i], r.child_path("subtasks") + "[" + std::to_string(i) + "]"));
  }
  q.context_summary = r.string("context_summary");
  q.max_offers_per_task = static_cast<int>(r.integer("max_offers_per_task"));
  r.finish();
  return q;
}

Json body_to_json(const ResourceOffer& o) {
  Json per_task = Json::object();
  for (const auto& [task, list] : o.per_task) {
    Json arr = Json::array();
    for (const auto& sm : list) {
      arr.push_back({{"manifest", body_to_json(sm.manifest)}, {"score", sm.score}});
    }
    per_task[task] = std::move(arr);
  }
  return {{"query_id", o.query_id}, {"per_task", per_task}, {"unfulfilled", o.unfulfilled}};
}

ResourceOffer offer_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ResourceOffer o;
  o.query_id = r.string("query_id");
  const auto& per_task = r.object("per_task");
  for (const auto& [task, arr] : per_task.items()) {
    auto p = r.child_path("per_task") + "." + task;
    if (!arr.is_array()) throw_at(p, "expected array, got " + type_name(arr));
    std::vector<ScoredManifest> list;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto ip = p + "[" + std::to_string(i) + "]";
      JsonReader er(arr[i], ip);
      ScoredManifest sm;
      sm.manifest = manifest_from_json(er.object("manifest"), er.child_path("manifest"));
      sm.score = er.number("score");
      er.finish();
      list.push_back(std::move(sm));
    }
    o.per_task.emplace(task, std::move(list));
  }
  o.unfulfilled = r.strings("unfulfilled");
  r.finish();
  return o;
}

Json body_to_json(const ExecutionCommand& c) {
  return {{"command_id", c.command_id},
          {"resource_id", c.resource_id},
          {"endpoint", c.endpoint},
          {"inputs", to_json(c.inputs)},
          {"deadline_ms", c.deadline_ms}};
}

ExecutionCommand command_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ExecutionCommand c;
  c.command_id = r.string("command_id");
  c.resource_id = r.string("resource_id");
  c.endpoint = r.string("endpoint");
  c.inputs = value_map_from_json(r.object("inputs"), r.child_path("inputs"));
  c.deadline_ms = r.integer("deadline_ms");
  if (c.deadline_ms <= 0) throw_at(r.child_path("deadline_ms"), "deadline must be positive");
  r.finish();
  return c;
}

Json body_to_json(const ExecutionResult& res) {
  Json out = {{"command_id", res.command_id},
              {"outcome", res.ok() ? "ok" : "error"},
              {"elapsed_ms", res.elapsed_ms}};
  if (res.payload) out["payload"] = to_json(*res.payload);
  if (res.error_message) out["error_message"] = *res.error_message;
  return out;
}

ExecutionResult result_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ExecutionResult res;
  res.command_id = r.string("command_id");
  auto outcome = r.string("outcome");
  if (outcome == "ok") {
    res.outcome = Outcome::ok;
  } else if (outcome == "error") {
    res.outcome = Outcome::error;
  } else {
    throw_at(r.child_path("outcome"), "unknown outcome");
  }
  res.elapsed_ms = r.integer("elapsed_ms");
  if (res.elapsed_ms < 0) throw_at(r.child_path("elapsed_ms"), "negative elapsed");
  if (r.has("payload")) {
    res.payload = value_map_from_json(r.object("payload"), r.child_path("payload"));
  }
  res.error_message = r.opt_string("error_message");
  if (res.ok() != res.payload.has_value()) throw_at(r.child_path("payload"), "payload iff ok");
  if (res.ok() == res.error_message.has_value()) {
    throw_at(r.child_path("error_message"), "error_message iff error");
  }
  r.finish();
  return res;
}

Json body_to_json(const GatewayIdentity& g) {
  Json caps = Json::array();
  for (auto k : g.capabilities) caps.push_back(to_string(k));
  return {{"gateway_id", g.gateway_id},
          {"display_name", g.display_name},
          {"base_url", g.base_url},
          {"auth_token", g.auth_token},
          {"capabilities", caps}};
}

GatewayIdentity identity_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  GatewayIdentity g;
  g.gateway_id = r.string("gateway_id");
  g.display_name = r.string("display_name");
  g.base_url = r.string("base_url");
  g.auth_token = r.string("auth_token");
  auto caps = r.strings("capabilities");
  for (std::size_t i = 0; i < caps.size(); ++i) {
    auto k = resource_kind_from_string(caps[i]);
    if (!k) throw_at(r.child_path("capabilities") + "[" + std::to_string(i) + "]", "unknown kind");
    g.capabilities.push_back(*k);
  }
  r.finish();
  return g;
}

// ---------------------------------------------------------------------------
// Envelope

std::string_view message_type_name(const Message& m) {
  return std::visit([](const auto& x) { return MessageTag<std::decay_t<decltype(x)>>::name; }, m);
}

std::string encode(const Message& m) {
  Json j = std::visit([](const auto& x) { return body_to_json(x); }, m);
  j["type"] = message_type_name(m);
  j["v"] = kWireVersion;
  return j.dump();
}

Message decode(std::string_view bytes) {
  Json j = parse_json(bytes);
  if (!j.is_object()) throw_at("$", "expected object, got " + type_name(j));
  auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) throw_at("$.type", "missing message type");
  auto v_it = j.find("v");
  if (v_it == j.end() || !v_it->is_number_integer()) throw_at("$.v", "missing version");
  if (v_it->get<std::int64_t>() != kWireVersion) throw_at("$.v", "unsupported version");
  auto type = type_it->get<std::string>();
  j.erase("type");
  j.erase("v");
  if (type == MessageTag<ResourceManifest>::name) return manifest_from_json(j, "$");
  if (type == MessageTag<ResourceQuery>::name) return query_from_json(j, "$");
  if (type == MessageTag<ResourceOffer>::name) return offer_from_json(j, "$");
  if (type == MessageTag<ExecutionCommand>::name) return command_from_json(j, "$");
  if (type == MessageTag<ExecutionResult>::name) return result_from_json(j, "$");
  if (type == MessageTag<GatewayIdentity>::name) return identity_from_json(j, "$");
  throw_at("$.type", "unknown message type: " + type);
}

template <class T>
T decode_as(std::string_view bytes) {
  auto m = decode(bytes);
  if (auto* p = std::get_if<T>(&m)) return std::move(*p);
  throw_at("$.type", "expected " + std::string(MessageTag<T>::name) + ", got " +
                         std::string(message_type_name(m)));
}

template ResourceManifest decode_as<ResourceManifest>(std::string_view);
template ResourceQuery decode_as<ResourceQuery>(std::string_view);
template ResourceOffer decode_as<ResourceOffer>(std::string_view);
template ExecutionCommand decode_as<ExecutionCommand>(std::string_view);
template ExecutionResult decode_as<ExecutionResult>(std::string_view);
template GatewayIdentity decode_as<GatewayIdentity>(std::string_view);

}  // namespace dawn
