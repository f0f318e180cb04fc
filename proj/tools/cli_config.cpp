#include "cli_config.hpp"

#include "dawn/codec.hpp"
#include "dawn/registry.hpp"

namespace dawn::cli {

namespace {

PrincipalSection principal_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  PrincipalSection s;
  if (auto v = r.opt_string("listen")) s.listen = *v;
  if (auto v = r.opt_string("principal_id")) s.principal_id = *v;
  if (r.has("users")) {
    const auto& users = r.array("users");
    for (std::size_t i = 0; i < users.size(); ++i) {
      JsonReader u(users[i], r.child_path("users") + "[" + std::to_string(i) + "]");
      s.users.push_back({u.string("token"), u.string("tenant"), u.string("user")});
      u.finish();
    }
  }
  if (r.has("gateway_tokens")) s.gateway_tokens = r.strings("gateway_tokens");
  if (auto v = r.opt_string("state_dir")) s.state_dir = *v;
  if (auto v = r.opt_integer("pool_capacity")) {
    if (*v < 1) throw_at(r.child_path("pool_capacity"), "must be positive");
    s.pool_capacity = static_cast<std::size_t>(*v);
  }
  if (r.has("alpha")) {
    s.alpha = r.number("alpha");
    if (s.alpha <= 0.0 || s.alpha > 1.0) throw_at(r.child_path("alpha"), "must be in (0,1]");
  }
  if (auto v = r.opt_integer("fanout_timeout_ms")) s.fanout_timeout_ms = *v;
  if (auto v = r.opt_integer("node_deadline_ms")) s.node_deadline_ms = *v;
  if (auto v = r.opt_string("join")) {
    auto g = principal::join_granularity_from_string(*v);
    if (!g) throw_at(r.child_path("join"), "expected workflow or round");
    s.join = *g;
  }
  if (auto v = r.opt_string("strategy")) {
    if (*v == "react") s.strategy = planner::Strategy::react;
    else if (*v == "rewoo") s.strategy = planner::Strategy::rewoo;
    else if (*v == "tot") s.strategy = planner::Strategy::tot;
    else throw_at(r.child_path("strategy"), "expected react, rewoo or tot");
  }
  if (auto v = r.opt_string("gate_policy")) {
    auto p = orchestrator::gate_policy_from_string(*v);
    if (!p) throw_at(r.child_path("gate_policy"), "expected every_agentic or marked_only");
    s.gate_policy = *p;
  }
  if (r.has("no_llm_bindings")) {
    for (const auto& [k, v] : r.object("no_llm_bindings").items()) {
      if (!v.is_string()) throw_at(r.child_path("no_llm_bindings") + "." + k, "expected string");
      s.no_llm_bindings[k] = v.get<std::string>();
    }
  }
  if (auto v = r.opt_string("provider_file")) s.provider_file = *v;
  if (auto v = r.opt_string("policy_file")) s.policy_file = *v;
  r.finish();
  return s;
}

GatewaySection gateway_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  GatewaySection s;
  if (auto v = r.opt_string("gateway_id")) s.gateway_id = *v;
  if (auto v = r.opt_string("display_name")) s.display_name = *v;
  if (auto v = r.opt_string("listen")) s.listen = *v;
  if (auto v = r.opt_string("public_url")) s.public_url = *v;
  if (r.has("tokens")) s.tokens = r.strings("tokens");
  if (auto v = r.opt_string("snapshot_path")) s.snapshot_path = *v;
  if (auto v = r.opt_string("manifests")) s.manifests = *v;
  if (auto v = r.opt_string("principal_url")) s.principal_url = *v;
  if (auto v = r.opt_string("policy_file")) s.policy_file = *v;
  r.finish();
  return s;
}

ClientSection client_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  ClientSection s;
  if (auto v = r.opt_string("principal_url")) s.principal_url = *v;
  if (auto v = r.opt_string("token")) s.token = *v;
  if (auto v = r.opt_string("gateway_url")) s.gateway_url = *v;
  if (auto v = r.opt_string("gateway_token")) s.gateway_token = *v;
  r.finish();
  return s;
}

}  // namespace

CliConfig config_from_json(const Json& j) {
  JsonReader r(j, "$");
  CliConfig c;
  if (r.has("principal")) c.principal = principal_from_json(r.object("principal"), r.child_path("principal"));
  if (r.has("gateway")) c.gateway = gateway_from_json(r.object("gateway"), r.child_path("gateway"));
  if (r.has("client")) c.client = client_from_json(r.object("client"), r.child_path("client"));
  r.finish();
  return c;
}

CliConfig load_config(const std::filesystem::path& file) { return config_from_json(parse_json(registry::read_file(file))); }

std::pair<std::string, int> split_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(ErrorCode::parse_error, "listen address must be host:port");
  try {
    std::size_t used = 0;
    int port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
    return {listen.substr(0, colon), port};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::parse_error, "bad port in " + listen);
  }
}

}  // namespace dawn::cli
