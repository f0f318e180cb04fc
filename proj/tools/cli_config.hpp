#pragma once

// Config file for the dawn command line. One JSON object with optional
// "principal", "gateway" and "client" sections; unknown keys are rejected.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dawn/principal.hpp"

namespace dawn::cli {

struct UserToken {
  std::string token;
  std::string tenant;
  std::string user;
};

struct PrincipalSection {
  std::string listen = "127.0.0.1:8700";
  std::string principal_id = "principal";
  std::vector<UserToken> users;
  std::vector<std::string> gateway_tokens;
  std::optional<std::filesystem::path> state_dir;
  std::size_t pool_capacity = principal::kPoolCapacity;
  double alpha = principal::kRatingAlpha;
  std::int64_t fanout_timeout_ms = principal::kFanOutTimeoutMs;
  std::int64_t node_deadline_ms = orchestrator::kDefaultNodeDeadlineMs;
  principal::JoinGranularity join = principal::JoinGranularity::round;
  planner::Strategy strategy = planner::Strategy::react;
  orchestrator::GatePolicy gate_policy = orchestrator::GatePolicy::every_agentic;
  std::map<std::string, std::string> no_llm_bindings;
  std::optional<std::filesystem::path> provider_file;
  std::optional<std::filesystem::path> policy_file;
};

struct GatewaySection {
  std::string gateway_id = "gateway";
  std::string display_name;
  std::string listen = "127.0.0.1:8710";
  std::string public_url;  // defaults to http://<listen>
  std::vector<std::string> tokens;
  std::optional<std::filesystem::path> snapshot_path;
  std::optional<std::filesystem::path> manifests;  // registered and validated at start
  std::string principal_url;                       // connect after start when set
  std::optional<std::filesystem::path> policy_file;
};

struct ClientSection {
  std::string principal_url = "http://127.0.0.1:8700";
  std::string token;
  std::string gateway_url = "http://127.0.0.1:8710";
  std::string gateway_token;
};

struct CliConfig {
  PrincipalSection principal;
  GatewaySection gateway;
  ClientSection client;
};

/// Parses a config document. Throws ParseError naming the offending path.
CliConfig config_from_json(const Json& j);
CliConfig load_config(const std::filesystem::path& file);

/// "host:port" -> (host, port). Throws Error(parse_error).
std::pair<std::string, int> split_listen(const std::string& listen);

}  // namespace dawn::cli
