#pragma once

// Security, safety and compliance screening.
//
// Rules are deterministic: case-insensitive regex patterns for prompt
// injection, keyword lists for denied topics, and regex PII rules with fixed
// replacement tokens. Evaluation order is injection -> deny topics -> PII ->
// allow; the first blocking rule decides, but every match is reported.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "dawn/codec.hpp"
#include "dawn/protocol.hpp"

namespace dawn::guard {

enum class Direction { inbound, outbound };
std::string_view to_string(Direction d);

struct PatternRule {
  std::string rule_id;
  std::string pattern;
};

struct PiiRule {
  std::string name;
  std::string pattern;
  std::string replacement;
};

struct DenyTopic {
  std::string topic_id;
  std::vector<std::string> keywords;
};

/// Compiled policy. Construction throws Error(invalid_manifest) if a pattern
/// does not compile, a replacement re-inserts matched text, or a replacement
/// would itself be matched by a PII rule.
class GuardPolicy {
 public:
  GuardPolicy() = default;
  GuardPolicy(std::string policy_id, std::vector<PatternRule> injection, std::vector<PiiRule> pii,
              std::vector<DenyTopic> deny_topics,
              std::map<std::string, std::vector<std::string>> facts);

  const std::string& policy_id() const { return policy_id_; }
  const std::vector<PatternRule>& injection_patterns() const { return injection_; }
  const std::vector<PiiRule>& pii_rules() const { return pii_; }
  const std::vector<DenyTopic>& deny_topics() const { return deny_; }
  const std::map<std::string, std::vector<std::string>>& policy_facts() const { return facts_; }

  struct Compiled {
    std::vector<std::regex> injection;
    std::vector<std::regex> pii;
  };
  const Compiled& compiled() const { return *compiled_; }

 private:
  std::string policy_id_;
  std::vector<PatternRule> injection_;
  std::vector<PiiRule> pii_;
  std::vector<DenyTopic> deny_;
  std::map<std::string, std::vector<std::string>> facts_;
  std::shared_ptr<const Compiled> compiled_ = std::make_shared<Compiled>();
};

GuardPolicy policy_from_json(const Json& j);
Json to_json(const GuardPolicy& p);
GuardPolicy load_policy(const std::filesystem::path& file);

/// The shipped default policy (data/policy/default_policy.json).
const GuardPolicy& default_policy();
std::filesystem::path default_data_dir();

enum class Decision { allow, redact, block };
std::string_view to_string(Decision d);

struct GuardVerdict {
  Decision decision = Decision::allow;
  std::string redacted_text;      // set when decision == redact
  std::string blocking_rule;      // set when decision == block
  std::vector<std::string> matched_rules;
  Direction direction = Direction::inbound;
};

GuardVerdict screen(std::string_view text, Direction direction, const GuardPolicy& policy);

/// Exact-key read of the policy's LookUp table.
std::optional<std::vector<std::string>> policy_lookup(std::string_view key, const GuardPolicy& policy);

// ---------------------------------------------------------------------------
// Message screening and tracing

enum class Boundary { principal_gateway, gateway_resource };
std::string_view to_string(Boundary b);

struct GuardEvent {
  std::uint64_t seq = 0;
  Timestamp at = 0;
  std::string workflow_id;
  std::string step;  // task id or query id
  std::string peer;  // gateway or resource id
  Boundary boundary = Boundary::principal_gateway;
  Direction direction = Direction::inbound;
  std::string message_type;
  Decision decision = Decision::allow;
  std::string rule_id;
  std::vector<std::string> matched_rules;
};

Json to_json(const GuardEvent& e);
GuardEvent guard_event_from_json(const Json& j, const std::string& path);

/// Append-only store of guard events, per workflow.
class GuardLog {
 public:
  explicit GuardLog(Clock clock = system_clock());

  void append(GuardEvent e);
  /// Events for one workflow in append order. Empty if none were recorded.
  std::vector<GuardEvent> events(const std::string& workflow_id) const;
  std::size_t total() const;
  bool knows(const std::string& workflow_id) const;

 private:
  Clock clock_;
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 0;
  std::map<std::string, std::vector<GuardEvent>> by_workflow_;
};

struct ScreenContext {
  std::string workflow_id;
  std::string step;
  std::string peer;
  Boundary boundary = Boundary::principal_gateway;
};

/// Screens every free-text field of a message once, applies redactions in
/// place and records one event. Returns the aggregate verdict; a block means
/// the message must not be delivered.
GuardVerdict screen_message(Message& message, Direction direction, const GuardPolicy& policy,
                            GuardLog& log, const ScreenContext& ctx);

}  // namespace dawn::guard
