#include "dawn/guard.hpp"

#include <algorithm>
#include <cstdlib>

#include "dawn/error.hpp"
#include "dawn/log.hpp"
#include "dawn/registry.hpp"
#include "dawn/retrieval.hpp"

namespace dawn::guard {

std::string_view to_string(Direction d) { return d == Direction::inbound ? "inbound" : "outbound"; }

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::allow: return "allow";
    case Decision::redact: return "redact";
    case Decision::block: return "block";
  }
  return "allow";
}

std::string_view to_string(Boundary b) {
  return b == Boundary::principal_gateway ? "principal_gateway" : "gateway_resource";
}

namespace {

constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;

std::regex compile(const std::string& id, const std::string& pattern) {
  try {
    return std::regex(pattern, kFlags);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::invalid_manifest, "rule " + id + " does not compile: " + e.what());
  }
}

bool phrase_present(const std::vector<std::string>& text_tokens, const std::string& phrase) {
  auto p = retrieval::tokenize(phrase);
  if (p.empty() || p.size() > text_tokens.size()) return false;
  return std::search(text_tokens.begin(), text_tokens.end(), p.begin(), p.end()) != text_tokens.end();
}

}  // namespace

GuardPolicy::GuardPolicy(std::string policy_id, std::vector<PatternRule> injection,
                         std::vector<PiiRule> pii, std::vector<DenyTopic> deny_topics,
                         std::map<std::string, std::vector<std::string>> facts)
    : policy_id_(std::move(policy_id)),
      injection_(std::move(injection)),
      pii_(std::move(pii)),
      deny_(std::move(deny_topics)),
      facts_(std::move(facts)) {
  auto c = std::make_shared<Compiled>();
  for (const auto& r : injection_) c->injection.push_back(compile(r.rule_id, r.pattern));
  for (const auto& r : pii_) {
    if (r.replacement.find('$') != std::string::npos) {
      throw Error(ErrorCode::invalid_manifest, "pii rule " + r.name + " replacement references the match");
    }
    c->pii.push_back(compile(r.name, r.pattern));
  }
  for (const auto& r : pii_) {
    for (std::size_t i = 0; i < c->pii.size(); ++i) {
      if (std::regex_search(r.replacement, c->pii[i])) {
        throw Error(ErrorCode::invalid_manifest,
                    "pii rule " + r.name + " replacement matches pii rule " + pii_[i].name);
      }
    }
  }
  compiled_ = std::move(c);
}

GuardPolicy policy_from_json(const Json& j) {
  JsonReader r(j, "$");
  auto id = r.string("policy_id");
  std::vector<PatternRule> injection;
  const auto& inj = r.array("injection_patterns");
  for (std::size_t i = 0; i < inj.size(); ++i) {
    JsonReader e(inj[i], "$.injection_patterns[" + std::to_string(i) + "]");
    injection.push_back({e.string("rule_id"), e.string("pattern")});
    e.finish();
  }
  std::vector<PiiRule> pii;
  const auto& p = r.array("pii_rules");
  for (std::size_t i = 0; i < p.size(); ++i) {
    JsonReader e(p[i], "$.pii_rules[" + std::to_string(i) + "]");
    pii.push_back({e.string("name"), e.string("pattern"), e.string("replacement")});
    e.finish();
  }
  std::vector<DenyTopic> deny;
  const auto& d = r.array("deny_topics");
  for (std::size_t i = 0; i < d.size(); ++i) {
    JsonReader e(d[i], "$.deny_topics[" + std::to_string(i) + "]");
    deny.push_back({e.string("topic_id"), e.strings("keywords")});
    e.finish();
  }
  std::map<std::string, std::vector<std::string>> facts;
  const auto& f = r.object("policy_facts");
  for (const auto& [k, v] : f.items()) {
    std::vector<std::string> values;
    if (v.is_string()) {
      values.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      for (const auto& x : v) {
        if (!x.is_string()) throw_at("$.policy_facts." + k, "expected string list");
        values.push_back(x.get<std::string>());
      }
    } else {
      throw_at("$.policy_facts." + k, "expected string or string list");
    }
    facts.emplace(k, std::move(values));
  }
  r.finish();
  return GuardPolicy(std::move(id), std::move(injection), std::move(pii), std::move(deny), std::move(facts));
}

Json to_json(const GuardPolicy& p) {
  Json inj = Json::array();
  for (const auto& r : p.injection_patterns()) inj.push_back({{"rule_id", r.rule_id}, {"pattern", r.pattern}});
  Json pii = Json::array();
  for (const auto& r : p.pii_rules()) {
    pii.push_back({{"name", r.name}, {"pattern", r.pattern}, {"replacement", r.replacement}});
  }
  Json deny = Json::array();
  for (const auto& t : p.deny_topics()) deny.push_back({{"topic_id", t.topic_id}, {"keywords", t.keywords}});
  Json facts = Json::object();
  for (const auto& [k, v] : p.policy_facts()) facts[k] = v;
  return {{"policy_id", p.policy_id()},
          {"injection_patterns", inj},
          {"pii_rules", pii},
          {"deny_topics", deny},
          {"policy_facts", facts}};
}

GuardPolicy load_policy(const std::filesystem::path& file) {
  return policy_from_json(parse_json(registry::read_file(file)));
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("DAWN_DATA_DIR")) return env;
  return DAWN_DEFAULT_DATA_DIR;
}

const GuardPolicy& default_policy() {
  static const GuardPolicy policy = load_policy(default_data_dir() / "policy" / "default_policy.json");
  return policy;
}

GuardVerdict screen(std::string_view text, Direction direction, const GuardPolicy& policy) {
  GuardVerdict v;
  v.direction = direction;
  const std::string s(text);
  const auto& c = policy.compiled();

  for (std::size_t i = 0; i < c.injection.size(); ++i) {
    if (std::regex_search(s, c.injection[i])) {
      v.matched_rules.push_back(policy.injection_patterns()[i].rule_id);
    }
  }
  auto tokens = retrieval::tokenize(s);
  for (const auto& topic : policy.deny_topics()) {
    bool hit = std::any_of(topic.keywords.begin(), topic.keywords.end(),
                           [&](const std::string& kw) { return phrase_present(tokens, kw); });
    if (hit) v.matched_rules.push_back(topic.topic_id);
  }
  std::string redacted = s;
  for (std::size_t i = 0; i < c.pii.size(); ++i) {
    if (std::regex_search(redacted, c.pii[i])) {
      v.matched_rules.push_back("pii." + policy.pii_rules()[i].name);
      redacted = std::regex_replace(redacted, c.pii[i], policy.pii_rules()[i].replacement);
    }
  }

  if (!v.matched_rules.empty() && !v.matched_rules.front().starts_with("pii.")) {
    v.decision = Decision::block;
    v.blocking_rule = v.matched_rules.front();
  } else if (redacted != s) {
    v.decision = Decision::redact;
    v.redacted_text = std::move(redacted);
  }
  if (!v.matched_rules.empty()) {
    std::string rules;
    for (const auto& r : v.matched_rules) rules += (rules.empty() ? "" : ",") + r;
    log::debug("guard", std::string(to_string(direction)) + " " + std::string(to_string(v.decision)) + " [" + rules + "]");
  }
  return v;
}

std::optional<std::vector<std::string>> policy_lookup(std::string_view key, const GuardPolicy& policy) {
  auto it = policy.policy_facts().find(std::string(key));
  if (it == policy.policy_facts().end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------

Json to_json(const GuardEvent& e) {
  return {{"seq", e.seq},
          {"at", e.at},
          {"workflow_id", e.workflow_id},
          {"step", e.step},
          {"peer", e.peer},
          {"boundary", to_string(e.boundary)},
          {"direction", to_string(e.direction)},
          {"message_type", e.message_type},
          {"decision", to_string(e.decision)},
          {"rule_id", e.rule_id},
          {"matched_rules", e.matched_rules}};
}

GuardEvent guard_event_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  GuardEvent e;
  e.seq = static_cast<std::uint64_t>(r.integer("seq"));
  e.at = r.integer("at");
  e.workflow_id = r.string("workflow_id");
  e.step = r.string("step");
  e.peer = r.string("peer");
  e.boundary = r.string("boundary") == "gateway_resource" ? Boundary::gateway_resource : Boundary::principal_gateway;
  e.direction = r.string("direction") == "outbound" ? Direction::outbound : Direction::inbound;
  e.message_type = r.string("message_type");
  auto d = r.string("decision");
  e.decision = d == "block" ? Decision::block : d == "redact" ? Decision::redact : Decision::allow;
  e.rule_id = r.string("rule_id");
  e.matched_rules = r.strings("matched_rules");
  r.finish();
  return e;
}

GuardLog::GuardLog(Clock clock) : clock_(std::move(clock)) {}

void GuardLog::append(GuardEvent e) {
  std::lock_guard lock(mu_);
  auto& list = by_workflow_[e.workflow_id];
  e.seq = next_seq_++;
  e.at = clock_();
  if (!list.empty()) e.at = std::max(e.at, list.back().at);
  list.push_back(std::move(e));
}

std::vector<GuardEvent> GuardLog::events(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  auto it = by_workflow_.find(workflow_id);
  if (it == by_workflow_.end()) return {};
  return it->second;
}

std::size_t GuardLog::total() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, v] : by_workflow_) n += v.size();
  return n;
}

bool GuardLog::knows(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  return by_workflow_.contains(workflow_id);
}

namespace {

// Visits every free-text field of a message with a mutable reference.
template <class F>
void for_each_text(Message& m, F&& f) {
  auto visit_values = [&](ValueMap& values) {
    for (auto& [_, v] : values) {
      if (auto* s = std::get_if<std::string>(&v)) f(*s);
    }
  };
  auto visit_manifest = [&](ResourceManifest& man) {
    f(man.name);
    f(man.description);
    for (auto& ex : man.usage_examples) f(ex);
  };
  std::visit(
      [&](auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ResourceQuery>) {
          f(x.context_summary);
          for (auto& t : x.subtasks) f(t.description);
        } else if constexpr (std::is_same_v<T, ResourceOffer>) {
          for (auto& [_, list] : x.per_task) {
            for (auto& sm : list) visit_manifest(sm.manifest);
          }
        } else if constexpr (std::is_same_v<T, ExecutionCommand>) {
          visit_values(x.inputs);
        } else if constexpr (std::is_same_v<T, ExecutionResult>) {
          if (x.payload) visit_values(*x.payload);
          if (x.error_message) f(*x.error_message);
        } else if constexpr (std::is_same_v<T, ResourceManifest>) {
          visit_manifest(x);
        } else if constexpr (std::is_same_v<T, GatewayIdentity>) {
          f(x.display_name);
        }
      },
      m);
}

}  // namespace

GuardVerdict screen_message(Message& message, Direction direction, const GuardPolicy& policy,
                            GuardLog& log, const ScreenContext& ctx) {
  GuardVerdict total;
  total.direction = direction;
  for_each_text(message, [&](std::string& text) {
    auto v = screen(text, direction, policy);
    for (auto& r : v.matched_rules) {
      if (std::find(total.matched_rules.begin(), total.matched_rules.end(), r) == total.matched_rules.end()) {
        total.matched_rules.push_back(r);
      }
    }
    if (v.decision == Decision::block && total.decision != Decision::block) {
      total.decision = Decision::block;
      total.blocking_rule = v.blocking_rule;
    } else if (v.decision == Decision::redact) {
      text = v.redacted_text;
      if (total.decision == Decision::allow) total.decision = Decision::redact;
    }
  });

  GuardEvent e;
  e.workflow_id = ctx.workflow_id;
  e.step = ctx.step;
  e.peer = ctx.peer;
  e.boundary = ctx.boundary;
  e.direction = direction;
  e.message_type = std::string(message_type_name(message));
  e.decision = total.decision;
  e.rule_id = total.blocking_rule;
  e.matched_rules = total.matched_rules;
  log.append(std::move(e));
  return total;
}

}  // namespace dawn::guard
