#include "dawn/agents.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include "dawn/codec.hpp"
#include "dawn/registry.hpp"

namespace dawn::agents {

std::string_view to_string(FailureMode m) {
  switch (m) {
    case FailureMode::none: return "none";
    case FailureMode::error_once: return "error_once";
    case FailureMode::always_error: return "always_error";
    case FailureMode::slow: return "slow";
    case FailureMode::poisoned_output: return "poisoned_output";
  }
  return "none";
}

std::optional<FailureMode> failure_mode_from_string(std::string_view s) {
  for (auto m : {FailureMode::none, FailureMode::error_once, FailureMode::always_error, FailureMode::slow,
                 FailureMode::poisoned_output}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::string input_fingerprint(const ValueMap& inputs) { return to_json(inputs).dump(); }

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string_view::npos) return "";
  auto e = s.find_last_not_of(" \t\n\r");
  return std::string(s.substr(b, e - b + 1));
}

const std::string& str(const ValueMap& in, const std::string& key) {
  auto it = in.find(key);
  if (it == in.end()) throw AgentError("schema_violation", "missing required field: " + key);
  const auto* s = std::get_if<std::string>(&it->second);
  if (!s) throw AgentError("schema_violation", "field " + key + " expected string");
  return *s;
}

double num(const ValueMap& in, const std::string& key) {
  auto it = in.find(key);
  if (it == in.end()) throw AgentError("schema_violation", "missing required field: " + key);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw AgentError("schema_violation", "field " + key + " expected float");
}

FieldSpec field(std::string name, ScalarType t, bool required = true, std::optional<Scalar> example = std::nullopt) {
  return {std::move(name), t, required, std::move(example)};
}

}  // namespace

// ---------------------------------------------------------------------------

Stub::Stub(std::string name, Schema input_schema, AgentFn fn, StubBehavior behavior)
    : name_(std::move(name)), input_schema_(std::move(input_schema)), fn_(std::move(fn)), behavior_(std::move(behavior)) {}

void Stub::set_behavior(StubBehavior behavior) {
  std::lock_guard lk(mu_);
  behavior_ = std::move(behavior);
  failed_once_ = false;
}

ExecutionResult Stub::operator()(const ExecutionCommand& cmd) {
  ++calls_;
  StubBehavior b;
  {
    std::lock_guard lk(mu_);
    b = behavior_;
  }
  auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  };
  auto sleep_ms = b.failure_mode == FailureMode::slow ? b.slow_ms : b.latency_ms;
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

  auto violations = validate_values(input_schema_, cmd.inputs);
  if (!violations.empty()) {
    return ExecutionResult::failure(cmd.command_id, "schema_violation: " + violations.front(), elapsed());
  }
  if (b.failure_mode == FailureMode::always_error) {
    return ExecutionResult::failure(cmd.command_id, "upstream_error: " + name_ + " is configured to fail", elapsed());
  }
  if (b.failure_mode == FailureMode::error_once && !failed_once_.exchange(true)) {
    return ExecutionResult::failure(cmd.command_id, "upstream_error: " + name_ + " transient failure", elapsed());
  }

  ValueMap out;
  if (auto c = b.canned_outputs.find(input_fingerprint(cmd.inputs)); c != b.canned_outputs.end()) {
    out = c->second;
  } else {
    try {
      out = fn_(cmd.inputs);
    } catch (const AgentError& e) {
      return ExecutionResult::failure(cmd.command_id, e.code() + ": " + e.what(), elapsed());
    }
  }
  if (b.failure_mode == FailureMode::poisoned_output) {
    bool done = false;
    for (auto& [k, v] : out) {
      if (auto* s = std::get_if<std::string>(&v)) {
        *s += " " + b.poison;
        done = true;
        break;
      }
    }
    if (!done) out["note"] = b.poison;
  }
  return ExecutionResult::success(cmd.command_id, std::move(out), elapsed());
}

ResourceHandler as_handler(std::shared_ptr<Stub> stub) {
  return [stub](const ExecutionCommand& cmd) { return (*stub)(cmd); };
}

// ---------------------------------------------------------------------------
// Helpers

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto part = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!part.empty()) out.push_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string first_common_slot(const std::vector<std::vector<std::string>>& calendars) {
  if (calendars.empty()) return "";
  std::set<std::string> common(calendars.front().begin(), calendars.front().end());
  for (std::size_t i = 1; i < calendars.size(); ++i) {
    std::set<std::string> next;
    for (const auto& s : calendars[i]) {
      if (common.count(s)) next.insert(s);
    }
    common = std::move(next);
  }
  return common.empty() ? "" : *common.begin();
}

std::vector<std::string> filter_profiles(const std::vector<Profile>& profiles, std::string_view title,
                                         const std::vector<std::string>& skills, std::string_view location) {
  auto want_title = lower(title);
  auto want_loc = lower(location);
  std::vector<std::string> out;
  for (const auto& p : profiles) {
    if (!want_title.empty() && lower(p.title) != want_title) continue;
    if (!want_loc.empty() && lower(p.location) != want_loc) continue;
    bool all = std::all_of(skills.begin(), skills.end(), [&](const std::string& s) {
      auto w = lower(s);
      return std::any_of(p.skills.begin(), p.skills.end(), [&](const std::string& h) { return lower(h) == w; });
    });
    if (all) out.push_back(p.profile_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// HR data

std::filesystem::path default_hr_dir() { return guard::default_data_dir() / "hr"; }

HrData load_hr_data(const std::filesystem::path& dir, guard::GuardPolicy policy) {
  HrData d;
  d.policy = std::move(policy);
  auto profiles = parse_json(registry::read_file(dir / "profiles.json"));
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    JsonReader r(profiles[i], "$[" + std::to_string(i) + "]");
    Profile p;
    p.profile_id = r.string("profile_id");
    p.name = r.string("name");
    p.title = r.string("title");
    p.skills = r.strings("skills");
    p.location = r.string("location");
    p.years = static_cast<int>(r.integer("years"));
    r.finish();
    d.profiles.push_back(std::move(p));
  }
  auto cal = parse_json(registry::read_file(dir / "calendars.json"));
  for (const auto& [who, slots] : cal.at("interviewers").items()) {
    d.calendars[who] = slots.get<std::vector<std::string>>();
  }
  auto fb = parse_json(registry::read_file(dir / "feedback.json"));
  for (std::size_t i = 0; i < fb.size(); ++i) {
    JsonReader r(fb[i], "$[" + std::to_string(i) + "]");
    FeedbackRecord f;
    f.profile_id = r.string("profile_id");
    f.interviewer = r.string("interviewer");
    f.score = static_cast<int>(r.integer("score"));
    f.comment = r.string("comment");
    r.finish();
    d.feedback.push_back(std::move(f));
  }
  d.jd_template_sections = {"Summary", "Responsibilities", "Qualifications", "Equal Opportunity"};
  return d;
}

// ---------------------------------------------------------------------------
// HR agents

ValueMap jd_write(const ValueMap& in, const HrData& data) {
  const auto& title = str(in, "title");
  const auto& level = str(in, "level");
  const auto& location = str(in, "location");
  auto required = guard::policy_lookup("jd.required_sections", data.policy).value_or(std::vector<std::string>{});
  for (const auto& s : required) {
    if (std::find(data.jd_template_sections.begin(), data.jd_template_sections.end(), s) ==
        data.jd_template_sections.end()) {
      throw AgentError("compliance_violation", "job description template lacks required section " + s);
    }
  }
  std::string jd = "Job Description: " + level + " " + title + " (" + location + ")\n";
  for (const auto& s : data.jd_template_sections) {
    jd += "## " + s + "\n";
    if (s == "Summary") jd += "We are hiring a " + level + " " + title + ".\n";
    else if (s == "Responsibilities") jd += "Design, build and operate " + title + " systems.\n";
    else if (s == "Qualifications") jd += "Experience appropriate to a " + level + " role.\n";
    else if (s == "Equal Opportunity") jd += "We are an equal opportunity employer.\n";
    else jd += "\n";
  }
  return {{"jd_text", jd}, {"title", title}};
}

ValueMap profile_search(const ValueMap& in, const HrData& data) {
  auto ids = filter_profiles(data.profiles, str(in, "title"), split_list(str(in, "skills")), str(in, "location"));
  return {{"profile_ids", join_list(ids)}, {"count", static_cast<std::int64_t>(ids.size())}};
}

ValueMap schedule_interviews(const ValueMap& in, const HrData& data) {
  const auto& ids = str(in, "profile_ids");
  if (split_list(ids).empty()) throw AgentError("upstream_error", "no candidates to schedule");
  std::size_t max = 3;
  if (auto f = guard::policy_lookup("hr.max_interviewers", data.policy); f && !f->empty()) {
    max = static_cast<std::size_t>(std::stoul(f->front()));
  }
  std::vector<std::string> names;
  if (auto it = in.find("interviewers"); it != in.end()) {
    names = split_list(render(it->second));
  } else {
    for (const auto& [who, _] : data.calendars) names.push_back(who);
  }
  if (names.size() > max) names.resize(max);
  std::vector<std::vector<std::string>> cals;
  for (const auto& n : names) {
    auto it = data.calendars.find(n);
    if (it == data.calendars.end()) throw AgentError("upstream_error", "no calendar for " + n);
    cals.push_back(it->second);
  }
  auto slot = first_common_slot(cals);
  if (slot.empty()) throw AgentError("upstream_error", "no common free slot");
  return {{"slot", slot}, {"interviewers", join_list(names)}, {"profile_ids", ids}};
}

ValueMap collect_feedback(const ValueMap& in, const HrData& data) {
  auto ids = split_list(str(in, "profile_ids"));
  std::string doc = "Interview feedback\n";
  std::string best;
  double best_avg = -1.0;
  for (const auto& id : ids) {
    int total = 0;
    int n = 0;
    for (const auto& f : data.feedback) {
      if (f.profile_id != id) continue;
      doc += "- " + id + " / " + f.interviewer + ": " + std::to_string(f.score) + " (" + f.comment + ")\n";
      total += f.score;
      ++n;
    }
    if (n == 0) continue;
    double avg = static_cast<double>(total) / n;
    if (avg > best_avg) {
      best_avg = avg;
      best = id;
    }
  }
  if (best.empty()) {
    if (ids.empty()) throw AgentError("upstream_error", "no candidates");
    best = ids.front();
  }
  return {{"feedback_doc", doc}, {"recommended", best}};
}

ValueMap hiring_decision(const ValueMap& in, const HrData&) {
  const auto& who = str(in, "recommended");
  const auto& doc = str(in, "feedback_doc");
  return {{"decision_doc", "Decision: offer to " + who + "\n" + doc}, {"hired", who}};
}

ValueMap onboarding(const ValueMap& in, const HrData& data) {
  const auto& who = str(in, "hired");
  auto level = lower(str(in, "level"));
  auto levels = guard::policy_lookup("hr.onboarding_levels", data.policy).value_or(std::vector<std::string>{});
  if (std::find(levels.begin(), levels.end(), level) == levels.end()) {
    throw AgentError("upstream_error", "unknown level " + level);
  }
  std::vector<std::string> items = {"laptop", "accounts", "orientation"};
  if (level == "junior") items.push_back("assign mentor");
  if (level == "senior" || level == "staff") items.push_back("architecture review");
  if (level == "staff") items.push_back("leadership sync");
  return {{"checklist", join_list(items, "; ")}, {"hired", who}};
}

namespace {

struct HrSpec {
  std::string description;
  std::vector<std::string> examples;
  Schema input;
  Schema output;
  ValueMap (*fn)(const ValueMap&, const HrData&);
};

const std::map<std::string, HrSpec>& hr_specs() {
  static const std::map<std::string, HrSpec> specs = {
      {"jd_write",
       {"Writes a job description for an open role from the title, level and location, including the "
        "required compliance sections.",
        {"write a job description for a senior ML engineer", "draft a JD for a hiring requisition"},
        {field("title", ScalarType::string, true, std::string("ML Engineer")),
         field("level", ScalarType::string, true, std::string("senior")),
         field("location", ScalarType::string, true, std::string("remote"))},
        {field("jd_text", ScalarType::string), field("title", ScalarType::string)},
        &jd_write}},
      {"profile_search",
       {"Searches candidate profiles by job title, skills and location to source matching candidates.",
        {"search candidate profiles for ML engineers with python", "source candidates matching a job description"},
        {field("title", ScalarType::string, true, std::string("ML Engineer")),
         field("skills", ScalarType::string, true, std::string("python,ml")),
         field("location", ScalarType::string, true, std::string("remote"))},
        {field("profile_ids", ScalarType::string), field("count", ScalarType::integer)},
        &profile_search}},
      {"schedule_interviews",
       {"Schedules interviews for candidates by finding the first common free slot in interviewer calendars.",
        {"schedule interviews with the shortlisted candidates", "find a common interview slot on calendars"},
        {field("profile_ids", ScalarType::string, true, std::string("p0001")),
         field("interviewers", ScalarType::string, false)},
        {field("slot", ScalarType::string), field("interviewers", ScalarType::string),
         field("profile_ids", ScalarType::string)},
        &schedule_interviews}},
      {"collect_feedback",
       {"Collects interviewer feedback records for candidates and aggregates them into one feedback document.",
        {"collect interview feedback from interviewers", "aggregate feedback scores for candidates"},
        {field("profile_ids", ScalarType::string, true, std::string("p0001"))},
        {field("feedback_doc", ScalarType::string), field("recommended", ScalarType::string)},
        &collect_feedback}},
      {"hiring_decision",
       {"Records the human hiring decision for the recommended candidate as a decision document.",
        {"record the final hiring decision", "make the hire or no hire decision"},
        {field("recommended", ScalarType::string, true, std::string("p0001")),
         field("feedback_doc", ScalarType::string, true, std::string("none"))},
        {field("decision_doc", ScalarType::string), field("hired", ScalarType::string)},
        &hiring_decision}},
      {"onboarding",
       {"Creates an onboarding checklist for the new hire keyed by seniority level.",
        {"onboard the new hire", "prepare the onboarding checklist for a new employee"},
        {field("hired", ScalarType::string, true, std::string("p0001")),
         field("level", ScalarType::string, true, std::string("senior"))},
        {field("checklist", ScalarType::string), field("hired", ScalarType::string)},
        &onboarding}},
  };
  return specs;
}

const HrSpec& hr_spec(const std::string& name) {
  auto it = hr_specs().find(name);
  if (it == hr_specs().end()) throw Error(ErrorCode::unknown_resource, "no HR agent named " + name);
  return it->second;
}

}  // namespace

ResourceManifest hr_manifest(const std::string& name, const std::string& endpoint, const std::string& owner_gateway) {
  const auto& spec = hr_spec(name);
  ResourceManifest m;
  m.resource_id = "hr." + name;
  m.kind = ResourceKind::agent;
  m.name = name;
  m.description = spec.description;
  m.usage_examples = spec.examples;
  m.endpoint = endpoint;
  m.input_schema = spec.input;
  m.output_schema = spec.output;
  m.owner_gateway = owner_gateway;
  return m;
}

AgentFn hr_agent(const std::string& name, std::shared_ptr<const HrData> data) {
  auto fn = hr_spec(name).fn;
  return [fn, data](const ValueMap& in) { return fn(in, *data); };
}

// ---------------------------------------------------------------------------
// Builtins

ValueMap calculator(const ValueMap& in) {
  const auto& op = str(in, "op");
  double a = num(in, "a");
  double b = num(in, "b");
  double r = 0;
  if (op == "add") r = a + b;
  else if (op == "sub") r = a - b;
  else if (op == "mul") r = a * b;
  else if (op == "div") {
    if (b == 0) throw AgentError("upstream_error", "division by zero");
    r = a / b;
  } else {
    throw AgentError("schema_violation", "unknown op " + op);
  }
  // Integral results are reported as integers.
  if (std::isfinite(r) && r == std::floor(r) && std::fabs(r) < 9.0e15) {
    return {{"result", static_cast<std::int64_t>(r)}};
  }
  return {{"result", r}};
}

ValueMap echo(const ValueMap& in) { return {{"text", str(in, "text")}}; }

ValueMap lookup(const ValueMap& in, const guard::GuardPolicy& policy) {
  auto v = guard::policy_lookup(str(in, "key"), policy);
  return {{"found", v.has_value()}, {"values", v ? join_list(*v) : std::string()}};
}

ResourceManifest builtin_manifest(const std::string& name, const std::string& owner_gateway) {
  ResourceManifest m;
  m.resource_id = "builtin." + name;
  m.kind = ResourceKind::tool;
  m.name = name;
  m.endpoint = "local://builtin." + name;
  m.owner_gateway = owner_gateway;
  if (name == "calculator") {
    m.description = "Calculator tool that can add, subtract, multiply or divide two numbers.";
    m.usage_examples = {"add two numbers", "calculate the sum of 2 and 3"};
    m.input_schema = {field("op", ScalarType::string, true, std::string("add")),
                      field("a", ScalarType::floating, true, 2.0), field("b", ScalarType::floating, true, 3.0)};
    m.output_schema = {field("result", ScalarType::floating)};
  } else if (name == "echo") {
    m.description = "Echo tool that returns the given text unchanged.";
    m.usage_examples = {"echo a message back"};
    m.input_schema = {field("text", ScalarType::string, true, std::string("hello"))};
    m.output_schema = {field("text", ScalarType::string)};
  } else if (name == "lookup") {
    m.description = "Lookup tool that reads a policy fact by its exact key.";
    m.usage_examples = {"lookup the required job description sections"};
    m.input_schema = {field("key", ScalarType::string, true, std::string("jd.required_sections"))};
    m.output_schema = {field("found", ScalarType::boolean), field("values", ScalarType::string)};
  } else {
    throw Error(ErrorCode::unknown_resource, "no builtin named " + name);
  }
  return m;
}

AgentFn builtin_agent(const std::string& name, const guard::GuardPolicy& policy) {
  if (name == "calculator") return calculator;
  if (name == "echo") return echo;
  if (name == "lookup") return [policy](const ValueMap& in) { return lookup(in, policy); };
  throw Error(ErrorCode::unknown_resource, "no builtin named " + name);
}

std::shared_ptr<Stub> make_stub(const std::string& name, std::shared_ptr<const HrData> data, StubBehavior behavior) {
  if (std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end()) {
    auto policy = data ? data->policy : guard::default_policy();
    return std::make_shared<Stub>(name, builtin_manifest(name).input_schema, builtin_agent(name, policy),
                                  std::move(behavior));
  }
  if (!data) throw Error(ErrorCode::unknown_resource, "HR agent " + name + " needs HR data");
  return std::make_shared<Stub>(name, hr_spec(name).input, hr_agent(name, data), std::move(behavior));
}

}  // namespace dawn::agents
