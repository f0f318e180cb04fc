#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "dawn/agents.hpp"
#include "dawn/registry.hpp"
#include "test_support.hpp"

namespace dawn::agents {
namespace {

std::shared_ptr<const HrData> bundled() {
  static auto data = std::make_shared<const HrData>(load_hr_data(default_hr_dir()));
  return data;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Independent linear scan over the raw corpus file.
std::set<std::string> scan_profiles(const std::string& title, const std::vector<std::string>& skills,
                                    const std::string& location) {
  static const Json corpus = parse_json(registry::read_file(default_hr_dir() / "profiles.json"));
  std::set<std::string> out;
  for (const auto& p : corpus) {
    if (!title.empty() && lower(p.at("title")) != lower(title)) continue;
    if (!location.empty() && lower(p.at("location")) != lower(location)) continue;
    std::set<std::string> have;
    for (const auto& s : p.at("skills")) have.insert(lower(s));
    bool ok = true;
    for (const auto& s : skills) ok = ok && have.count(lower(s));
    if (ok) out.insert(p.at("profile_id").get<std::string>());
  }
  return out;
}

std::set<std::string> as_set(const std::string& csv) {
  auto v = split_list(csv);
  return {v.begin(), v.end()};
}

ExecutionResult call(const std::string& name, ValueMap inputs, StubBehavior b = {}) {
  auto stub = make_stub(name, bundled(), std::move(b));
  ExecutionCommand c;
  c.command_id = "wf/t/1";
  c.resource_id = "hr." + name;
  c.inputs = std::move(inputs);
  return (*stub)(c);
}

TEST(Corpus, HasFiveHundredProfiles) { EXPECT_EQ(bundled()->profiles.size(), 500u); }

TEST(ProfileSearch, ExampleMatchesLinearScan) {
  auto r = call("profile_search", {{"title", std::string("ML Engineer")},
                                   {"skills", std::string("python,ml")},
                                   {"location", std::string("remote")}});
  ASSERT_TRUE(r.ok()) << r.error_message.value_or("");
  auto expected = scan_profiles("ML Engineer", {"python", "ml"}, "remote");
  EXPECT_FALSE(expected.empty());
  EXPECT_EQ(as_set(std::get<std::string>(r.payload->at("profile_ids"))), expected);
  EXPECT_EQ(std::get<std::int64_t>(r.payload->at("count")), static_cast<std::int64_t>(expected.size()));
}

TEST(ProfileSearch, RandomQueriesMatchLinearScan) {
  std::mt19937_64 rng(31);
  const auto& profiles = bundled()->profiles;
  for (int i = 0; i < 500; ++i) {
    const auto& seed = profiles[rng() % profiles.size()];
    std::string title = rng() % 5 ? seed.title : "";
    std::string location = rng() % 3 ? seed.location : "";
    std::vector<std::string> skills;
    for (const auto& s : seed.skills) {
      if (rng() % 2) skills.push_back(rng() % 2 ? s : lower(s));
    }
    if (rng() % 10 == 0) skills.push_back("cobol");
    if (rng() % 4 == 0) std::transform(title.begin(), title.end(), title.begin(), ::toupper);
    auto got = filter_profiles(profiles, title, skills, location);
    auto expected = scan_profiles(title, skills, location);
    ASSERT_EQ(std::set<std::string>(got.begin(), got.end()), expected) << title << "/" << location;
    ASSERT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

TEST(Schedule, UniqueCommonSlotIsFound) {
  auto data = std::make_shared<HrData>(*bundled());
  data->calendars = {{"ann", {"2026-01-05T09:00", "2026-01-06T10:00", "2026-01-07T11:00"}},
                     {"ben", {"2026-01-06T10:00", "2026-01-07T11:00", "2026-01-08T12:00"}},
                     {"cat", {"2026-01-04T08:00", "2026-01-07T11:00"}}};
  auto out = schedule_interviews({{"profile_ids", std::string("p0001")}}, *data);
  EXPECT_EQ(std::get<std::string>(out.at("slot")), "2026-01-07T11:00");
  EXPECT_EQ(std::get<std::string>(out.at("interviewers")), "ann,ben,cat");
  data->calendars["cat"] = {"2026-01-04T08:00"};
  EXPECT_THROW(schedule_interviews({{"profile_ids", std::string("p0001")}}, *data), AgentError);
}

TEST(Schedule, FirstCommonSlotAgreesWithBruteForce) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::vector<std::string>> cals(1 + rng() % 4);
    for (auto& c : cals) {
      for (int k = 0, n = static_cast<int>(rng() % 8); k < n; ++k) c.push_back("s" + std::to_string(rng() % 10));
    }
    std::string expected;
    for (int s = 0; s < 10 && expected.empty(); ++s) {
      auto slot = "s" + std::to_string(s);
      bool everywhere = std::all_of(cals.begin(), cals.end(), [&](const auto& c) {
        return std::find(c.begin(), c.end(), slot) != c.end();
      });
      if (everywhere) expected = slot;
    }
    ASSERT_EQ(first_common_slot(cals), expected);
  }
}

TEST(JdWrite, MissingRequiredSectionIsAComplianceFailure) {
  auto data = std::make_shared<HrData>(*bundled());
  data->jd_template_sections = {"Summary", "Responsibilities", "Qualifications"};
  ValueMap in{{"title", std::string("ML Engineer")}, {"level", std::string("senior")}, {"location", std::string("remote")}};
  try {
    jd_write(in, *data);
    FAIL();
  } catch (const AgentError& e) {
    EXPECT_EQ(e.code(), "compliance_violation");
    EXPECT_NE(std::string(e.what()).find("Equal Opportunity"), std::string::npos);
  }
  auto ok = jd_write(in, *bundled());
  auto jd = std::get<std::string>(ok.at("jd_text"));
  auto required = guard::policy_lookup("jd.required_sections", bundled()->policy);
  ASSERT_TRUE(required);
  for (const auto& s : *required) {
    EXPECT_NE(jd.find("## " + s + "\n"), std::string::npos) << s;
  }
}

TEST(Agents, LiveOutputsConformToManifestsAndArePure) {
  for (const auto& name : kHrAgents) {
    auto m = hr_manifest(name, "local://hr." + name, "gw");
    EXPECT_TRUE(validate_manifest(m).empty()) << name;
    auto in = sample_inputs(m.input_schema);
    auto a = call(name, in);
    ASSERT_TRUE(a.ok()) << name << ": " << a.error_message.value_or("");
    EXPECT_TRUE(validate_values(m.output_schema, *a.payload).empty()) << name;
    auto b = call(name, in);
    EXPECT_EQ(a.payload, b.payload) << name;
  }
  for (const auto& name : kBuiltins) {
    auto m = builtin_manifest(name);
    auto stub = make_stub(name, nullptr);
    ExecutionCommand c{"wf/t/1", m.resource_id, m.endpoint, sample_inputs(m.input_schema), 1000};
    auto r = (*stub)(c);
    ASSERT_TRUE(r.ok()) << name << ": " << r.error_message.value_or("");
    EXPECT_TRUE(validate_values(m.output_schema, *r.payload).empty()) << name;
  }
}

TEST(Onboarding, ChecklistIsKeyedByLevel) {
  auto junior = onboarding({{"hired", std::string("p1")}, {"level", std::string("Junior")}}, *bundled());
  EXPECT_EQ(std::get<std::string>(junior.at("checklist")), "laptop; accounts; orientation; assign mentor");
  auto staff = onboarding({{"hired", std::string("p1")}, {"level", std::string("staff")}}, *bundled());
  EXPECT_EQ(std::get<std::string>(staff.at("checklist")),
            "laptop; accounts; orientation; architecture review; leadership sync");
  EXPECT_THROW(onboarding({{"hired", std::string("p1")}, {"level", std::string("intern")}}, *bundled()), AgentError);
}

TEST(CollectFeedback, RecommendsHighestAverage) {
  auto data = std::make_shared<HrData>(*bundled());
  data->feedback = {{"p1", "ann", 3, "ok"}, {"p1", "ben", 5, "great"}, {"p2", "ann", 5, "strong"}, {"p2", "ben", 4, "good"}};
  auto out = collect_feedback({{"profile_ids", std::string("p1,p2")}}, *data);
  EXPECT_EQ(std::get<std::string>(out.at("recommended")), "p2");
  EXPECT_EQ(std::get<std::string>(out.at("feedback_doc")),
            "Interview feedback\n- p1 / ann: 3 (ok)\n- p1 / ben: 5 (great)\n- p2 / ann: 5 (strong)\n- p2 / ben: 4 (good)\n");
}

TEST(Stub, SchemaViolationsAreRejectedBeforeTheAgentRuns) {
  auto r = call("profile_search", {{"title", std::int64_t{3}}});
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.error_message->starts_with("schema_violation")) << *r.error_message;
}

TEST(Stub, FailureModes) {
  ValueMap in = sample_inputs(hr_manifest("jd_write", "local://x", "gw").input_schema);
  StubBehavior once;
  once.failure_mode = FailureMode::error_once;
  auto stub = make_stub("jd_write", bundled(), once);
  ExecutionCommand c{"wf/t/1", "hr.jd_write", "local://x", in, 1000};
  EXPECT_FALSE((*stub)(c).ok());
  EXPECT_TRUE((*stub)(c).ok());
  EXPECT_TRUE((*stub)(c).ok());

  StubBehavior always;
  always.failure_mode = FailureMode::always_error;
  stub->set_behavior(always);
  for (int i = 0; i < 3; ++i) EXPECT_FALSE((*stub)(c).ok());

  StubBehavior poisoned;
  poisoned.failure_mode = FailureMode::poisoned_output;
  stub->set_behavior(poisoned);
  auto r = (*stub)(c);
  ASSERT_TRUE(r.ok());
  EXPECT_NE(std::get<std::string>(r.payload->at("jd_text")).find(kDefaultPoison), std::string::npos);
  EXPECT_EQ(stub->calls(), 7u);

  StubBehavior canned;
  canned.canned_outputs[input_fingerprint(in)] = {{"jd_text", std::string("canned")}, {"title", std::string("x")}};
  stub->set_behavior(canned);
  EXPECT_EQ(std::get<std::string>((*stub)(c).payload->at("jd_text")), "canned");
}

TEST(Builtins, CalculatorAndLookup) {
  EXPECT_EQ(std::get<std::int64_t>(calculator({{"op", std::string("add")}, {"a", 2.0}, {"b", 3.0}}).at("result")), 5);
  EXPECT_DOUBLE_EQ(std::get<double>(calculator({{"op", std::string("div")}, {"a", 1.0}, {"b", 4.0}}).at("result")), 0.25);
  EXPECT_THROW(calculator({{"op", std::string("div")}, {"a", 1.0}, {"b", 0.0}}), AgentError);
  auto found = lookup({{"key", std::string("hr.max_interviewers")}}, guard::default_policy());
  EXPECT_EQ(std::get<bool>(found.at("found")), true);
  EXPECT_EQ(std::get<std::string>(found.at("values")), "3");
}

TEST(Lists, SplitAndJoin) {
  EXPECT_EQ(split_list(" a, ,b ,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_list("").empty());
  EXPECT_EQ(join_list({"a", "b"}, "; "), "a; b");
}

}  // namespace
}  // namespace dawn::agents
