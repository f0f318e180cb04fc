#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "dawn/eval.hpp"
#include "dawn/registry.hpp"
#include "test_support.hpp"

namespace dawn::eval {
namespace {

using testing::TempDir;

// Reachability by depth-first search over the truth dependencies.
bool reaches(const GroundTruthCase& c, const std::string& from, const std::string& to) {
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& t : c.truth_tasks) {
    for (const auto& d : t.depends_on) succ[d].push_back(t.task_id);
  }
  std::vector<std::string> stack = {from};
  std::set<std::string> seen;
  while (!stack.empty()) {
    auto x = stack.back();
    stack.pop_back();
    if (x == to) return true;
    if (!seen.insert(x).second) continue;
    for (const auto& y : succ[x]) stack.push_back(y);
  }
  return false;
}

bool direct_edge(const GroundTruthCase& c, const std::string& a, const std::string& b) {
  for (const auto& t : c.truth_tasks) {
    if (t.task_id == b) return std::find(t.depends_on.begin(), t.depends_on.end(), a) != t.depends_on.end();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Ground truth cases

TEST(Cases, TenAcyclicCasesOfSixToTenTasks) {
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 12345ull}) {
    auto cases = generate_cases(seed);
    ASSERT_EQ(cases.size(), 10u);
    std::set<std::string> ids;
    for (const auto& c : cases) {
      EXPECT_TRUE(ids.insert(c.case_id).second);
      EXPECT_GE(c.truth_tasks.size(), 6u);
      EXPECT_LE(c.truth_tasks.size(), 10u);
      EXPECT_TRUE(check_dag(c.truth_tasks).ok) << c.case_id;
      EXPECT_FALSE(c.intent_text.empty());
      std::set<std::string> before;
      for (const auto& t : c.truth_tasks) {
        for (const auto& d : t.depends_on) EXPECT_TRUE(before.count(d)) << c.case_id << " " << t.task_id;
        before.insert(t.task_id);
      }
    }
  }
}

TEST(Cases, SameSeedIsIdenticalAndSeedsDiffer) {
  auto dump = [](const std::vector<GroundTruthCase>& cs) {
    Json j = Json::array();
    for (const auto& c : cs) {
      Json tasks = Json::array();
      for (const auto& t : c.truth_tasks) tasks.push_back(to_json(t));
      j.push_back({{"id", c.case_id}, {"intent", c.intent_text}, {"tasks", tasks}});
    }
    return j.dump();
  };
  EXPECT_EQ(dump(generate_cases(3)), dump(generate_cases(3)));
  EXPECT_NE(dump(generate_cases(3)), dump(generate_cases(4)));
}

TEST(Cases, ReorderToleranceIsMutualUnreachability) {
  for (const auto& c : generate_cases(11)) {
    for (const auto& a : c.truth_tasks) {
      for (const auto& b : c.truth_tasks) {
        if (a.task_id == b.task_id) continue;
        bool expected = !reaches(c, a.task_id, b.task_id) && !reaches(c, b.task_id, a.task_id);
        ASSERT_EQ(reorder_tolerant(c, a.task_id, b.task_id), expected) << c.case_id;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Task list scoring

TEST(Score, OverlapCoefficient) {
  EXPECT_DOUBLE_EQ(overlap_coefficient({"a", "b"}, {"b", "c", "d"}), 0.5);
  EXPECT_DOUBLE_EQ(overlap_coefficient({"a"}, {"a", "b", "c"}), 1.0);
  EXPECT_DOUBLE_EQ(overlap_coefficient({}, {"a"}), 0.0);
  auto t = normalized_tokens("Book the flight to Paris");
  EXPECT_TRUE(t.count("book"));
  EXPECT_TRUE(t.count("flight"));
  EXPECT_FALSE(t.count("the"));
}

TEST(Score, TruthIsASuccess) {
  for (const auto& c : generate_cases(1)) {
    auto s = score_task_list(c.truth_tasks, c);
    EXPECT_TRUE(s.success) << c.case_id;
    EXPECT_TRUE(s.missing.empty());
    EXPECT_TRUE(s.extra.empty());
  }
}

TEST(Score, SwappingIndependentTasksIsAcceptedAndDependentIsNot) {
  int independent = 0, dependent = 0;
  for (const auto& c : generate_cases(2)) {
    for (std::size_t i = 0; i + 1 < c.truth_tasks.size(); ++i) {
      auto cand = c.truth_tasks;
      std::swap(cand[i], cand[i + 1]);
      auto s = score_task_list(cand, c);
      EXPECT_TRUE(s.complete);
      const auto& a = c.truth_tasks[i].task_id;
      const auto& b = c.truth_tasks[i + 1].task_id;
      if (reorder_tolerant(c, a, b)) {
        EXPECT_TRUE(s.success) << c.case_id << " " << a << "<->" << b;
        ++independent;
      } else if (direct_edge(c, a, b)) {
        EXPECT_FALSE(s.order_ok) << c.case_id << " " << a << "<->" << b;
        EXPECT_FALSE(s.success);
        EXPECT_FALSE(s.order_violations.empty());
        ++dependent;
      }
    }
  }
  EXPECT_GT(independent, 0);
  EXPECT_GT(dependent, 0);
}

TEST(Score, MissingTaskIsIncomplete) {
  for (const auto& c : generate_cases(5)) {
    for (std::size_t drop = 0; drop < c.truth_tasks.size(); ++drop) {
      auto cand = c.truth_tasks;
      auto gone = cand[drop].description;
      cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(drop));
      auto s = score_task_list(cand, c);
      ASSERT_FALSE(s.complete);
      ASSERT_FALSE(s.success);
      ASSERT_EQ(s.missing, std::vector<std::string>{gone});
    }
  }
}

TEST(Score, ExtraTaskIsIncomplete) {
  auto c = generate_cases(5).front();
  auto cand = c.truth_tasks;
  cand.push_back({"zz", "juggle seven flaming torches", {}});
  auto s = score_task_list(cand, c);
  EXPECT_FALSE(s.complete);
  EXPECT_EQ(s.extra, std::vector<std::string>{"juggle seven flaming torches"});
}

TEST(Score, InvariantUnderTaskIdRelabelling) {
  std::mt19937_64 rng(77);
  for (const auto& c : generate_cases(9)) {
    for (int trial = 0; trial < 20; ++trial) {
      auto cand = c.truth_tasks;
      if (rng() % 2 && cand.size() > 1) std::swap(cand[rng() % cand.size()], cand[rng() % cand.size()]);
      if (rng() % 3 == 0) cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(rng() % cand.size()));
      auto base = score_task_list(cand, c);
      std::map<std::string, std::string> rename;
      for (const auto& t : cand) rename[t.task_id] = "x" + std::to_string(rng());
      auto relabelled = cand;
      for (auto& t : relabelled) {
        t.task_id = rename[t.task_id];
        for (auto& d : t.depends_on) d = rename.count(d) ? rename[d] : d;
      }
      auto s = score_task_list(relabelled, c);
      ASSERT_EQ(s.complete, base.complete);
      ASSERT_EQ(s.order_ok, base.order_ok);
      ASSERT_EQ(s.success, base.success);
      ASSERT_EQ(s.missing, base.missing);
    }
  }
}

// ---------------------------------------------------------------------------
// Planner evaluation

TEST(PlannerEval, PerfectProviderScoresOne) {
  auto cases = generate_cases(7);
  CaseProvider p(cases, 0.0, 7);
  auto r = run_planner_eval(p, cases, kDefaultRepeats, planner::Strategy::react, 7);
  EXPECT_EQ(r.trials, 50);
  EXPECT_EQ(r.successes, 50);
  EXPECT_DOUBLE_EQ(r.success_rate, 1.0);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(to_json(r).at("seed"), 7);
}

TEST(PlannerEval, AlwaysDroppingProviderScoresZeroWithDiffs) {
  auto cases = generate_cases(7);
  CaseProvider p(cases, 1.0, 7);
  auto r = run_planner_eval(p, cases, 2);
  EXPECT_EQ(r.successes, 0);
  ASSERT_EQ(r.failures.size(), 20u);
  for (const auto& f : r.failures) EXPECT_EQ(f.score.missing.size(), 1u) << f.case_id;
}

TEST(PlannerEval, NoisyProviderMatchesItsBinomialExpectation) {
  auto cases = generate_cases(7);
  const int repeats = 20;  // 200 trials
  CaseProvider p(cases, 0.25, 99);
  auto r = run_planner_eval(p, cases, repeats, planner::Strategy::react, 99);
  ASSERT_EQ(r.trials, 200);
  EXPECT_EQ(static_cast<std::uint64_t>(r.trials), p.trials());
  // Each trial succeeds exactly when nothing was dropped.
  EXPECT_EQ(static_cast<std::uint64_t>(r.successes), p.trials() - p.drops());
  EXPECT_DOUBLE_EQ(r.success_rate, expected_case_provider_rate(99, 0.25, cases, repeats));
  EXPECT_NEAR(r.success_rate, 0.75, 0.1);
  EXPECT_EQ(static_cast<int>(r.failures.size()), r.trials - r.successes);
}

TEST(PlannerEval, SameSeedSameReport) {
  auto cases = generate_cases(3);
  CaseProvider a(cases, 0.3, 5);
  CaseProvider b(cases, 0.3, 5);
  EXPECT_EQ(to_json(run_planner_eval(a, cases, 3, planner::Strategy::react, 5)),
            to_json(run_planner_eval(b, cases, 3, planner::Strategy::react, 5)));
}

TEST(PlannerEval, UnitDrawIsInUnitInterval) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100000; ++i) {
    double u = unit_draw(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

// ---------------------------------------------------------------------------
// IR corpus and evaluation

std::string slurp(const std::filesystem::path& p) { return registry::read_file(p); }

TEST(IrCorpus, ValidAndSeedDeterministic) {
  auto a = generate_ir_corpus(7);
  EXPECT_EQ(a.manifests.size(), kIrAgents);
  EXPECT_EQ(a.queries.size(), kIrQueries);
  EXPECT_TRUE(a.problems().empty());
  std::set<std::string> ids;
  for (const auto& m : a.manifests) ids.insert(m.resource_id);
  for (const auto& q : a.queries) {
    ASSERT_FALSE(q.relevant.empty());
    for (const auto& r : q.relevant) ASSERT_TRUE(ids.count(r));
  }
  TempDir d1, d2, d3;
  write_ir_corpus(a, d1.path());
  write_ir_corpus(generate_ir_corpus(7), d2.path());
  write_ir_corpus(generate_ir_corpus(8), d3.path());
  EXPECT_EQ(slurp(d1 / "manifests.json"), slurp(d2 / "manifests.json"));
  EXPECT_EQ(slurp(d1 / "queries.jsonl"), slurp(d2 / "queries.jsonl"));
  EXPECT_NE(slurp(d1 / "queries.jsonl"), slurp(d3 / "queries.jsonl"));

  auto back = read_ir_corpus(d1.path());
  EXPECT_EQ(back.manifests, a.manifests);
  ASSERT_EQ(back.queries.size(), a.queries.size());
  for (std::size_t i = 0; i < a.queries.size(); ++i) {
    EXPECT_EQ(back.queries[i].text, a.queries[i].text);
    EXPECT_EQ(back.queries[i].relevant, a.queries[i].relevant);
  }
}

TEST(IrCorpus, ProblemsAreReported) {
  auto c = generate_ir_corpus(7);
  c.queries[0].relevant = {"no-such-agent"};
  c.queries[1].relevant.clear();
  EXPECT_EQ(c.problems().size(), 2u);
}

TEST(IrMetricsTest, ScoreRankingMatchesDefinitions) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> pool;
    for (int i = 0; i < 8; ++i) pool.push_back("a" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> ranking(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rng() % 6));
    std::set<std::string> rel;
    for (const auto& p : pool) {
      if (rng() % 4 == 0) rel.insert(p);
    }
    if (rel.empty()) rel.insert(pool[0]);
    auto m = score_ranking(ranking, rel);
    auto dcg = [&](std::size_t k) {
      double s = 0;
      for (std::size_t i = 0; i < k && i < ranking.size(); ++i) s += rel.count(ranking[i]) ? 1.0 / std::log2(i + 2.0) : 0;
      return s;
    };
    auto idcg = [&](std::size_t k) {
      double s = 0;
      for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) s += 1.0 / std::log2(i + 2.0);
      return s;
    };
    auto recall = [&](std::size_t k) {
      double h = 0;
      for (std::size_t i = 0; i < k && i < ranking.size(); ++i) h += rel.count(ranking[i]) ? 1 : 0;
      return h / static_cast<double>(rel.size());
    };
    ASSERT_NEAR(m.ndcg1, dcg(1) / idcg(1), 1e-12);
    ASSERT_NEAR(m.ndcg3, dcg(3) / idcg(3), 1e-12);
    ASSERT_NEAR(m.recall1, recall(1), 1e-12);
    ASSERT_NEAR(m.recall3, recall(3), 1e-12);
    ASSERT_NEAR(m.recall5, recall(5), 1e-12);
  }
}

TEST(IrEval, OracleRerankerIsTheUpperBound) {
  auto c = generate_ir_corpus(7);
  // Stage-1 survival by an independent full sort.
  double survived = 0;
  for (const auto& q : c.queries) {
    auto qe = retrieval::embed(q.text);
    std::vector<std::pair<double, std::string>> all;
    for (const auto& m : c.manifests) {
      auto me = retrieval::embed(m.search_text());
      double dot = 0;
      for (std::size_t i = 0; i < retrieval::kEmbeddingDim; ++i) dot += qe.values[i] * me.values[i];
      all.emplace_back(-dot, m.resource_id);
    }
    std::sort(all.begin(), all.end());
    bool hit = false;
    for (std::size_t i = 0; i < 5; ++i) hit = hit || q.relevant.count(all[i].second);
    survived += hit ? 1 : 0;
  }
  OracleReranker oracle(c);
  auto r = run_ir_eval(c, oracle);
  double expected = survived / static_cast<double>(c.queries.size());
  EXPECT_NEAR(r.stage2.ndcg1, expected, 1e-9);
  EXPECT_GE(r.stage2.ndcg1, r.stage1.ndcg1);
  EXPECT_GE(r.stage2.ndcg3, r.stage1.ndcg3);
  EXPECT_NEAR(r.stage2.recall5, r.stage1.recall5, 1e-12);
  EXPECT_EQ(r.reranker, "oracle");
}

TEST(IrEval, LexicalRerankerDoesNotHurtNdcgAtOne) {
  auto c = generate_ir_corpus(7);
  retrieval::LexicalOverlapReranker lex;
  auto r = run_ir_eval(c, lex);
  EXPECT_GE(r.stage2.ndcg1, r.stage1.ndcg1);
  EXPECT_EQ(r.fallbacks, 0u);
}

TEST(IrEval, SerialAndParallelRunsAgreeExactly) {
  auto c = generate_ir_corpus(21);
  retrieval::LexicalOverlapReranker lex;
  auto a = to_json(run_ir_eval(c, lex, retrieval::Execution::serial));
  auto b = to_json(run_ir_eval(c, lex, retrieval::Execution::parallel));
  a.erase("elapsed_ms");
  b.erase("elapsed_ms");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.at("seed"), 21);
}

}  // namespace
}  // namespace dawn::eval
