// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dawn/codec.hpp"
#include "dawn/demo.hpp"
#include "dawn/eval.hpp"
#include "dawn/log.hpp"
#include "dawn/orchestrator.hpp"
#include "dawn/principal.hpp"
#include "dawn/registry.hpp"
#include "dawn/retrieval.hpp"
#include "test_support.hpp"

namespace {

using namespace dawn;
namespace fs = std::filesystem;
using testing::deterministic_exec;
using testing::random_dag;
using testing::TempDir;
using testing::text_handler;
using testing::text_manifest;
using testing::text_workflow;

// Collects the first failure of a criterion.
class Check {
 public:
  bool expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
    return ok;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }
  std::string detail;

 private:
  std::string failure_;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Oracles

// Output of every node under deterministic_exec.
std::map<std::string, std::string> oracle_outputs(const std::vector<TaskSpec>& tasks) {
  std::map<std::string, const TaskSpec*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  std::map<std::string, std::string> memo;
  std::function<std::string(const std::string&)> out = [&](const std::string& id) -> std::string {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const auto& t = *by_id.at(id);
    std::string in = t.depends_on.empty() ? "hello" : out(t.depends_on.back());
    return memo[id] = id + "(" + in + ")";
  };
  for (const auto& t : tasks) out(t.task_id);
  return memo;
}

// Kahn-style layering: the set of tasks whose dependencies are all in `done`.
bool dependencies_met(const TaskSpec& t, const std::set<std::string>& done) {
  return std::all_of(t.depends_on.begin(), t.depends_on.end(), [&](const auto& d) { return done.count(d) > 0; });
}

double oracle_ndcg(const std::vector<std::string>& ranking, const std::map<std::string, double>& graded, int k) {
  double dcg = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranking.size()); ++i) {
    auto it = graded.find(ranking[i]);
    double g = it == graded.end() ? 0.0 : it->second;
    dcg += (std::pow(2.0, g) - 1.0) / std::log2(i + 2.0);
  }
  std::vector<double> ideal;
  for (const auto& [_, g] : graded) ideal.push_back(g);
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0;
  for (int i = 0; i < k && i < static_cast<int>(ideal.size()); ++i) idcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(i + 2.0);
  return idcg == 0 ? 0.0 : dcg / idcg;
}

double oracle_recall(const std::vector<std::string>& ranking, const std::set<std::string>& rel, int k) {
  if (rel.empty()) return 1.0;
  int hit = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranking.size()); ++i) hit += rel.count(ranking[i]) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(rel.size());
}

// Nearest-rank percentile over a sorted copy.
std::int64_t oracle_percentile(std::vector<std::int64_t> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

// ---------------------------------------------------------------------------
// Criteria

Check hr_demo_end_to_end() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  demo::HrCluster cluster;
  auto result = demo::run_hr_demo(cluster);
  double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const auto& rec = result.record;
  c.expect(rec.at("status") == "completed", "workflow status " + rec.at("status").dump());
  c.expect(cluster.gateway_ids().size() == 2, "expected 2 gateways");
  const auto& nodes = rec.at("graph").at("nodes");
  c.expect(nodes.size() == 6, "expected 6 nodes, got " + std::to_string(nodes.size()));
  std::set<std::string> gateways;
  for (const auto& n : nodes) {
    c.expect(n.at("status") == "succeeded", "node " + n.at("task").at("task_id").dump() + " not succeeded");
    gateways.insert(n.at("gateway_id").get<std::string>());
  }
  c.expect(gateways.size() == 2, "nodes did not span both gateways");
  c.expect(rec.at("node_outputs").size() == 6, "expected 6 node outputs");
  for (const auto& name : agents::kHrAgents) c.expect(cluster.agent(name).calls() >= 2, name + " was not dispatched");

  // Every node's audit records chain pending -> ... -> succeeded with no
  // duplicates and no self transitions.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> hist;
  for (const auto& e : rec.at("audit")) {
    if (e.at("kind") == "node") hist[e.at("task_id")].emplace_back(e.at("from"), e.at("to"));
  }
  for (const auto& n : nodes) {
    std::string id = n.at("task").at("task_id");
    const auto& h = hist[id];
    bool chained = !h.empty() && h.front().first == "pending" && h.back().second == "succeeded";
    for (std::size_t i = 0; i < h.size(); ++i) {
      chained = chained && h[i].first != h[i].second;
      if (i) chained = chained && h[i].first == h[i - 1].second;
    }
    c.expect(chained, "audit history of " + id + " is not one record per status change");
  }
  c.expect(wall < 10000, "wall time " + fmt(wall, 0) + " ms");
  c.detail = "6 nodes, 2 gateways, " + std::to_string(rec.at("audit").size()) + " audit records, " + fmt(wall, 0) + " ms";
  return c;
}

Check fsm_ordering() {
  Check c;
  std::mt19937_64 rng(1001);
  int dispatches = 0;
  const int dags = 1000;
  for (int trial = 0; trial < dags && c.ok(); ++trial) {
    auto tasks = random_dag(rng, 10);
    std::map<std::string, const TaskSpec*> by_id;
    for (const auto& t : tasks) by_id[t.task_id] = &t;
    orchestrator::Orchestrator orch;
    auto wf = "wf-" + std::to_string(trial);
    auto step = orch.run_no_llm(text_workflow(wf, tasks));
    std::set<std::string> done;
    orchestrator::DriveOptions opts;
    opts.rng = &rng;
    opts.before = [&](const orchestrator::Dispatch& d) {
      c.expect(dependencies_met(*by_id.at(d.task_id), done), wf + ": " + d.task_id + " started before a predecessor");
      ++dispatches;
      return true;
    };
    auto exec = [&](const orchestrator::Dispatch& d) {
      done.insert(d.task_id);
      return deterministic_exec(d);
    };
    auto res = drive(orch, step, exec, opts);
    c.expect(res.record.status == orchestrator::WorkflowStatus::completed, wf + " did not complete");
    c.expect(done.size() == tasks.size(), wf + " skipped nodes");
  }
  c.detail = std::to_string(dags) + " DAGs, " + std::to_string(dispatches) + " dispatches, 0 violations";
  return c;
}

Check crash_resume_equivalence() {
  Check c;
  TempDir dir;
  std::mt19937_64 rng(5050);
  int diffs = 0;
  for (int i = 0; i < 50; ++i) {
    auto tasks = random_dag(rng, 10);
    auto wf = "wf-" + std::to_string(i);

    orchestrator::Orchestrator plain;
    auto reference = drive(plain, plain.run_no_llm(text_workflow(wf, tasks)), deterministic_exec).record;

    // Deliver a random number of results, pause, drop the process, then
    // resume from the persisted record in a fresh orchestrator.
    std::size_t pause_after = rng() % (tasks.size() + 1);
    {
      orchestrator::Options o;
      o.store_dir = dir.path();
      orchestrator::Orchestrator first(o);
      std::size_t delivered = 0;
      orchestrator::DriveOptions opts;
      opts.rng = &rng;
      opts.before = [&](const orchestrator::Dispatch&) { return delivered++ < pause_after; };
      drive(first, first.run_no_llm(text_workflow(wf, tasks)), deterministic_exec, opts);
      first.pause(wf);
    }
    orchestrator::Options o;
    o.store_dir = dir.path();
    orchestrator::Orchestrator second(o);
    auto res = drive(second, second.resume(wf), deterministic_exec).record;
    bool same = res.status == orchestrator::WorkflowStatus::completed && res.node_outputs == reference.node_outputs;
    auto expected = oracle_outputs(tasks);
    for (const auto& [id, text] : expected) {
      auto it = res.node_outputs.find(id);
      same = same && it != res.node_outputs.end() && std::get<std::string>(it->second.payload->at("text")) == text;
    }
    if (!same) ++diffs;
    c.expect(same, wf + " differs after pause and resume");
  }
  c.detail = "50 workflows, " + std::to_string(diffs) + " diffs";
  return c;
}

Check ir_oracle_equivalence() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  auto corpus = eval::generate_ir_corpus(7);
  c.expect(corpus.manifests.size() == 200 && corpus.queries.size() == 1000, "corpus is not 200 x 1000");
  c.expect(corpus.problems().empty(), "corpus has problems");

  std::vector<std::vector<double>> emb;
  for (const auto& m : corpus.manifests) {
    auto e = retrieval::embed(m.search_text());
    emb.emplace_back(e.values.begin(), e.values.end());
  }
  double sums[5] = {0, 0, 0, 0, 0};
  for (const auto& q : corpus.queries) {
    auto qe = retrieval::embed(q.text);
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < corpus.manifests.size(); ++i) {
      double dot = 0;
      for (std::size_t d = 0; d < retrieval::kEmbeddingDim; ++d) dot += qe.values[d] * emb[i][d];
      scored.emplace_back(-dot, corpus.manifests[i].resource_id);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> top;
    for (std::size_t i = 0; i < 5; ++i) top.push_back(scored[i].second);
    std::map<std::string, double> graded;
    for (const auto& r : q.relevant) graded[r] = 1.0;
    sums[0] += oracle_ndcg(top, graded, 1);
    sums[1] += oracle_ndcg(top, graded, 3);
    sums[2] += oracle_recall(top, q.relevant, 1);
    sums[3] += oracle_recall(top, q.relevant, 3);
    sums[4] += oracle_recall(top, q.relevant, 5);
  }
  retrieval::IdentityReranker identity;
  auto rep = eval::run_ir_eval(corpus, identity);
  double n = static_cast<double>(corpus.queries.size());
  const double got[5] = {rep.stage1.ndcg1, rep.stage1.ndcg3, rep.stage1.recall1, rep.stage1.recall3, rep.stage1.recall5};
  const char* names[5] = {"NDCG@1", "NDCG@3", "Recall@1", "Recall@3", "Recall@5"};
  for (int i = 0; i < 5; ++i) {
    c.expect(std::abs(got[i] - sums[i] / n) <= 1e-9, std::string(names[i]) + " " + fmt(got[i], 12) + " vs oracle " +
                                                         fmt(sums[i] / n, 12));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60, "runtime " + fmt(secs, 1) + " s");
  c.detail = "NDCG@1 " + fmt(rep.stage1.ndcg1) + ", Recall@5 " + fmt(rep.stage1.recall5) + ", " + fmt(secs, 2) + " s";
  return c;
}

Check metric_correctness() {
  Check c;
  std::mt19937_64 rng(8080);
  const int cases = 2000;
  for (int trial = 0; trial < cases && c.ok(); ++trial) {
    std::vector<std::string> pool;
    for (int i = 0; i < 10; ++i) pool.push_back("d" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> ranking(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rng() % 9));
    std::map<std::string, double> graded;
    std::set<std::string> relevant;
    for (const auto& d : pool) {
      if (rng() % 3 == 0) {
        graded[d] = static_cast<double>(rng() % 4);
        relevant.insert(d);
      }
    }
    for (int k : {1, 2, 3, 5, 10}) {
      double a = retrieval::ndcg_at_k(ranking, graded, k);
      double b = oracle_ndcg(ranking, graded, k);
      c.expect(std::abs(a - b) <= 1e-12, "ndcg@" + std::to_string(k) + " " + fmt(a, 15) + " vs " + fmt(b, 15));
      double r = retrieval::recall_at_k(ranking, relevant, k);
      double s = oracle_recall(ranking, relevant, k);
      c.expect(std::abs(r - s) <= 1e-12, "recall@" + std::to_string(k) + " " + fmt(r, 15) + " vs " + fmt(s, 15));
    }
  }
  std::vector<std::string> hand = {"x", "a", "y"};
  double v = retrieval::ndcg_at_k(hand, {{"a", 1.0}}, 3);
  c.expect(fmt(v) == "0.6309", "hand example " + fmt(v, 6));
  c.detail = std::to_string(cases) + " random cases, hand example " + fmt(v);
  return c;
}

Check planner_eval_bounds() {
  Check c;
  const std::uint64_t seed = 7;
  auto cases = eval::generate_cases(seed);

  eval::CaseProvider perfect(cases, 0.0, seed);
  auto p = eval::run_planner_eval(perfect, cases, eval::kDefaultRepeats, planner::Strategy::react, seed);
  c.expect(p.success_rate == 1.0, "perfect provider rate " + fmt(p.success_rate));

  eval::CaseProvider drop(cases, 1.0, seed);
  auto d = eval::run_planner_eval(drop, cases, eval::kDefaultRepeats, planner::Strategy::react, seed);
  c.expect(d.success_rate == 0.0, "drop-one provider rate " + fmt(d.success_rate));
  for (const auto& f : d.failures) c.expect(!f.score.complete && f.score.missing.size() == 1, "drop-one diff on " + f.case_id);

  const int repeats = 25;  // 250 trials
  eval::CaseProvider noisy(cases, 0.25, seed);
  auto n = eval::run_planner_eval(noisy, cases, repeats, planner::Strategy::react, seed);
  c.expect(n.trials >= 200, "only " + std::to_string(n.trials) + " trials");
  double replay = eval::expected_case_provider_rate(seed, 0.25, cases, repeats);
  c.expect(std::abs(n.success_rate - replay) <= 0.1, "noisy rate " + fmt(n.success_rate) + " vs " + fmt(replay));
  c.expect(std::abs(n.success_rate - 0.75) <= 0.1, "noisy rate " + fmt(n.success_rate) + " vs 0.75");
  c.detail = "perfect " + fmt(p.success_rate, 2) + ", drop-one " + fmt(d.success_rate, 2) + ", noisy " +
             fmt(n.success_rate, 3) + " (expected " + fmt(replay, 3) + ", " + std::to_string(n.trials) +
             " trials)";
  return c;
}

Check lru_oracle() {
  Check c;
  std::mt19937_64 rng(99);
  const std::size_t k = principal::kPoolCapacity;
  principal::LocalResourcePool pool(k);
  std::vector<std::string> oracle;  // most recent first
  std::vector<std::string> evicted, oracle_evicted;
  const int ops = 100000;
  for (int op = 0; op < ops && c.ok(); ++op) {
    auto id = "r" + std::to_string(rng() % (2 * k + 5));
    if (rng() % 2) {
      auto got = pool.get(id);
      auto it = std::find(oracle.begin(), oracle.end(), id);
      c.expect(got.has_value() == (it != oracle.end()), "hit/miss mismatch at op " + std::to_string(op));
      if (it != oracle.end()) std::rotate(oracle.begin(), it, it + 1);
    } else {
      if (auto v = pool.put(text_manifest(id, "cached " + id))) evicted.push_back(*v);
      auto it = std::find(oracle.begin(), oracle.end(), id);
      if (it != oracle.end()) oracle.erase(it);
      oracle.insert(oracle.begin(), id);
      if (oracle.size() > k) {
        oracle_evicted.push_back(oracle.back());
        oracle.pop_back();
      }
    }
  }
  c.expect(evicted == oracle_evicted, "eviction sequences differ");
  c.expect(pool.recency() == oracle, "final recency order differs");
  c.detail = std::to_string(ops) + " ops, capacity " + std::to_string(k) + ", " + std::to_string(evicted.size()) +
             " evictions identical";
  return c;
}

Check registry_guard_safety() {
  Check c;
  // Interleaved register / validate / suspend / reinstate / search.
  auto local = std::make_shared<LocalInvoker>();
  gateway::Config gc;
  gc.gateway_id = "gw";
  gc.tokens = {"tok"};
  auto gw = std::make_shared<gateway::Gateway>(gc, local);
  auto& reg = gw->registry();
  std::mt19937_64 rng(4242);
  const std::vector<std::string> topics = {"flight", "hotel", "profile", "calendar", "invoice"};
  std::vector<std::string> ids;
  std::set<std::string> suspended;
  int offered = 0;
  for (int step = 0; step < 2000 && c.ok(); ++step) {
    int op = static_cast<int>(rng() % 5);
    if (op == 0 || ids.empty()) {
      auto id = "r" + std::to_string(ids.size());
      auto m = text_manifest(id, "search " + topics[rng() % topics.size()] + " records", "gw");
      local->bind(m.endpoint, text_handler(id));
      reg.register_resource(m);
      reg.validate(id, *local);
      ids.push_back(id);
      continue;
    }
    const auto& id = ids[rng() % ids.size()];
    if (op == 1) {
      reg.suspend(id, "hold");
      suspended.insert(id);
    } else if (op == 2) {
      try {
        reg.reinstate(id);
      } catch (const Error&) {
      }
    } else if (op == 3) {
      reg.validate(id, *local);
    }
    ResourceQuery q;
    q.query_id = "q" + std::to_string(step);
    q.subtasks.push_back({"t0", "search " + topics[rng() % topics.size()], {}});
    auto offer = gw->handle_search("tok", q);
    for (const auto& [task, list] : offer.per_task) {
      for (const auto& sm : list) {
        auto e = reg.get(sm.manifest.resource_id);
        c.expect(e && e->manifest.status == ResourceStatus::active, sm.manifest.resource_id + " offered while suspended");
        ++offered;
      }
    }
  }

  // Screening: each message crossing a boundary in the HR run is screened
  // once per direction.
  {
    demo::HrCluster cluster;
    auto result = demo::run_hr_demo(cluster);
    std::map<std::string, int> seen;
    for (const auto& e : result.trace.at("events")) {
      if (e.at("source") != "guard") continue;
      auto key = e.at("component").dump() + e.at("boundary").dump() + e.at("direction").dump() + e.at("step").dump() +
                 e.at("peer").dump() + e.at("message_type").dump();
      ++seen[key];
    }
    c.expect(!seen.empty(), "no guard events recorded");
    for (const auto& [key, count] : seen) c.expect(count == 1, "screened " + std::to_string(count) + " times: " + key);
    std::set<std::string> crossings;
    for (const auto& n : result.record.at("graph").at("nodes")) {
      std::string id = n.at("task").at("task_id");
      for (const char* b : {"\"principal_gateway\"", "\"gateway_resource\""}) {
        for (const char* d : {"\"outbound\"", "\"inbound\""}) {
          bool found = std::any_of(seen.begin(), seen.end(), [&](const auto& kv) {
            return kv.first.find(b) != std::string::npos && kv.first.find(d) != std::string::npos &&
                   kv.first.find("\"" + id + "\"") != std::string::npos;
          });
          c.expect(found, id + " missing a screen at " + b + d);
        }
      }
    }
  }

  // Poisoned stub: one block event per scenario, attributed correctly, never
  // leaking into node outputs.
  int scenarios = 0;
  for (const auto& name : agents::kHrAgents) {
    demo::ClusterOptions opts;
    agents::StubBehavior poisoned;
    poisoned.failure_mode = agents::FailureMode::poisoned_output;
    opts.behaviors[name] = poisoned;
    demo::HrCluster cluster(opts);
    auto result = demo::run_hr_demo(cluster);
    int blocks = 0;
    for (const auto& e : result.trace.at("events")) {
      if (e.at("source") != "guard" || e.at("decision") != "block") continue;
      ++blocks;
      c.expect(e.at("peer") == "hr." + name && e.at("step") == name && e.at("direction") == "inbound",
               "block for " + name + " attributed to " + e.at("peer").dump() + "/" + e.at("step").dump());
    }
    c.expect(blocks == 1, name + ": " + std::to_string(blocks) + " block events");
    c.expect(result.record.at("node_outputs").dump().find(agents::kDefaultPoison) == std::string::npos,
             name + ": poisoned text reached node_outputs");
    c.expect(result.record.at("status") == "failed", name + ": workflow did not fail");
    ++scenarios;
  }
  c.detail = std::to_string(offered) + " offers checked, screening once per direction, " + std::to_string(scenarios) +
             " poisoned scenarios with 1 block each";
  return c;
}

Check percentiles_and_ratings() {
  Check c;
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 2000 && c.ok(); ++i) {
    int n = std::uniform_int_distribution<int>(1, 1024)(rng);
    ResourceMetrics m;
    std::vector<std::int64_t> all;
    for (int k = 0; k < n; ++k) {
      auto s = static_cast<std::int64_t>(rng() % 10000);
      all.push_back(s);
      m.latency_samples_ms.push(s);
    }
    c.expect(m.p50_ms() == oracle_percentile(all, 50), "p50 mismatch on sample " + std::to_string(i));
    c.expect(m.p90_ms() == oracle_percentile(all, 90), "p90 mismatch on sample " + std::to_string(i));
  }
  std::uniform_real_distribution<double> obs(-1.0, 2.0);
  double r = principal::kInitialRating;
  double expected = 0.5;
  for (int i = 0; i < 10000; ++i) {
    double o = obs(rng);
    r = principal::ewma(r, o);
    expected = (1 - principal::kRatingAlpha) * expected + principal::kRatingAlpha * std::clamp(o, 0.0, 1.0);
    c.expect(r >= 0.0 && r <= 1.0, "rating left [0,1]: " + fmt(r, 6));
    c.expect(std::abs(r - expected) <= 1e-9, "rating " + fmt(r, 9) + " vs " + fmt(expected, 9));
  }
  double step = principal::ewma(0.5, 1.0);
  c.expect(step == 0.6, "single step " + fmt(step, 17));
  c.detail = "2000 samples, 10^4 observations, 0.5 -> " + fmt(step, 1);
  return c;
}

Check protocol_round_trip() {
  Check c;
  fs::path fixtures(DAWN_FIXTURES_DIR);
  int golden = 0;
  for (const auto& e : fs::directory_iterator(fixtures / "golden")) {
    auto bytes = slurp(e.path());
    try {
      c.expect(encode(decode(bytes)) == bytes, e.path().filename().string() + " not byte-exact");
    } catch (const std::exception& ex) {
      c.expect(false, e.path().filename().string() + ": " + ex.what());
    }
    ++golden;
  }
  std::ifstream in(fixtures / "malformed/cases.jsonl");
  std::string line;
  int malformed = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cs = parse_json(line);
    std::string name = cs.at("name");
    ++malformed;
    try {
      decode(cs.at("input").get<std::string>());
      c.expect(false, name + " decoded without error");
    } catch (const ParseError& e) {
      c.expect(e.code() == ErrorCode::parse_error, name + " wrong code");
    } catch (const std::exception& e) {
      c.expect(false, name + " untyped exception: " + e.what());
    }
  }
  c.expect(golden >= 6, "only " + std::to_string(golden) + " golden fixtures");
  c.expect(malformed >= 50, "only " + std::to_string(malformed) + " malformed cases");
  c.detail = std::to_string(golden) + " golden fixtures byte-exact, " + std::to_string(malformed) +
             " malformed inputs typed";
  return c;
}

}  // namespace

int main() {
  dawn::log::set_level(dawn::log::Level::error);
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"hr-demo-end-to-end", hr_demo_end_to_end},
      {"fsm-ordering", fsm_ordering},
      {"crash-resume-equivalence", crash_resume_equivalence},
      {"ir-oracle-equivalence", ir_oracle_equivalence},
      {"metric-correctness", metric_correctness},
      {"planner-eval-bounds", planner_eval_bounds},
      {"lru-oracle", lru_oracle},
      {"registry-guard-safety", registry_guard_safety},
      {"percentiles-and-ratings", percentiles_and_ratings},
      {"protocol-round-trip", protocol_round_trip},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok()) {
      std::cout << "PASS " << name << ": " << c.detail << std::endl;
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << c.failure() << std::endl;
    }
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
