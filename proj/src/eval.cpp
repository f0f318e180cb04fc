#include "dawn/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "dawn/log.hpp"
#include "dawn/registry.hpp"

namespace dawn::eval {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[rng() % v.size()];
}

// Draws `n` distinct elements of `pool` in random order.
std::vector<std::string> sample(std::mt19937_64& rng, std::vector<std::string> pool, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng() % (pool.size() - i)]);
  pool.resize(n);
  return pool;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words = {"a",  "an",   "and", "the", "for", "of",   "to",  "in",
                                              "on", "with", "by",  "at",  "from", "into", "then", "all"};
  return words;
}

// Case vocabulary. Words never repeat across pools so tasks drawn without
// replacement share no content tokens.
const std::vector<std::string> kCaseDomains = {"retail",    "travel",   "finance", "healthcare", "logistics",
                                               "education", "insurance", "media",   "energy",     "hospitality"};
const std::vector<std::string> kVerbs = {"draft",   "compile", "review",   "publish",  "reconcile", "negotiate",
                                         "analyze", "archive", "schedule", "estimate", "translate", "audit",
                                         "prepare", "collect", "validate", "summarize", "rank",     "forecast",
                                         "assemble", "notify", "inspect",  "approve",  "benchmark", "catalog"};
const std::vector<std::string> kAdjectives = {"quarterly", "regional", "urgent",    "annual",   "internal",  "external",
                                              "weekly",    "strategic", "detailed", "preliminary", "legacy", "seasonal",
                                              "confidential", "public", "monthly",  "premium",  "baseline", "experimental",
                                              "critical",  "routine",   "frontline", "pilot", "final", "nightly"};
const std::vector<std::string> kNouns = {"budget",   "contract", "itinerary", "invoice",  "roster",    "inventory",
                                         "campaign", "survey",   "backlog",   "manifest", "ledger",    "proposal",
                                         "curriculum", "claim",  "playlist",  "tariff",   "warranty",  "shipment",
                                         "menu",     "timetable", "portfolio", "dashboard", "handbook", "checklist",
                                         "roadmap", "policy", "blueprint", "pipeline", "calendar", "brochure"};
const std::vector<std::string> kAudiences = {"stakeholders", "auditors",   "partners", "executives", "suppliers",
                                             "regulators",   "volunteers", "students", "patients",   "travelers",
                                             "investors",    "engineers",  "vendors",  "analysts",   "interns",
                                             "franchisees",  "tenants",    "couriers", "editors",    "members"};

PlanStep emit_step(const TaskSpec& t) {
  PlanStep s;
  s.thought = "Next task: " + t.task_id;
  s.action = PlanAction::emit_task;
  s.action_payload = to_json(t);
  return s;
}

PlanStep finish_step() {
  PlanStep s;
  s.thought = "All tasks emitted.";
  s.action = PlanAction::finish;
  return s;
}

// Removes task `index`, reattaching its dependants to its dependencies.
std::vector<TaskSpec> drop_task(std::vector<TaskSpec> tasks, std::size_t index) {
  auto dropped = tasks[index];
  tasks.erase(tasks.begin() + static_cast<std::ptrdiff_t>(index));
  for (auto& t : tasks) {
    auto it = std::find(t.depends_on.begin(), t.depends_on.end(), dropped.task_id);
    if (it == t.depends_on.end()) continue;
    t.depends_on.erase(it);
    for (const auto& d : dropped.depends_on) {
      if (std::find(t.depends_on.begin(), t.depends_on.end(), d) == t.depends_on.end()) t.depends_on.push_back(d);
    }
  }
  return tasks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cases

std::vector<GroundTruthCase> generate_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GroundTruthCase> cases;
  for (std::size_t c = 0; c < 10; ++c) {
    GroundTruthCase gc;
    gc.case_id = "case-" + std::to_string(c + 1);
    const auto& domain = kCaseDomains[c];
    const std::size_t n = 6 + rng() % 5;
    auto verbs = sample(rng, kVerbs, n);
    auto adjectives = sample(rng, kAdjectives, n);
    auto nouns = sample(rng, kNouns, n);
    auto audiences = sample(rng, kAudiences, n);

    // Segments: a diamond (x -> {y, z} -> w) or a single chained task.
    std::vector<std::vector<std::string>> deps(n);
    std::vector<std::string> tail;
    bool diamond_used = false;
    std::size_t i = 0;
    auto id = [](std::size_t k) { return "t" + std::to_string(k + 1); };
    while (i < n) {
      bool diamond = n - i >= 4 && (!diamond_used || rng() % 2 == 0) && (i > 0 || n - i >= 6);
      if (diamond) {
        deps[i] = tail;
        deps[i + 1] = {id(i)};
        deps[i + 2] = {id(i)};
        deps[i + 3] = {id(i + 1), id(i + 2)};
        tail = {id(i + 3)};
        i += 4;
        diamond_used = true;
      } else {
        deps[i] = tail;
        tail = {id(i)};
        ++i;
      }
    }
    std::vector<std::string> phrases;
    for (std::size_t k = 0; k < n; ++k) {
      TaskSpec t;
      t.task_id = id(k);
      t.description = capitalize(verbs[k]) + " the " + adjectives[k] + " " + nouns[k] + " for " + audiences[k] + ".";
      t.depends_on = deps[k];
      t.node_kind = NodeKind::agentic;
      phrases.push_back(verbs[k] + " the " + adjectives[k] + " " + nouns[k]);
      gc.truth_tasks.push_back(std::move(t));
    }
    gc.intent_text = "Use case " + std::to_string(c + 1) + " (" + domain + "): ";
    for (std::size_t k = 0; k < phrases.size(); ++k) gc.intent_text += (k ? ", " : "") + phrases[k];
    gc.intent_text += ".";
    cases.push_back(std::move(gc));
  }
  return cases;
}

bool reorder_tolerant(const GroundTruthCase& c, const std::string& a, const std::string& b) {
  std::map<std::string, std::vector<std::string>> deps;
  for (const auto& t : c.truth_tasks) deps[t.task_id] = t.depends_on;
  auto reaches = [&](const std::string& from, const std::string& to) {
    // `to` depends (transitively) on `from`.
    std::vector<std::string> stack = {to};
    std::set<std::string> seen;
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      for (const auto& d : deps[cur]) {
        if (d == from) return true;
        if (seen.insert(d).second) stack.push_back(d);
      }
    }
    return false;
  };
  return a != b && !reaches(a, b) && !reaches(b, a);
}

std::set<std::string> normalized_tokens(std::string_view description) {
  std::set<std::string> out;
  for (auto& t : retrieval::tokenize(description)) {
    if (!stop_words().count(t)) out.insert(std::move(t));
  }
  return out;
}

double overlap_coefficient(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

TaskListScore score_task_list(std::span<const TaskSpec> candidate, const GroundTruthCase& truth) {
  const auto& tt = truth.truth_tasks;
  std::vector<std::set<std::string>> ct(candidate.size()), tk(tt.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) ct[i] = normalized_tokens(candidate[i].description);
  for (std::size_t j = 0; j < tt.size(); ++j) tk[j] = normalized_tokens(tt[j].description);
  std::vector<std::vector<std::size_t>> adj(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < tt.size(); ++j) {
      if (overlap_coefficient(ct[i], tk[j]) >= kMatchThreshold) adj[i].push_back(j);
    }
  }

  // Maximum bipartite matching (augmenting paths).
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> truth_match(tt.size(), none), cand_match(candidate.size(), none);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t i) {
    for (auto j : adj[i]) {
      if (visited[j]) continue;
      visited[j] = 1;
      if (truth_match[j] == none || augment(truth_match[j])) {
        truth_match[j] = i;
        cand_match[i] = j;
        return true;
      }
    }
    return false;
  };
  std::size_t matched = 0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    visited.assign(tt.size(), 0);
    if (augment(i)) ++matched;
  }

  TaskListScore s;
  for (std::size_t j = 0; j < tt.size(); ++j) {
    if (truth_match[j] == none) s.missing.push_back(tt[j].description);
  }
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (cand_match[i] == none) s.extra.push_back(candidate[i].description);
  }
  s.complete = matched == tt.size() && candidate.size() == tt.size();

  std::map<std::string, std::size_t> truth_index;
  for (std::size_t j = 0; j < tt.size(); ++j) truth_index[tt[j].task_id] = j;
  s.order_ok = true;
  for (std::size_t v = 0; v < tt.size(); ++v) {
    for (const auto& dep : tt[v].depends_on) {
      auto u = truth_index.at(dep);
      if (truth_match[u] == none || truth_match[v] == none) continue;
      if (truth_match[u] > truth_match[v]) {
        s.order_ok = false;
        s.order_violations.push_back(tt[u].task_id + " -> " + tt[v].task_id);
      }
    }
  }
  s.success = s.complete && s.order_ok;
  return s;
}

// ---------------------------------------------------------------------------
// Providers

CaseProvider::CaseProvider(std::vector<GroundTruthCase> cases, double drop_probability, std::uint64_t seed)
    : cases_(std::move(cases)), drop_probability_(drop_probability), seed_(seed), rng_(seed) {}

std::string CaseProvider::name() const {
  if (drop_probability_ <= 0.0) return "perfect";
  if (drop_probability_ >= 1.0) return "drop-one";
  std::ostringstream os;
  os << "noisy(" << drop_probability_ << ")";
  return os.str();
}

std::vector<PlanStep> CaseProvider::propose(const planner::PlanPrompt& prompt, std::span<const PlanStep> trace) {
  if (trace.empty()) {
    auto it = std::find_if(cases_.begin(), cases_.end(),
                           [&](const GroundTruthCase& c) { return c.intent_text == prompt.intent_text; });
    if (it == cases_.end()) throw Error(ErrorCode::provider_failure, "no case for intent");
    ++trials_;
    auto tasks = it->truth_tasks;
    // Two draws per trial, always consumed, so the sequence is replayable.
    double u = unit_draw(rng_);
    std::uint64_t victim = rng_();
    if (u < drop_probability_) {
      tasks = drop_task(std::move(tasks), victim % tasks.size());
      ++drops_;
    }
    current_.clear();
    for (const auto& t : tasks) current_.push_back(emit_step(t));
    current_.push_back(finish_step());
  }
  if (trace.size() >= current_.size()) throw Error(ErrorCode::provider_failure, "script exhausted");
  return {current_.begin() + static_cast<std::ptrdiff_t>(trace.size()), current_.end()};
}

double expected_case_provider_rate(std::uint64_t seed, double drop_probability, std::span<const GroundTruthCase> cases,
                                   int repeats) {
  std::mt19937_64 rng(seed);
  const auto trials = cases.size() * static_cast<std::size_t>(repeats);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    double u = unit_draw(rng);
    rng();
    if (!(u < drop_probability)) ++kept;
  }
  return trials == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(trials);
}

PlannerReport run_planner_eval(planner::ReasoningProvider& provider, std::span<const GroundTruthCase> cases,
                               int repeats, planner::Strategy strategy, std::uint64_t seed) {
  PlannerReport r;
  r.provider = provider.name();
  r.seed = seed;
  r.repeats = repeats;
  planner::PlanOptions options;
  options.strategy = strategy;
  for (int rep = 0; rep < repeats; ++rep) {
    for (const auto& c : cases) {
      ++r.trials;
      planner::Intent intent;
      intent.intent_id = c.case_id;
      intent.text = c.intent_text;
      try {
        auto plan = planner::plan(intent, provider, options);
        auto score = score_task_list(plan.tasks, c);
        if (score.success) {
          ++r.successes;
          ++r.per_case_successes[c.case_id];
        } else {
          r.failures.push_back({c.case_id, rep, score.complete ? "order" : "incomplete", score});
          r.per_case_successes[c.case_id] += 0;
        }
      } catch (const Error& e) {
        r.failures.push_back({c.case_id, rep, std::string(to_string(e.code())) + ": " + e.detail(), {}});
        r.per_case_successes[c.case_id] += 0;
      }
    }
  }
  r.success_rate = r.trials == 0 ? 0.0 : static_cast<double>(r.successes) / r.trials;
  return r;
}

Json to_json(const PlannerReport& r) {
  Json failures = Json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"case_id", f.case_id},
                        {"repeat", f.repeat},
                        {"reason", f.reason},
                        {"missing", f.score.missing},
                        {"extra", f.score.extra},
                        {"order_violations", f.score.order_violations}});
  }
  return {{"provider", r.provider},   {"seed", r.seed},         {"repeats", r.repeats},
          {"trials", r.trials},       {"successes", r.successes}, {"success_rate", r.success_rate},
          {"per_case", r.per_case_successes}, {"failures", failures}};
}

std::string format_table(const PlannerReport& r) {
  std::ostringstream os;
  os << "provider " << r.provider << "  seed " << r.seed << "  repeats " << r.repeats << "\n";
  os << std::left << std::setw(10) << "case" << std::right << std::setw(10) << "success" << "\n";
  for (const auto& [id, n] : r.per_case_successes) {
    os << std::left << std::setw(10) << id << std::right << std::setw(7) << n << "/" << r.repeats << "\n";
  }
  os << "success_rate " << std::fixed << std::setprecision(4) << r.success_rate << " (" << r.successes << "/"
     << r.trials << ")\n";
  for (const auto& f : r.failures) {
    os << "  fail " << f.case_id << " #" << f.repeat << ": " << f.reason;
    for (const auto& m : f.score.missing) os << "\n    - missing: " << m;
    for (const auto& e : f.score.extra) os << "\n    + extra: " << e;
    for (const auto& v : f.score.order_violations) os << "\n    ! order: " << v;
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// IR corpus

namespace {

const std::vector<std::string> kIrDomains = {"finance", "travel",   "retail",   "health",  "legal",
                                             "energy",  "media",    "shipping", "school",  "insurance",
                                             "telecom", "gaming",   "farming",  "housing", "transit",
                                             "security", "hiring",  "fashion",  "food",    "sports"};
struct Capability {
  std::string action;
  std::string object;
  std::string synonym;
};
const std::vector<Capability> kIrCapabilities = {
    {"summarize", "reports", "condense"},  {"translate", "documents", "localize"},
    {"forecast", "demand", "predict"},     {"classify", "tickets", "triage"},
    {"extract", "invoices", "parse"},      {"schedule", "meetings", "book"},
    {"audit", "transactions", "inspect"},  {"recommend", "products", "suggest"},
    {"monitor", "sensors", "watch"},       {"price", "quotes", "estimate"},
};
const std::vector<std::string> kIrQualities = {"fast", "accurate", "reliable", "secure", "scalable", "friendly"};
const std::vector<std::string> kIrFillers = {"please", "quickly", "our", "team", "today", "help", "need", "urgent"};

std::string ir_id(std::size_t d, std::size_t c) { return "ir." + kIrDomains[d] + "." + kIrCapabilities[c].action; }

}  // namespace

std::vector<std::string> IrCorpus::problems() const {
  std::vector<std::string> out;
  std::set<std::string> ids;
  for (const auto& m : manifests) ids.insert(m.resource_id);
  for (const auto& q : queries) {
    if (q.relevant.empty()) out.push_back(q.query_id + ": no relevant ids");
    for (const auto& r : q.relevant) {
      if (!ids.count(r)) out.push_back(q.query_id + ": unknown relevant id " + r);
    }
  }
  return out;
}

IrCorpus generate_ir_corpus(std::uint64_t seed, bool full) {
  std::mt19937_64 rng(seed);
  IrCorpus corpus;
  corpus.seed = seed;
  for (std::size_t d = 0; d < kIrDomains.size(); ++d) {
    for (std::size_t c = 0; c < kIrCapabilities.size(); ++c) {
      const auto& dom = kIrDomains[d];
      const auto& cap = kIrCapabilities[c];
      ResourceManifest m;
      m.resource_id = ir_id(d, c);
      m.kind = ResourceKind::agent;
      m.name = dom + "-" + cap.action + "-agent";
      m.description = capitalize(cap.action) + " " + cap.object + " for " + dom + " teams with " + pick(rng, kIrQualities) +
                      " results.";
      m.usage_examples = {cap.action + " " + dom + " " + cap.object};
      m.endpoint = "http://agents.invalid/" + m.resource_id;
      m.input_schema = {FieldSpec{"query", ScalarType::string, true, std::nullopt}};
      m.output_schema = {FieldSpec{"answer", ScalarType::string, true, std::nullopt}};
      m.owner_gateway = "eval";
      corpus.manifests.push_back(std::move(m));
    }
  }
  const std::size_t n = full ? kIrQueriesFull : kIrQueries;
  for (std::size_t i = 0; i < n; ++i) {
    IrQuery q;
    q.query_id = "q" + std::to_string(i + 1);
    auto d = rng() % kIrDomains.size();
    auto c = rng() % kIrCapabilities.size();
    const auto& cap = kIrCapabilities[c];
    std::string verb = unit_draw(rng) < 0.3 ? cap.synonym : cap.action;
    std::string filler = pick(rng, kIrFillers);
    q.relevant.insert(ir_id(d, c));
    if (unit_draw(rng) < 0.2) {
      auto d2 = (d + 1 + rng() % (kIrDomains.size() - 1)) % kIrDomains.size();
      q.relevant.insert(ir_id(d2, c));
      q.text = filler + " " + verb + " " + cap.object + " for " + kIrDomains[d] + " and " + kIrDomains[d2];
    } else {
      q.text = filler + " " + verb + " " + kIrDomains[d] + " " + cap.object;
    }
    corpus.queries.push_back(std::move(q));
  }
  return corpus;
}

void write_ir_corpus(const IrCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json manifests = Json::array();
  for (const auto& m : corpus.manifests) manifests.push_back(parse_json(encode(m)));
  registry::write_file_atomic(dir / "manifests.json", Json{{"seed", corpus.seed}, {"manifests", manifests}}.dump(1));
  std::string lines;
  for (const auto& q : corpus.queries) {
    lines += Json{{"query_id", q.query_id}, {"query", q.text}, {"relevant_ids", q.relevant}}.dump() + "\n";
  }
  registry::write_file_atomic(dir / "queries.jsonl", lines);
}

IrCorpus read_ir_corpus(const std::filesystem::path& dir) {
  IrCorpus corpus;
  auto mj = parse_json(registry::read_file(dir / "manifests.json"));
  corpus.seed = mj.at("seed").get<std::uint64_t>();
  for (const auto& m : mj.at("manifests")) corpus.manifests.push_back(decode_as<ResourceManifest>(m.dump()));
  std::istringstream in(registry::read_file(dir / "queries.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto j = parse_json(line);
    JsonReader r(j, "$[" + std::to_string(n) + "]");
    IrQuery q;
    q.query_id = r.string("query_id");
    q.text = r.string("query");
    for (auto& id : r.strings("relevant_ids")) q.relevant.insert(std::move(id));
    r.finish();
    corpus.queries.push_back(std::move(q));
  }
  return corpus;
}

OracleReranker::OracleReranker(const IrCorpus& corpus) {
  for (const auto& q : corpus.queries) relevant_by_text_[q.text].insert(q.relevant.begin(), q.relevant.end());
}

std::vector<retrieval::RankedItem> OracleReranker::rank(std::string_view query, std::string_view,
                                                        std::span<const retrieval::RerankCandidate> candidates) {
  auto it = relevant_by_text_.find(std::string(query));
  std::vector<retrieval::RankedItem> out;
  const double step = 1.0 / (2.0 * static_cast<double>(candidates.size() + 1));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool rel = it != relevant_by_text_.end() && it->second.count(candidates[i].resource_id);
    out.push_back({candidates[i].resource_id, (rel ? 1.0 : 0.5) - step * static_cast<double>(i)});
  }
  return out;
}

IrMetrics score_ranking(std::span<const std::string> ranking, const std::set<std::string>& relevant) {
  std::map<std::string, double> grades;
  for (const auto& r : relevant) grades[r] = 1.0;
  return {retrieval::ndcg_at_k(ranking, grades, 1), retrieval::ndcg_at_k(ranking, grades, 3),
          retrieval::recall_at_k(ranking, relevant, 1), retrieval::recall_at_k(ranking, relevant, 3),
          retrieval::recall_at_k(ranking, relevant, 5)};
}

IrReport run_ir_eval(const IrCorpus& corpus, retrieval::RerankProvider& reranker, retrieval::Execution exec) {
  auto started = std::chrono::steady_clock::now();
  retrieval::Index index(corpus.manifests);
  const auto n = corpus.queries.size();
  std::vector<IrMetrics> s1(n), s2(n);
  std::vector<char> fell_back(n, 0);
  const bool parallel = exec == retrieval::Execution::parallel;

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto& q = corpus.queries[static_cast<std::size_t>(i)];
    auto list = retrieval::retrieve(index, q.text, retrieval::kDefaultTopK, {}, retrieval::Execution::serial);
    auto ids1 = list.ids();
    s1[static_cast<std::size_t>(i)] = score_ranking(ids1, q.relevant);
    auto out = retrieval::rerank(q.text, "", list, index, reranker);
    auto ids2 = out.list.ids();
    s2[static_cast<std::size_t>(i)] = score_ranking(ids2, q.relevant);
    fell_back[static_cast<std::size_t>(i)] = out.fell_back ? 1 : 0;
  }

  IrReport r;
  r.seed = corpus.seed;
  r.agents = corpus.manifests.size();
  r.queries = n;
  r.reranker = reranker.name();
  auto average = [n](const std::vector<IrMetrics>& v) {
    IrMetrics m;
    for (const auto& x : v) {
      m.ndcg1 += x.ndcg1;
      m.ndcg3 += x.ndcg3;
      m.recall1 += x.recall1;
      m.recall3 += x.recall3;
      m.recall5 += x.recall5;
    }
    if (n == 0) return m;
    const auto d = static_cast<double>(n);
    return IrMetrics{m.ndcg1 / d, m.ndcg3 / d, m.recall1 / d, m.recall3 / d, m.recall5 / d};
  };
  r.stage1 = average(s1);
  r.stage2 = average(s2);
  r.fallbacks = static_cast<std::size_t>(std::count(fell_back.begin(), fell_back.end(), 1));
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return r;
}

namespace {

Json metrics_json(const IrMetrics& m) {
  return {{"ndcg@1", m.ndcg1}, {"ndcg@3", m.ndcg3}, {"recall@1", m.recall1}, {"recall@3", m.recall3}, {"recall@5", m.recall5}};
}

}  // namespace

Json to_json(const IrReport& r) {
  return {{"seed", r.seed},
          {"agents", r.agents},
          {"queries", r.queries},
          {"reranker", r.reranker},
          {"stage1", metrics_json(r.stage1)},
          {"stage2", metrics_json(r.stage2)},
          {"fallbacks", r.fallbacks}};
}

std::string format_table(const IrReport& r) {
  std::ostringstream os;
  os << "seed " << r.seed << "  agents " << r.agents << "  queries " << r.queries << "  reranker " << r.reranker << "\n";
  os << std::left << std::setw(8) << "stage";
  for (const char* h : {"NDCG@1", "NDCG@3", "R@1", "R@3", "R@5"}) os << std::right << std::setw(9) << h;
  os << "\n" << std::fixed << std::setprecision(4);
  auto row = [&](const char* name, const IrMetrics& m) {
    os << std::left << std::setw(8) << name << std::right << std::setw(9) << m.ndcg1 << std::setw(9) << m.ndcg3
       << std::setw(9) << m.recall1 << std::setw(9) << m.recall3 << std::setw(9) << m.recall5 << "\n";
  };
  row("stage1", r.stage1);
  row("stage2", r.stage2);
  return os.str();
}

}  // namespace dawn::eval
