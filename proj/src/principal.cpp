#include "dawn/principal.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>

#include "dawn/log.hpp"
#include "dawn/retrieval.hpp"

namespace dawn::principal {

namespace {

// A substitute must produce every output field the replaced resource declared.
bool covers_outputs(const ResourceManifest& candidate, const ResourceManifest& original) {
  return std::all_of(original.output_schema.begin(), original.output_schema.end(), [&](const FieldSpec& f) {
    return std::any_of(candidate.output_schema.begin(), candidate.output_schema.end(),
                       [&](const FieldSpec& g) { return g.name == f.name && g.type == f.type; });
  });
}

}  // namespace

double ewma(double rating, double observation, double alpha) {
  observation = std::clamp(observation, 0.0, 1.0);
  return std::clamp(rating + alpha * (observation - rating), 0.0, 1.0);
}

std::string_view to_string(JoinGranularity g) { return g == JoinGranularity::workflow ? "workflow" : "round"; }

std::optional<JoinGranularity> join_granularity_from_string(std::string_view s) {
  if (s == "workflow") return JoinGranularity::workflow;
  if (s == "round") return JoinGranularity::round;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Roster

void GatewayRoster::add(std::shared_ptr<gateway::GatewayLink> link, Timestamp now) {
  auto id = link->identity();
  std::lock_guard lk(mu_);
  auto& e = entries_[id.gateway_id];
  if (!e.link) e.rating = kInitialRating;
  e.identity = id;
  e.link = std::move(link);
  e.connected = true;
  e.last_seen = now;
  e.joined_epoch = epoch_;
}

void GatewayRoster::set_connected(const std::string& gateway_id, bool connected) {
  std::lock_guard lk(mu_);
  auto it = entries_.find(gateway_id);
  if (it == entries_.end()) throw Error(ErrorCode::unknown_gateway, gateway_id);
  it->second.connected = connected;
}

double GatewayRoster::update_rating(const std::string& gateway_id, double observation) {
  std::lock_guard lk(mu_);
  auto it = entries_.find(gateway_id);
  if (it == entries_.end()) throw Error(ErrorCode::unknown_gateway, gateway_id);
  it->second.rating = ewma(it->second.rating, observation, alpha_);
  return it->second.rating;
}

double GatewayRoster::rating(const std::string& gateway_id) const {
  std::lock_guard lk(mu_);
  auto it = entries_.find(gateway_id);
  if (it == entries_.end()) throw Error(ErrorCode::unknown_gateway, gateway_id);
  return it->second.rating;
}

std::map<std::string, double> GatewayRoster::ratings() const {
  std::lock_guard lk(mu_);
  std::map<std::string, double> out;
  for (const auto& [id, e] : entries_) out[id] = e.rating;
  return out;
}

std::vector<RosterEntry> GatewayRoster::entries() const {
  std::lock_guard lk(mu_);
  std::vector<RosterEntry> out;
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

std::shared_ptr<gateway::GatewayLink> GatewayRoster::link(const std::string& gateway_id) const {
  std::lock_guard lk(mu_);
  auto it = entries_.find(gateway_id);
  return it == entries_.end() ? nullptr : it->second.link;
}

std::uint64_t GatewayRoster::tick() {
  std::lock_guard lk(mu_);
  return ++epoch_;
}

std::uint64_t GatewayRoster::epoch() const {
  std::lock_guard lk(mu_);
  return epoch_;
}

std::vector<RosterEntry> GatewayRoster::eligible(std::uint64_t epoch) const {
  std::lock_guard lk(mu_);
  std::vector<RosterEntry> out;
  for (const auto& [_, e] : entries_) {
    if (e.connected && e.joined_epoch < epoch) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local pool

LocalResourcePool::LocalResourcePool(std::size_t capacity, const guard::GuardPolicy& policy) : capacity_(capacity) {
  for (const auto& name : agents::kBuiltins) {
    auto m = agents::builtin_manifest(name);
    builtin_stubs_[m.resource_id] =
        std::make_shared<agents::Stub>(name, m.input_schema, agents::builtin_agent(name, policy));
    builtins_.push_back(std::move(m));
  }
}

bool LocalResourcePool::is_builtin(const std::string& resource_id) const {
  return builtin_stubs_.count(resource_id) > 0;
}

std::optional<ResourceManifest> LocalResourcePool::get(const std::string& resource_id) {
  for (const auto& b : builtins_) {
    if (b.resource_id == resource_id) return b;
  }
  std::lock_guard lk(mu_);
  auto it = cache_.find(resource_id);
  if (it == cache_.end()) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second.second);
  return it->second.first;
}

std::optional<std::string> LocalResourcePool::put(ResourceManifest manifest) {
  if (is_builtin(manifest.resource_id)) return std::nullopt;
  std::lock_guard lk(mu_);
  auto id = manifest.resource_id;
  if (auto it = cache_.find(id); it != cache_.end()) {
    it->second.first = std::move(manifest);
    order_.splice(order_.begin(), order_, it->second.second);
    return std::nullopt;
  }
  order_.push_front(id);
  cache_.emplace(id, std::make_pair(std::move(manifest), order_.begin()));
  if (cache_.size() <= capacity_) return std::nullopt;
  auto victim = order_.back();
  order_.pop_back();
  cache_.erase(victim);
  return victim;
}

bool LocalResourcePool::contains(const std::string& resource_id) const {
  if (is_builtin(resource_id)) return true;
  std::lock_guard lk(mu_);
  return cache_.count(resource_id) > 0;
}

std::size_t LocalResourcePool::size() const {
  std::lock_guard lk(mu_);
  return cache_.size();
}

std::vector<std::string> LocalResourcePool::recency() const {
  std::lock_guard lk(mu_);
  return {order_.begin(), order_.end()};
}

std::vector<ScoredManifest> LocalResourcePool::match(const TaskSpec& task) const {
  std::vector<ResourceManifest> candidates = builtins_;
  {
    std::lock_guard lk(mu_);
    for (const auto& id : order_) candidates.push_back(cache_.at(id).first);
  }
  auto task_tokens = retrieval::token_set(task.description);
  auto q = retrieval::embed(task.description);
  std::vector<ScoredManifest> out;
  for (auto& m : candidates) {
    if (m.status == ResourceStatus::suspended) continue;
    auto name_tokens = retrieval::token_set(m.name);
    bool keyword = std::any_of(name_tokens.begin(), name_tokens.end(),
                               [&](const std::string& t) { return task_tokens.count(t) > 0; });
    if (!keyword) continue;
    double score = retrieval::cosine(q, retrieval::embed(m.search_text()));
    if (score >= kLocalMatchThreshold) out.push_back({std::move(m), std::min(score, 1.0)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredManifest& a, const ScoredManifest& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.manifest.resource_id < b.manifest.resource_id;
  });
  if (out.size() > kGlobalOfferCap) out.resize(kGlobalOfferCap);
  return out;
}

ExecutionResult LocalResourcePool::execute(const ExecutionCommand& cmd) {
  auto it = builtin_stubs_.find(cmd.resource_id);
  if (it == builtin_stubs_.end()) {
    return ExecutionResult::failure(cmd.command_id, "unknown_resource: " + cmd.resource_id, 0);
  }
  return (*it->second)(cmd);
}

// ---------------------------------------------------------------------------
// Events

std::shared_ptr<EventHub::Subscription> EventHub::subscribe(const std::string& tenant_id,
                                                            const std::string& workflow_id) {
  auto s = std::make_shared<Subscription>();
  s->tenant_id = tenant_id;
  s->workflow_id = workflow_id;
  std::lock_guard lk(mu_);
  subs_.push_back(s);
  return s;
}

void EventHub::unsubscribe(const std::shared_ptr<Subscription>& s) {
  std::lock_guard lk(mu_);
  std::erase(subs_, s);
}

void EventHub::publish(const std::string& tenant_id, const std::string& workflow_id, const std::string& data) {
  std::lock_guard lk(mu_);
  for (const auto& s : subs_) {
    if (s->tenant_id != tenant_id) continue;
    if (!s->workflow_id.empty() && s->workflow_id != workflow_id) continue;
    {
      std::lock_guard sl(s->mu);
      s->queue.push_back(data);
    }
    s->cv.notify_all();
  }
}

void EventHub::close_all() {
  std::lock_guard lk(mu_);
  for (const auto& s : subs_) {
    {
      std::lock_guard sl(s->mu);
      s->closed = true;
    }
    s->cv.notify_all();
  }
}

std::size_t EventHub::subscribers() const {
  std::lock_guard lk(mu_);
  return subs_.size();
}

// ---------------------------------------------------------------------------
// Principal

Principal::Principal(Config config, std::shared_ptr<planner::ReasoningProvider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      roster_(config_.alpha),
      pool_(config_.pool_capacity, config_.policy),
      guard_log_(config_.clock) {
  std::optional<std::filesystem::path> ctx_dir;
  std::optional<std::filesystem::path> wf_dir;
  if (config_.state_dir) {
    ctx_dir = *config_.state_dir / "context";
    wf_dir = *config_.state_dir / "workflows";
  }
  context_ = std::make_unique<context::ContextStore>(ctx_dir, config_.clock);
  orchestrator::Options o;
  o.store_dir = wf_dir;
  o.clock = config_.clock;
  o.node_deadline_ms = config_.node_deadline_ms;
  o.context = context_.get();
  o.find_substitute = [this](const orchestrator::WorkflowRecord& r, const TaskSpec& t,
                             const std::vector<std::string>& tried) { return find_substitute(r, t, tried); };
  orch_ = std::make_unique<orchestrator::Orchestrator>(std::move(o));
  orch_->set_listener([this](const orchestrator::WorkflowRecord& r, const orchestrator::AuditEvent& e) { on_audit(r, e); });
  if (!config_.synchronous) {
    for (int i = 0; i < std::max(1, config_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
  }
}

Principal::~Principal() {
  {
    std::lock_guard lk(q_mu_);
    stopping_ = true;
  }
  q_cv_.notify_all();
  for (auto& t : workers_) t.join();
  events_.close_all();
}

std::optional<Caller> Principal::authenticate(const std::string& token) const {
  auto it = config_.user_tokens.find(token);
  if (it == config_.user_tokens.end()) return std::nullopt;
  return it->second;
}

GatewayIdentity Principal::connect(const GatewayIdentity& proposal, std::shared_ptr<gateway::GatewayLink> link) {
  if (!config_.gateway_allow_list.count(proposal.auth_token)) {
    throw Error(ErrorCode::bad_token, "gateway " + proposal.gateway_id + " presented an unknown token");
  }
  if (proposal.gateway_id.empty() || !is_well_formed_url(proposal.base_url)) {
    throw Error(ErrorCode::probe_failed, "gateway identity malformed");
  }
  ResourceQuery probe;
  probe.query_id = "probe/" + proposal.gateway_id;
  probe.subtasks = {TaskSpec{"probe", "connectivity probe", {}, NodeKind::agentic}};
  probe.max_offers_per_task = 1;
  try {
    auto offer = link->search(probe);
    auto problems = check_offer_partition(probe, offer);
    if (!problems.empty()) throw Error(ErrorCode::probe_failed, problems.front());
    if (offer.query_id != probe.query_id) throw Error(ErrorCode::probe_failed, "probe answered with wrong query id");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::probe_failed) throw;
    throw Error(ErrorCode::probe_failed, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::probe_failed, e.what());
  }
  roster_.add(link, config_.clock());
  log::info("principal", "gateway " + proposal.gateway_id + " joined at epoch " + std::to_string(roster_.epoch()));
  auto accepted = link->identity();
  accepted.auth_token.clear();
  return accepted;
}

FanOutResult Principal::fan_out_query(const ResourceQuery& q, std::uint64_t epoch, const std::string& workflow_id,
                                      const std::function<bool(const ResourceManifest&)>& usable) {
  FanOutResult out;
  ResourceQuery outbound = q;
  outbound.subtasks.clear();
  for (const auto& t : q.subtasks) {
    auto hits = t.node_kind == NodeKind::agentic ? pool_.match(t) : std::vector<ScoredManifest>{};
    if (usable) std::erase_if(hits, [&](const ScoredManifest& sm) { return !usable(sm.manifest); });
    if (!hits.empty()) {
      out.local[t.task_id] = std::move(hits);
    } else {
      outbound.subtasks.push_back(t);
    }
  }
  out.outbound_subtasks = outbound.subtasks.size();
  if (outbound.subtasks.empty()) return out;

  auto gws = roster_.eligible(epoch);
  if (gws.empty()) {
    throw Error(ErrorCode::no_gateways_and_no_local_match,
                std::to_string(outbound.subtasks.size()) + " task(s) need a gateway and none is connected");
  }

  struct Pending {
    std::string gateway_id;
    std::future<ResourceOffer> future;
  };
  std::vector<Pending> pending;
  for (const auto& e : gws) {
    Message m = outbound;
    auto v = guard::screen_message(m, guard::Direction::outbound, config_.policy, guard_log_,
                                   {workflow_id, q.query_id, e.identity.gateway_id, guard::Boundary::principal_gateway});
    if (v.decision == guard::Decision::block) {
      log::warn("principal", "query " + q.query_id + " blocked by " + v.blocking_rule);
      continue;
    }
    auto promise = std::make_shared<std::promise<ResourceOffer>>();
    pending.push_back({e.identity.gateway_id, promise->get_future()});
    std::thread([promise, link = e.link, query = std::get<ResourceQuery>(m)] {
      try {
        promise->set_value(link->search(query));
      } catch (...) {
        promise->set_exception(std::current_exception());
      }
    }).detach();
    out.contacted.push_back(e.identity.gateway_id);
  }

  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(config_.fanout_timeout_ms);
  for (auto& p : pending) {
    if (p.future.wait_until(deadline) != std::future_status::ready) {
      out.timed_out.push_back(p.gateway_id);
      roster_.update_rating(p.gateway_id, 0.0);
      log::warn("principal", "gateway " + p.gateway_id + " timed out on " + q.query_id);
      continue;
    }
    ResourceOffer offer;
    try {
      offer = p.future.get();
    } catch (const std::exception& e) {
      out.timed_out.push_back(p.gateway_id);
      roster_.update_rating(p.gateway_id, 0.0);
      log::warn("principal", "gateway " + p.gateway_id + " failed on " + q.query_id + ": " + e.what());
      continue;
    }
    Message m = offer;
    auto v = guard::screen_message(m, guard::Direction::inbound, config_.policy, guard_log_,
                                   {workflow_id, q.query_id, p.gateway_id, guard::Boundary::principal_gateway});
    if (v.decision == guard::Decision::block) {
      log::warn("principal", "offer from " + p.gateway_id + " blocked by " + v.blocking_rule);
      continue;
    }
    offer = std::get<ResourceOffer>(std::move(m));
    if (auto problems = check_offer_partition(outbound, offer); !problems.empty()) {
      log::warn("principal", "offer from " + p.gateway_id + " discarded: " + problems.front());
      continue;
    }
    out.offers.push_back({p.gateway_id, std::move(offer)});
  }

  // Global cap across gateways per task.
  for (const auto& t : outbound.subtasks) {
    struct Ref {
      double score;
      std::string resource_id;
      std::size_t offer;
    };
    std::vector<Ref> refs;
    for (std::size_t i = 0; i < out.offers.size(); ++i) {
      auto it = out.offers[i].offer.per_task.find(t.task_id);
      if (it == out.offers[i].offer.per_task.end()) continue;
      for (const auto& sm : it->second) refs.push_back({sm.score, sm.manifest.resource_id, i});
    }
    if (refs.size() <= kGlobalOfferCap) continue;
    std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.resource_id < b.resource_id;
    });
    refs.resize(kGlobalOfferCap);
    for (std::size_t i = 0; i < out.offers.size(); ++i) {
      auto it = out.offers[i].offer.per_task.find(t.task_id);
      if (it == out.offers[i].offer.per_task.end()) continue;
      std::erase_if(it->second, [&](const ScoredManifest& sm) {
        return std::none_of(refs.begin(), refs.end(), [&](const Ref& r) {
          return r.offer == i && r.resource_id == sm.manifest.resource_id;
        });
      });
    }
  }
  return out;
}

std::string Principal::next_workflow_id() {
  std::lock_guard lk(wf_mu_);
  while (true) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "wf-%06llu", static_cast<unsigned long long>(++wf_counter_));
    std::string id = buf;
    bool on_disk = config_.state_dir && std::filesystem::exists(*config_.state_dir / "workflows" / (id + ".json"));
    if (!on_disk && !orch_->has(id)) return id;
  }
}

std::uint64_t Principal::fanout_epoch(const std::string& workflow_id) {
  if (config_.join == JoinGranularity::round) return roster_.tick();
  std::lock_guard lk(wf_mu_);
  auto it = wf_epoch_.find(workflow_id);
  if (it != wf_epoch_.end()) return it->second;
  return wf_epoch_[workflow_id] = roster_.tick();
}

void Principal::check_tenant(const Caller& caller, const orchestrator::WorkflowRecord& r) const {
  if (r.tenant_id != caller.tenant_id) {
    throw Error(ErrorCode::unauthenticated, "workflow belongs to another tenant");
  }
}

std::string Principal::submit_intent(const Caller& caller, planner::Intent intent) {
  if (intent.text.empty()) throw Error(ErrorCode::empty_plan, "intent text empty");
  if (intent.mode == OperationalMode::no_llm) {
    throw Error(ErrorCode::invalid_mode_transition, "no_llm workflows are submitted as authored graphs");
  }
  auto wf = next_workflow_id();
  if (intent.intent_id.empty()) intent.intent_id = wf;
  intent.tenant_id = caller.tenant_id;
  intent.user_id = caller.user_id;
  {
    std::lock_guard lk(wf_mu_);
    wf_epoch_[wf] = roster_.tick();
  }

  context_->register_workflow(wf, caller.tenant_id, caller.user_id, intent.text);
  for (const auto& [k, v] : intent.preferences) {
    context_->upsert_memory({caller.tenant_id, caller.user_id, k, v, context::MemoryKind::preference, 0});
  }

  orchestrator::WorkflowRecord rec;
  rec.workflow_id = wf;
  rec.tenant_id = caller.tenant_id;
  rec.user_id = caller.user_id;
  rec.intent = intent;
  rec.graph.graph_id = wf + "/graph";
  rec.graph.mode = intent.mode;
  rec.gate_policy = config_.gate_policy;
  orch_->put(rec);

  auto fail = [&](const std::string& reason, std::vector<std::string> unfulfilled = {}) {
    log::warn("principal", wf + " failed while composing: " + reason);
    orch_->fail(wf, reason, std::move(unfulfilled));
    return wf;
  };
  auto next_query_id = [&] {
    std::lock_guard lk(wf_mu_);
    return wf + "/query/" + std::to_string(++wf_queries_[wf]);
  };

  planner::PlanOptions po;
  po.strategy = config_.strategy;
  po.context = context_->assemble_context(wf, context::Purpose::plan_prompt).text;
  po.scratchpad = context_.get();
  po.workflow_id = wf;
  po.lookup = [&](const std::string& text) {
    ResourceQuery q{next_query_id(), {TaskSpec{"lookup", text, {}, NodeKind::agentic}}, "", gateway::kOffersPerTask};
    std::vector<planner::CandidateSummary> out;
    std::set<std::string> seen;
    auto add = [&](const ResourceManifest& m) {
      if (seen.insert(m.resource_id).second) out.push_back({m.resource_id, m.name, m.description});
    };
    try {
      auto fo = fan_out_query(q, fanout_epoch(wf), wf);
      for (const auto& [_, hits] : fo.local) {
        for (const auto& h : hits) add(h.manifest);
      }
      for (const auto& so : fo.offers) {
        for (const auto& [_, list] : so.offer.per_task) {
          for (const auto& sm : list) add(sm.manifest);
        }
      }
    } catch (const Error& e) {
      log::info("principal", std::string("lookup found nothing: ") + e.what());
    }
    return out;
  };

  planner::PlanResult plan;
  try {
    plan = planner::plan(intent, *provider_, po);
  } catch (const Error& e) {
    return fail(std::string("planning failed: ") + e.what());
  }

  ResourceQuery q{next_query_id(), plan.tasks, context_->assemble_context(wf, context::Purpose::query_summary).text,
                  gateway::kOffersPerTask};
  std::vector<planner::SourcedOffer> offers;
  planner::LocalHits local;
  auto absorb = [&](FanOutResult fo) {
    for (auto& o : fo.offers) offers.push_back(std::move(o));
    for (auto& [k, v] : fo.local) local[k] = std::move(v);
  };
  try {
    absorb(fan_out_query(q, fanout_epoch(wf), wf));
  } catch (const Error& e) {
    return fail(e.what(), [&] {
      std::vector<std::string> ids;
      for (const auto& t : plan.tasks) ids.push_back(t.task_id);
      return ids;
    }());
  }

  auto composed = planner::compose(plan.tasks, offers, local, roster_.ratings(), rec.graph.graph_id, intent.mode);
  int rounds = 0;
  while (!composed.unassigned.empty()) {
    ResourceQuery rq;
    try {
      rq = planner::replan(composed.graph, composed.unassigned, *provider_,
                           context_->assemble_context(wf, context::Purpose::query_summary).text, next_query_id(), rounds);
    } catch (const Error& e) {
      return fail(e.what(), composed.unassigned);
    }
    try {
      absorb(fan_out_query(rq, fanout_epoch(wf), wf));
    } catch (const Error& e) {
      log::warn("principal", std::string("re-plan fan-out failed: ") + e.what());
    }
    composed = planner::compose(plan.tasks, offers, local, roster_.ratings(), rec.graph.graph_id, intent.mode);
  }

  // Hand-authored bindings for no-LLM steps.
  for (auto& node : composed.graph.nodes) {
    if (node.task.node_kind != NodeKind::no_llm) continue;
    auto b = config_.no_llm_bindings.find(node.task.task_id);
    if (b == config_.no_llm_bindings.end()) continue;
    bool bound = false;
    for (const auto& so : offers) {
      for (const auto& [_, list] : so.offer.per_task) {
        for (const auto& sm : list) {
          if (bound || sm.manifest.resource_id != b->second) continue;
          node.assignment = sm.manifest.resource_id;
          node.gateway_id = so.gateway_id;
          composed.manifests[node.task.task_id] = sm.manifest;
          bound = true;
        }
      }
    }
    if (!bound) log::warn("principal", "no offer carries bound resource " + b->second + "; running locally");
  }

  for (const auto& [_, m] : composed.manifests) {
    if (!pool_.is_builtin(m.resource_id)) pool_.put(m);
  }

  std::vector<std::pair<std::string, std::string>> pending;
  for (const auto& t : plan.tasks) pending.emplace_back(t.task_id, t.description);
  context_->set_pending(wf, pending);

  rec.graph = composed.graph;
  rec.manifests = composed.manifests;
  rec.replan_rounds = rounds;
  orch_->put(rec);
  return wf;
}

std::string Principal::submit_graph(const Caller& caller, planner::Intent intent, TaskGraph graph,
                                    std::map<std::string, ResourceManifest> manifests) {
  auto wf = next_workflow_id();
  intent.tenant_id = caller.tenant_id;
  intent.user_id = caller.user_id;
  intent.mode = OperationalMode::no_llm;
  if (intent.intent_id.empty()) intent.intent_id = wf;
  if (intent.text.empty()) intent.text = "authored graph " + graph.graph_id;
  context_->register_workflow(wf, caller.tenant_id, caller.user_id, intent.text);
  orchestrator::WorkflowRecord rec;
  rec.workflow_id = wf;
  rec.tenant_id = caller.tenant_id;
  rec.user_id = caller.user_id;
  rec.intent = intent;
  rec.graph = std::move(graph);
  if (rec.graph.graph_id.empty()) rec.graph.graph_id = wf + "/graph";
  rec.manifests = std::move(manifests);
  auto step = orch_->run_no_llm(std::move(rec));
  run(std::move(step.dispatches));
  return wf;
}

orchestrator::WorkflowRecord Principal::get_status(const Caller& caller, const std::string& workflow_id) const {
  auto r = orch_->get(workflow_id);
  check_tenant(caller, r);
  return r;
}

orchestrator::WorkflowRecord Principal::approve_graph(const Caller& caller, const std::string& workflow_id) {
  auto r = orch_->get(workflow_id);
  check_tenant(caller, r);
  if (r.terminal()) throw Error(ErrorCode::invalid_graph, "workflow " + workflow_id + " is " + std::string(to_string(r.status)));
  orch_->approve_graph(workflow_id, caller.user_id);
  auto step = orch_->start(workflow_id);
  run(std::move(step.dispatches));
  return orch_->get(workflow_id);
}

orchestrator::WorkflowRecord Principal::decide_gate(const Caller& caller, const orchestrator::GateDecision& d) {
  check_tenant(caller, orch_->get(d.workflow_id));
  auto decision = d;
  if (decision.actor.empty()) decision.actor = caller.user_id;
  auto step = orch_->decide_gate(decision);
  run(std::move(step.dispatches));
  return orch_->get(d.workflow_id);
}

orchestrator::WorkflowRecord Principal::pause(const Caller& caller, const std::string& workflow_id) {
  check_tenant(caller, orch_->get(workflow_id));
  return orch_->pause(workflow_id).record;
}

orchestrator::WorkflowRecord Principal::resume(const Caller& caller, const std::string& workflow_id) {
  if (orch_->has(workflow_id)) check_tenant(caller, orch_->get(workflow_id));
  auto step = orch_->resume(workflow_id);
  check_tenant(caller, step.record);
  run(std::move(step.dispatches));
  return orch_->get(workflow_id);
}

Json Principal::trace(const Caller& caller, const std::string& workflow_id) {
  auto r = get_status(caller, workflow_id);
  struct Item {
    Timestamp at;
    int source;
    std::uint64_t seq;
    Json j;
  };
  std::vector<Item> items;
  for (const auto& e : r.audit) {
    auto j = orchestrator::to_json(e);
    j["source"] = "audit";
    items.push_back({e.at, 0, e.seq, std::move(j)});
  }
  auto add_guard = [&](const std::vector<guard::GuardEvent>& events, const std::string& component, int source) {
    for (const auto& e : events) {
      auto j = guard::to_json(e);
      j["source"] = "guard";
      j["component"] = component;
      items.push_back({e.at, source, e.seq, std::move(j)});
    }
  };
  add_guard(guard_log_.events(workflow_id), config_.principal_id, 1);
  int source = 2;
  for (const auto& e : roster_.entries()) {
    try {
      add_guard(e.link->trace(workflow_id), e.identity.gateway_id, source++);
    } catch (const std::exception& ex) {
      log::warn("principal", "trace from " + e.identity.gateway_id + " unavailable: " + ex.what());
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.at != b.at) return a.at < b.at;
    if (a.source != b.source) return a.source < b.source;
    return a.seq < b.seq;
  });
  Json events = Json::array();
  for (auto& i : items) events.push_back(std::move(i.j));
  return {{"workflow_id", workflow_id}, {"status", to_string(r.status)}, {"events", events}};
}

orchestrator::WorkflowRecord Principal::wait_idle(const std::string& workflow_id, std::int64_t timeout_ms) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    auto r = orch_->get(workflow_id);
    bool idle = r.terminal() ||
                ((r.status == orchestrator::WorkflowStatus::awaiting_human ||
                  r.status == orchestrator::WorkflowStatus::composing || r.paused) &&
                 r.in_flight.empty());
    if (idle || std::chrono::steady_clock::now() >= deadline) {
      if (r.terminal()) quiesce();
      return orch_->get(workflow_id);
    }
    std::unique_lock lk(q_mu_);
    idle_cv_.wait_for(lk, std::chrono::milliseconds(5));
  }
}

void Principal::quiesce() {
  std::unique_lock lk(q_mu_);
  idle_cv_.wait(lk, [&] { return (queue_.empty() && busy_ == 0) || stopping_; });
}

ExecutionResult Principal::execute(const orchestrator::Dispatch& d) {
  const auto& cmd = d.command;
  if (d.gateway_id == planner::kLocalGatewayId || (d.gateway_id.empty() && pool_.is_builtin(cmd.resource_id))) {
    return pool_.execute(cmd);
  }
  auto link = roster_.link(d.gateway_id);
  if (!link) return ExecutionResult::failure(cmd.command_id, "unknown_gateway: " + d.gateway_id, 0);

  guard::ScreenContext ctx{d.workflow_id, d.task_id, d.gateway_id, guard::Boundary::principal_gateway};
  Message out = cmd;
  auto v = guard::screen_message(out, guard::Direction::outbound, config_.policy, guard_log_, ctx);
  if (v.decision == guard::Decision::block) {
    return ExecutionResult::failure(cmd.command_id, "guard_blocked: " + v.blocking_rule, 0);
  }
  bool tracked = context_->has_workflow(d.workflow_id);
  if (tracked) context_->append_pool({d.workflow_id, context::PoolDirection::to_gateway, d.gateway_id, out, 0});

  ExecutionResult result;
  try {
    result = link->execute(std::get<ExecutionCommand>(out));
  } catch (const Error& e) {
    return ExecutionResult::failure(cmd.command_id, std::string(to_string(e.code())) + ": " + e.detail(), 0);
  } catch (const std::exception& e) {
    return ExecutionResult::failure(cmd.command_id, std::string("transport_error: ") + e.what(), 0);
  }
  result.command_id = cmd.command_id;
  Message in = result;
  auto iv = guard::screen_message(in, guard::Direction::inbound, config_.policy, guard_log_, ctx);
  if (iv.decision == guard::Decision::block) {
    return ExecutionResult::failure(cmd.command_id, "guard_blocked: " + iv.blocking_rule, result.elapsed_ms);
  }
  if (tracked) context_->append_pool({d.workflow_id, context::PoolDirection::from_gateway, d.gateway_id, in, 0});
  return std::get<ExecutionResult>(std::move(in));
}

void Principal::run(std::vector<orchestrator::Dispatch> dispatches) {
  if (dispatches.empty()) return;
  if (config_.synchronous) {
    std::deque<orchestrator::Dispatch> q(dispatches.begin(), dispatches.end());
    while (!q.empty()) {
      auto d = std::move(q.front());
      q.pop_front();
      auto result = execute(d);
      auto step = orch_->on_result(d.workflow_id, d.command.command_id, std::move(result));
      q.insert(q.end(), step.dispatches.begin(), step.dispatches.end());
    }
    return;
  }
  {
    std::lock_guard lk(q_mu_);
    for (auto& d : dispatches) queue_.push_back(std::move(d));
  }
  q_cv_.notify_all();
}

void Principal::worker_loop() {
  while (true) {
    orchestrator::Dispatch d;
    {
      std::unique_lock lk(q_mu_);
      q_cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      d = std::move(queue_.front());
      queue_.pop_front();
      ++busy_;
    }
    try {
      auto result = execute(d);
      auto step = orch_->on_result(d.workflow_id, d.command.command_id, std::move(result));
      run(std::move(step.dispatches));
    } catch (const std::exception& e) {
      log::error("principal", "dispatch " + d.command.command_id + " crashed: " + e.what());
    }
    {
      std::lock_guard lk(q_mu_);
      --busy_;
    }
    idle_cv_.notify_all();
  }
}

void Principal::on_audit(const orchestrator::WorkflowRecord& r, const orchestrator::AuditEvent& e) {
  auto j = orchestrator::to_json(e);
  j["workflow_id"] = r.workflow_id;
  j["status"] = to_string(r.status);
  events_.publish(r.tenant_id, r.workflow_id, j.dump());

  if (e.kind != "workflow" || (e.to != "completed" && e.to != "failed")) return;
  {
    std::lock_guard lk(wf_mu_);
    if (!rated_.insert(r.workflow_id).second) return;
  }
  std::map<std::string, std::pair<int, int>> per_gateway;  // assigned, succeeded
  for (const auto& n : r.graph.nodes) {
    if (!n.gateway_id || *n.gateway_id == planner::kLocalGatewayId) continue;
    auto& c = per_gateway[*n.gateway_id];
    ++c.first;
    if (n.status == NodeStatus::succeeded) ++c.second;
  }
  for (const auto& [gw, c] : per_gateway) {
    try {
      double rating = roster_.update_rating(gw, static_cast<double>(c.second) / c.first);
      context_->upsert_memory({r.tenant_id, r.user_id, "gateway." + gw + ".rating", std::to_string(rating),
                               context::MemoryKind::gateway_stat, 0});
    } catch (const Error& ex) {
      log::warn("principal", std::string("rating skipped: ") + ex.what());
    }
  }
}

std::optional<orchestrator::Substitute> Principal::find_substitute(const orchestrator::WorkflowRecord& r,
                                                                    const TaskSpec& task,
                                                                    const std::vector<std::string>& tried) {
  std::string qid;
  {
    std::lock_guard lk(wf_mu_);
    qid = r.workflow_id + "/recovery/" + std::to_string(++wf_queries_[r.workflow_id]);
  }
  std::string summary;
  if (context_->has_workflow(r.workflow_id)) {
    summary = context_->assemble_context(r.workflow_id, context::Purpose::query_summary).text;
  }
  TaskSpec t = task;
  t.depends_on.clear();
  auto original = r.manifests.find(task.task_id);
  auto excluded = [&](const ResourceManifest& m) {
    if (std::find(tried.begin(), tried.end(), m.resource_id) != tried.end()) return true;
    return original != r.manifests.end() && !covers_outputs(m, original->second);
  };
  ResourceQuery q{qid, {t}, summary, gateway::kOffersPerTask};
  FanOutResult fo;
  try {
    fo = fan_out_query(q, fanout_epoch(r.workflow_id), r.workflow_id,
                       [&](const ResourceManifest& m) { return !excluded(m); });
  } catch (const Error& e) {
    log::warn("principal", std::string("recovery search failed: ") + e.what());
    return std::nullopt;
  }
  auto ratings = roster_.ratings();
  std::vector<planner::Candidate> candidates;
  for (const auto& so : fo.offers) {
    auto it = so.offer.per_task.find(task.task_id);
    if (it == so.offer.per_task.end()) continue;
    double rating = ratings.count(so.gateway_id) ? ratings.at(so.gateway_id) : kInitialRating;
    for (const auto& sm : it->second) {
      if (!excluded(sm.manifest)) candidates.push_back({sm.manifest, sm.score, so.gateway_id, rating});
    }
  }
  if (auto it = fo.local.find(task.task_id); it != fo.local.end()) {
    for (const auto& sm : it->second) {
      if (excluded(sm.manifest)) continue;
      const auto& owner = sm.manifest.owner_gateway;
      bool builtin = owner.empty() || owner == planner::kLocalGatewayId;
      double rating = builtin ? 1.0 : (ratings.count(owner) ? ratings.at(owner) : kInitialRating);
      candidates.push_back({sm.manifest, sm.score, builtin ? std::string(planner::kLocalGatewayId) : owner, rating});
    }
  }
  auto best = planner::pick_best(candidates);
  if (!best) return std::nullopt;
  return orchestrator::Substitute{best->manifest, best->gateway_id};
}

}  // namespace dawn::principal
