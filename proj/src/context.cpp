#include "dawn/context.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dawn/error.hpp"
#include "dawn/registry.hpp"
#include "dawn/retrieval.hpp"

namespace dawn::context {

std::string_view to_string(PoolDirection d) {
  switch (d) {
    case PoolDirection::to_gateway: return "to_gateway";
    case PoolDirection::from_gateway: return "from_gateway";
    case PoolDirection::to_resource: return "to_resource";
    case PoolDirection::from_resource: return "from_resource";
  }
  return "to_gateway";
}

std::string_view to_string(MemoryKind k) {
  switch (k) {
    case MemoryKind::preference: return "preference";
    case MemoryKind::fact: return "fact";
    case MemoryKind::gateway_stat: return "gateway_stat";
  }
  return "preference";
}

namespace {

std::optional<PoolDirection> pool_direction_from_string(std::string_view s) {
  for (auto d : {PoolDirection::to_gateway, PoolDirection::from_gateway, PoolDirection::to_resource,
                 PoolDirection::from_resource}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::optional<MemoryKind> memory_kind_from_string(std::string_view s) {
  for (auto k : {MemoryKind::preference, MemoryKind::fact, MemoryKind::gateway_stat}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

Json pool_to_json(const PoolMessage& m) {
  return {{"workflow_id", m.workflow_id},
          {"direction", to_string(m.direction)},
          {"peer_id", m.peer_id},
          {"body", Json::parse(encode(m.body))},
          {"at", m.at}};
}

PoolMessage pool_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  PoolMessage m;
  m.workflow_id = r.string("workflow_id");
  auto d = pool_direction_from_string(r.string("direction"));
  if (!d) throw_at(r.child_path("direction"), "unknown direction");
  m.direction = *d;
  m.peer_id = r.string("peer_id");
  m.body = decode(r.object("body").dump());
  m.at = r.integer("at");
  r.finish();
  return m;
}

}  // namespace

Json to_json(const MemoryItem& m) {
  return {{"tenant_id", m.tenant_id}, {"user_id", m.user_id},       {"key", m.key},
          {"value", m.value},         {"kind", to_string(m.kind)}, {"updated_at", m.updated_at}};
}

MemoryItem memory_item_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  MemoryItem m;
  m.tenant_id = r.string("tenant_id");
  m.user_id = r.string("user_id");
  m.key = r.string("key");
  m.value = r.string("value");
  auto k = memory_kind_from_string(r.string("kind"));
  if (!k) throw_at(r.child_path("kind"), "unknown memory kind");
  m.kind = *k;
  m.updated_at = r.integer("updated_at");
  r.finish();
  return m;
}

// ---------------------------------------------------------------------------

ContextStore::ContextStore(std::optional<std::filesystem::path> dir, Clock clock)
    : dir_(std::move(dir)), clock_(std::move(clock)) {
  if (dir_) load();
}

void ContextStore::load() {
  auto mem = *dir_ / "memory.json";
  if (std::filesystem::exists(mem)) {
    auto j = parse_json(registry::read_file(mem));
    if (!j.is_array()) throw_at("$", "expected memory item array");
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto m = memory_item_from_json(j[i], "$[" + std::to_string(i) + "]");
      memory_[{m.tenant_id, m.user_id, m.key}] = m;
    }
  }
  auto wdir = *dir_ / "workflows";
  if (!std::filesystem::exists(wdir)) return;
  for (const auto& f : std::filesystem::directory_iterator(wdir)) {
    if (f.path().extension() != ".json") continue;
    auto j = parse_json(registry::read_file(f.path()));
    JsonReader r(j, "$");
    auto id = r.string("workflow_id");
    WorkflowContext w;
    w.tenant_id = r.string("tenant_id");
    w.user_id = r.string("user_id");
    w.intent = r.string("intent");
    const auto& sp = r.array("scratchpad");
    for (std::size_t i = 0; i < sp.size(); ++i) {
      auto step = plan_step_from_json(sp[i], "$.scratchpad[" + std::to_string(i) + "]");
      w.scratchpad.push_back({id, step.step_no, step});
    }
    const auto& pool = r.array("pool");
    for (std::size_t i = 0; i < pool.size(); ++i) {
      w.pool.push_back(pool_from_json(pool[i], "$.pool[" + std::to_string(i) + "]"));
    }
    for (const auto& c : r.array("completed")) {
      w.completed.push_back({c.at("task_id").get<std::string>(), c.at("summary").get<std::string>()});
    }
    for (const auto& p : r.array("pending")) {
      w.pending.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    r.finish();
    workflows_.emplace(id, std::move(w));
  }
}

void ContextStore::persist_workflow(const std::string& workflow_id, const WorkflowContext& w) const {
  if (!dir_) return;
  Json sp = Json::array();
  for (const auto& e : w.scratchpad) sp.push_back(to_json(e.content));
  Json pool = Json::array();
  for (const auto& m : w.pool) pool.push_back(pool_to_json(m));
  Json completed = Json::array();
  for (const auto& c : w.completed) completed.push_back({{"task_id", c.task_id}, {"summary", c.summary}});
  Json pending = Json::array();
  for (const auto& [id, d] : w.pending) pending.push_back({id, d});
  Json doc = {{"workflow_id", workflow_id}, {"tenant_id", w.tenant_id}, {"user_id", w.user_id},
              {"intent", w.intent},         {"scratchpad", sp},         {"pool", pool},
              {"completed", completed},     {"pending", pending}};
  registry::write_file_atomic(*dir_ / "workflows" / (workflow_id + ".json"), doc.dump());
}

void ContextStore::persist_memory() const {
  if (!dir_) return;
  Json arr = Json::array();
  for (const auto& [_, m] : memory_) arr.push_back(to_json(m));
  registry::write_file_atomic(*dir_ / "memory.json", arr.dump(1));
}

ContextStore::WorkflowContext& ContextStore::must_find(const std::string& workflow_id) {
  auto it = workflows_.find(workflow_id);
  if (it == workflows_.end()) throw Error(ErrorCode::unknown_workflow, workflow_id);
  return it->second;
}

const ContextStore::WorkflowContext& ContextStore::must_find(const std::string& workflow_id) const {
  auto it = workflows_.find(workflow_id);
  if (it == workflows_.end()) throw Error(ErrorCode::unknown_workflow, workflow_id);
  return it->second;
}

void ContextStore::register_workflow(const std::string& workflow_id, const std::string& tenant_id,
                                     const std::string& user_id, const std::string& intent_text) {
  std::lock_guard lock(mu_);
  auto& w = workflows_[workflow_id];
  w.tenant_id = tenant_id;
  w.user_id = user_id;
  w.intent = intent_text;
  persist_workflow(workflow_id, w);
}

bool ContextStore::has_workflow(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  return workflows_.contains(workflow_id);
}

void ContextStore::append_scratchpad(const std::string& workflow_id, const PlanStep& step) {
  std::lock_guard lock(mu_);
  auto& w = must_find(workflow_id);
  w.scratchpad.push_back({workflow_id, step.step_no, step});
  persist_workflow(workflow_id, w);
}

void ContextStore::append_pool(PoolMessage message) {
  std::lock_guard lock(mu_);
  auto& w = must_find(message.workflow_id);
  message.at = clock_();
  if (!w.pool.empty()) message.at = std::max(message.at, w.pool.back().at);
  auto id = message.workflow_id;
  w.pool.push_back(std::move(message));
  persist_workflow(id, w);
}

std::vector<ScratchpadEntry> ContextStore::scratchpad(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  return must_find(workflow_id).scratchpad;
}

std::vector<PoolMessage> ContextStore::pool(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  return must_find(workflow_id).pool;
}

void ContextStore::record_completed(const std::string& workflow_id, const std::string& task_id,
                                    const std::string& summary) {
  std::lock_guard lock(mu_);
  auto& w = must_find(workflow_id);
  w.completed.push_back({task_id, summary});
  std::erase_if(w.pending, [&](const auto& p) { return p.first == task_id; });
  persist_workflow(workflow_id, w);
}

void ContextStore::set_pending(const std::string& workflow_id,
                               std::vector<std::pair<std::string, std::string>> pending) {
  std::lock_guard lock(mu_);
  auto& w = must_find(workflow_id);
  w.pending = std::move(pending);
  persist_workflow(workflow_id, w);
}

AssembledContext ContextStore::assemble_context(const std::string& workflow_id, Purpose purpose) const {
  std::lock_guard lock(mu_);
  const auto& w = must_find(workflow_id);

  std::vector<std::string> head;
  std::vector<std::string> head_cites;
  head.push_back("Intent: " + w.intent);
  head_cites.emplace_back("intent");

  // Memory items whose key has an intent token as a dotted prefix.
  std::vector<const MemoryItem*> memories;
  auto tokens = retrieval::token_set(w.intent);
  for (const auto& [k, m] : memory_) {
    if (m.tenant_id != w.tenant_id || m.user_id != w.user_id) continue;
    for (const auto& t : tokens) {
      if (m.key == t || m.key.starts_with(t + ".")) {
        memories.push_back(&m);
        break;
      }
    }
  }

  std::vector<std::string> tail;
  std::vector<std::string> tail_cites;
  if (purpose == Purpose::resume && !w.pending.empty()) {
    tail.emplace_back("Pending tasks:");
    tail_cites.emplace_back("");
    for (const auto& [id, d] : w.pending) {
      tail.push_back("- " + id + ": " + d);
      tail_cites.push_back("pending:" + id);
    }
  }
  if (!memories.empty()) {
    tail.emplace_back("Preferences:");
    tail_cites.emplace_back("");
    for (const auto* m : memories) {
      tail.push_back("- " + m->key + " = " + m->value);
      tail_cites.push_back("memory:" + m->key);
    }
  }

  std::size_t first_step = 0;
  auto render_all = [&](std::vector<std::string>* cites) {
    std::string text;
    auto add = [&](const std::string& line, const std::string& cite) {
      text += line;
      text += '\n';
      if (cites && !cite.empty()) cites->push_back(cite);
    };
    for (std::size_t i = 0; i < head.size(); ++i) add(head[i], head_cites[i]);
    if (first_step < w.completed.size()) {
      add("Completed steps:", "");
      for (std::size_t i = first_step; i < w.completed.size(); ++i) {
        const auto& c = w.completed[i];
        add("- " + c.task_id + ": " + c.summary, "step:" + c.task_id);
      }
    }
    for (std::size_t i = 0; i < tail.size(); ++i) add(tail[i], tail_cites[i]);
    return text;
  };

  auto text = render_all(nullptr);
  while (text.size() > kContextBudgetChars && first_step < w.completed.size()) {
    ++first_step;
    text = render_all(nullptr);
  }
  AssembledContext out;
  out.text = render_all(&out.citations);
  if (out.text.size() > kContextBudgetChars) out.text.resize(kContextBudgetChars);
  return out;
}

void ContextStore::upsert_memory(MemoryItem item) {
  std::lock_guard lock(mu_);
  item.updated_at = clock_();
  memory_[{item.tenant_id, item.user_id, item.key}] = std::move(item);
  persist_memory();
}

std::vector<MemoryItem> ContextStore::lookup_memory(const std::string& tenant_id, const std::string& user_id,
                                                    const std::string& prefix) const {
  std::lock_guard lock(mu_);
  std::vector<MemoryItem> out;
  for (const auto& [k, m] : memory_) {
    if (std::get<0>(k) == tenant_id && std::get<1>(k) == user_id && m.key.starts_with(prefix)) {
      out.push_back(m);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MemoryItem& a, const MemoryItem& b) { return a.updated_at > b.updated_at; });
  return out;
}

std::string ContextStore::export_trace(const std::string& workflow_id) const {
  std::lock_guard lock(mu_);
  const auto& w = must_find(workflow_id);
  std::string out;
  for (const auto& e : w.scratchpad) {
    out += Json{{"kind", "scratchpad"}, {"workflow_id", workflow_id}, {"step", to_json(e.content)}}.dump();
    out += '\n';
  }
  for (const auto& m : w.pool) {
    auto j = pool_to_json(m);
    j["kind"] = "pool";
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace dawn::context
