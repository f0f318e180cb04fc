#include "dawn/registry.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "dawn/error.hpp"
#include "dawn/log.hpp"

namespace dawn::registry {

std::string_view to_string(Validation v) {
  switch (v) {
    case Validation::unvalidated: return "unvalidated";
    case Validation::passed: return "passed";
    case Validation::failed: return "failed";
  }
  return "unvalidated";
}

namespace {

std::optional<Validation> validation_from_string(std::string_view s) {
  if (s == "unvalidated") return Validation::unvalidated;
  if (s == "passed") return Validation::passed;
  if (s == "failed") return Validation::failed;
  return std::nullopt;
}

}  // namespace

bool RegistryEntry::searchable() const {
  return manifest.status == ResourceStatus::active && validation == Validation::passed;
}

const ResourceManifest* Snapshot::searchable_manifest(std::string_view id) const {
  for (const auto& m : searchable) {
    if (m.resource_id == id) return &m;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json to_json(const RegistryEntry& e) {
  Json j = {{"manifest", body_to_json(e.manifest)},
            {"registered_at", e.registered_at},
            {"validation", to_string(e.validation)}};
  if (e.suspension_reason) j["suspension_reason"] = *e.suspension_reason;
  if (e.suspended_at) j["suspended_at"] = *e.suspended_at;
  return j;
}

RegistryEntry entry_from_json(const Json& j, const std::string& path) {
  JsonReader r(j, path);
  RegistryEntry e;
  e.manifest = manifest_from_json(r.object("manifest"), r.child_path("manifest"));
  e.registered_at = r.integer("registered_at");
  auto v = validation_from_string(r.string("validation"));
  if (!v) throw_at(r.child_path("validation"), "unknown validation state");
  e.validation = *v;
  e.suspension_reason = r.opt_string("suspension_reason");
  e.suspended_at = r.opt_integer("suspended_at");
  r.finish();
  return e;
}

std::vector<ResourceManifest> load_manifests(const std::filesystem::path& file) {
  auto j = parse_json(read_file(file));
  if (!j.is_array()) throw_at("$", "expected array of manifests");
  std::vector<ResourceManifest> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(manifest_from_json(j[i], "$[" + std::to_string(i) + "]"));
  }
  return out;
}

// ---------------------------------------------------------------------------

Registry::Registry(Options options) : options_(std::move(options)) {
  if (!options_.embedder) options_.embedder = std::make_shared<retrieval::HashEmbedder>();
  if (options_.snapshot_path && std::filesystem::exists(*options_.snapshot_path)) {
    load();
  } else {
    publish({}, true);
  }
}

std::shared_ptr<const Snapshot> Registry::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return snap_;
}

void Registry::publish(EntryMap entries, bool reindex) {
  auto next = std::make_shared<Snapshot>();
  auto prev = snapshot();
  next->version = prev ? prev->version + 1 : 0;
  for (const auto& [id, e] : entries) {
    if (e.searchable()) next->searchable.push_back(e.manifest);
  }
  if (reindex || !prev) {
    next->index = std::make_shared<retrieval::Index>(next->searchable, options_.embedder);
  } else {
    next->index = prev->index;
  }
  next->entries = std::move(entries);
  {
    std::lock_guard lock(snap_mu_);
    snap_ = next;
  }
  if (options_.snapshot_path) save();
}

void Registry::save() const {
  if (!options_.snapshot_path) return;
  auto snap = snapshot();
  Json entries = Json::array();
  for (const auto& [_, e] : snap->entries) entries.push_back(to_json(e));
  Json doc = {{"type", "registry_snapshot"},
              {"v", kWireVersion},
              {"gateway_id", options_.gateway_id},
              {"entries", entries}};
  write_file_atomic(*options_.snapshot_path, doc.dump(1));
}

void Registry::load() {
  auto j = parse_json(read_file(*options_.snapshot_path));
  JsonReader r(j, "$");
  if (r.string("type") != "registry_snapshot") throw_at("$.type", "not a registry snapshot");
  if (r.integer("v") != kWireVersion) throw_at("$.v", "unsupported version");
  r.skip("gateway_id");
  const auto& arr = r.array("entries");
  r.finish();
  EntryMap entries;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto e = entry_from_json(arr[i], "$.entries[" + std::to_string(i) + "]");
    auto id = e.manifest.resource_id;
    entries.emplace(id, std::move(e));
  }
  std::lock_guard lock(write_mu_);
  publish(std::move(entries), true);
}

RegistryEntry& Registry::must_find(EntryMap& entries, const std::string& id) {
  auto it = entries.find(id);
  if (it == entries.end()) throw Error(ErrorCode::unknown_resource, id);
  return it->second;
}

RegistryEntry Registry::register_resource(ResourceManifest m) {
  auto violations = validate_manifest(m);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
    throw Error(ErrorCode::invalid_manifest, msg);
  }
  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  if (entries.contains(m.resource_id)) throw Error(ErrorCode::duplicate_id, m.resource_id);
  if (m.owner_gateway.empty()) m.owner_gateway = options_.gateway_id;
  m.status = ResourceStatus::active;
  RegistryEntry e{std::move(m), options_.clock(), Validation::unvalidated, std::nullopt, std::nullopt};
  auto id = e.manifest.resource_id;
  entries.emplace(id, e);
  publish(std::move(entries), false);
  return e;
}

void Registry::seed(std::vector<ResourceManifest> manifests) {
  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  auto now = options_.clock();
  for (auto& m : manifests) {
    auto violations = validate_manifest(m);
    if (!violations.empty()) throw Error(ErrorCode::invalid_manifest, m.resource_id + ": " + violations.front());
    if (entries.contains(m.resource_id)) throw Error(ErrorCode::duplicate_id, m.resource_id);
    if (m.owner_gateway.empty()) m.owner_gateway = options_.gateway_id;
    m.status = ResourceStatus::active;
    m.metrics.last_validated_at = now;
    auto id = m.resource_id;
    entries.emplace(id, RegistryEntry{std::move(m), now, Validation::passed, std::nullopt, std::nullopt});
  }
  publish(std::move(entries), true);
}

Json to_json(const ValidationReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"resource_id", r.resource_id}, {"overall", r.overall}, {"checks", checks}};
}

ValidationReport Registry::validate(const std::string& resource_id, ResourceInvoker& invoker) {
  ResourceManifest manifest;
  {
    auto snap = snapshot();
    auto it = snap->entries.find(resource_id);
    if (it == snap->entries.end()) throw Error(ErrorCode::unknown_resource, resource_id);
    manifest = it->second.manifest;
  }

  ValidationReport report;
  report.resource_id = resource_id;

  ExecutionCommand probe;
  probe.command_id = "validate/" + resource_id + "/0";
  probe.resource_id = resource_id;
  probe.endpoint = manifest.endpoint;
  probe.inputs = sample_inputs(manifest.input_schema);
  probe.deadline_ms = options_.probe_timeout_ms;

  std::optional<ExecutionResult> response;
  std::string transport_failure;
  try {
    response = invoker.invoke(probe);
  } catch (const std::exception& e) {
    transport_failure = e.what();
  }

  report.checks.push_back({"connectivity", response.has_value(),
                           response ? "reachable" : transport_failure});
  if (!response) {
    report.checks.push_back({"schema_echo", false, "skipped: endpoint unreachable"});
    report.checks.push_back({"description_consistency", false, "skipped: endpoint unreachable"});
  } else if (!response->ok()) {
    auto msg = response->error_message.value_or("error");
    report.checks.push_back({"schema_echo", false, "sample call failed: " + msg});
    report.checks.push_back({"description_consistency", false, "no live response"});
  } else {
    std::vector<std::string> type_errors;
    for (const auto& v : validate_values(manifest.output_schema, *response->payload)) {
      if (!v.starts_with("undeclared field")) type_errors.push_back(v);
    }
    std::string detail;
    for (const auto& v : type_errors) detail += (detail.empty() ? "" : "; ") + v;
    report.checks.push_back({"schema_echo", type_errors.empty(), type_errors.empty() ? "ok" : detail});

    std::string missing;
    for (const auto& f : manifest.output_schema) {
      if (!response->payload->contains(f.name)) missing += (missing.empty() ? "" : ", ") + f.name;
    }
    report.checks.push_back({"description_consistency", missing.empty(),
                             missing.empty() ? "ok" : "missing output fields: " + missing});
  }
  report.overall = std::all_of(report.checks.begin(), report.checks.end(),
                               [](const ValidationCheck& c) { return c.pass; });

  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  auto& e = must_find(entries, resource_id);
  auto now = options_.clock();
  if (report.overall) {
    e.validation = Validation::passed;
    e.manifest.status = ResourceStatus::active;
    e.manifest.metrics.last_validated_at = now;
    e.suspension_reason.reset();
    e.suspended_at.reset();
  } else {
    e.validation = Validation::failed;
    e.manifest.status = ResourceStatus::suspended;
    e.suspension_reason = report.checks.front().pass ? "output schema mismatch" : "connectivity failure";
    e.suspended_at = now;
    log::info("registry", "suspended " + resource_id + ": " + *e.suspension_reason);
  }
  publish(std::move(entries), true);
  return report;
}

ResourceMetrics Registry::record_outcome(const std::string& resource_id, const ExecutionResult& result) {
  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  auto& m = must_find(entries, resource_id).manifest.metrics;
  if (result.ok()) {
    ++m.success_count;
  } else {
    ++m.failure_count;
  }
  m.latency_samples_ms.push(std::max<std::int64_t>(0, result.elapsed_ms));
  auto out = m;
  publish(std::move(entries), false);
  return out;
}

RegistryEntry Registry::suspend(const std::string& resource_id, const std::string& reason) {
  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  auto& e = must_find(entries, resource_id);
  e.manifest.status = ResourceStatus::suspended;
  e.suspension_reason = reason.empty() ? "suspended" : reason;
  e.suspended_at = options_.clock();
  auto out = e;
  publish(std::move(entries), true);
  return out;
}

RegistryEntry Registry::reinstate(const std::string& resource_id) {
  std::lock_guard lock(write_mu_);
  auto entries = snapshot()->entries;
  auto& e = must_find(entries, resource_id);
  if (e.manifest.status == ResourceStatus::active) return e;
  bool fresh_pass = e.validation == Validation::passed && e.manifest.metrics.last_validated_at &&
                    (!e.suspended_at || *e.manifest.metrics.last_validated_at >= *e.suspended_at);
  if (!fresh_pass) throw Error(ErrorCode::reinstate_without_validation, resource_id);
  e.manifest.status = ResourceStatus::active;
  e.suspension_reason.reset();
  e.suspended_at.reset();
  auto out = e;
  publish(std::move(entries), true);
  return out;
}

std::optional<RegistryEntry> Registry::get(const std::string& resource_id) const {
  auto snap = snapshot();
  auto it = snap->entries.find(resource_id);
  if (it == snap->entries.end()) return std::nullopt;
  return it->second;
}

std::vector<RegistryEntry> Registry::list() const {
  auto snap = snapshot();
  std::vector<RegistryEntry> out;
  for (const auto& [_, e] : snap->entries) out.push_back(e);
  return out;
}

}  // namespace dawn::registry
