#pragma once

// Gateway-side store of resource manifests.
//
// Readers work against immutable snapshots (entries plus a retrieval index)
// swapped in on every mutation, so searches never block on writers. Writers
// are serialised. When a snapshot path is configured the registry is written
// to disk after each mutation (temp file + rename) and reloaded on start.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dawn/codec.hpp"
#include "dawn/protocol.hpp"
#include "dawn/retrieval.hpp"
#include "dawn/transport.hpp"

namespace dawn::registry {

enum class Validation { unvalidated, passed, failed };

std::string_view to_string(Validation v);

struct RegistryEntry {
  ResourceManifest manifest;
  Timestamp registered_at = 0;
  Validation validation = Validation::unvalidated;
  std::optional<std::string> suspension_reason;
  std::optional<Timestamp> suspended_at;

  /// Eligible for retrieval: active and validated.
  bool searchable() const;

  bool operator==(const RegistryEntry&) const = default;
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::string resource_id;
  std::vector<ValidationCheck> checks;
  bool overall = false;
};

struct Snapshot {
  std::uint64_t version = 0;
  std::map<std::string, RegistryEntry> entries;
  std::shared_ptr<const retrieval::Index> index;
  // Manifests in index order, for building offers.
  std::vector<ResourceManifest> searchable;

  const ResourceManifest* searchable_manifest(std::string_view id) const;
};

struct Options {
  std::string gateway_id;
  std::optional<std::filesystem::path> snapshot_path;
  Clock clock = system_clock();
  std::int64_t probe_timeout_ms = 2000;
  std::shared_ptr<const retrieval::Embedder> embedder;
};

class Registry {
 public:
  explicit Registry(Options options);

  /// Throws Error(invalid_manifest) or Error(duplicate_id).
  RegistryEntry register_resource(ResourceManifest m);

  /// Runs connectivity, schema echo and description-consistency checks
  /// against the live endpoint. Fail suspends; pass (re)activates.
  ValidationReport validate(const std::string& resource_id, ResourceInvoker& invoker);

  ResourceMetrics record_outcome(const std::string& resource_id, const ExecutionResult& result);

  RegistryEntry suspend(const std::string& resource_id, const std::string& reason);
  /// Requires a passing validation newer than the suspension.
  RegistryEntry reinstate(const std::string& resource_id);

  /// Registers manifests as already validated (eval harness corpora).
  void seed(std::vector<ResourceManifest> manifests);

  std::optional<RegistryEntry> get(const std::string& resource_id) const;
  std::vector<RegistryEntry> list() const;
  std::shared_ptr<const Snapshot> snapshot() const;

  void save() const;
  const std::string& gateway_id() const { return options_.gateway_id; }

 private:
  using EntryMap = std::map<std::string, RegistryEntry>;

  RegistryEntry& must_find(EntryMap& entries, const std::string& id);
  // Publishes `entries` as the new snapshot. Rebuilds the index only when the
  // searchable set changed.
  void publish(EntryMap entries, bool reindex);
  void load();

  Options options_;
  std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snap_;
};

Json to_json(const RegistryEntry& e);
Json to_json(const ValidationReport& r);
RegistryEntry entry_from_json(const Json& j, const std::string& path);

/// Reads a JSON array of manifests (the seed-corpus format).
std::vector<ResourceManifest> load_manifests(const std::filesystem::path& file);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace dawn::registry
