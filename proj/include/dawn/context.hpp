#pragma once

// Context layer: per-workflow scratchpad and message pool (both append-only),
// a per-(tenant, user) memory bank, and deterministic prompt assembly.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dawn/codec.hpp"
#include "dawn/plan_step.hpp"

namespace dawn::context {

inline constexpr std::size_t kContextBudgetChars = 4000;

struct ScratchpadEntry {
  std::string workflow_id;
  int step_no = 0;
  PlanStep content;
};

enum class PoolDirection { to_gateway, from_gateway, to_resource, from_resource };
std::string_view to_string(PoolDirection d);

struct PoolMessage {
  std::string workflow_id;
  PoolDirection direction = PoolDirection::to_gateway;
  std::string peer_id;
  Message body;
  Timestamp at = 0;
};

enum class MemoryKind { preference, fact, gateway_stat };
std::string_view to_string(MemoryKind k);

struct MemoryItem {
  std::string tenant_id;
  std::string user_id;
  std::string key;
  std::string value;
  MemoryKind kind = MemoryKind::preference;
  Timestamp updated_at = 0;

  bool operator==(const MemoryItem&) const = default;
};

enum class Purpose { plan_prompt, query_summary, resume };

struct AssembledContext {
  std::string text;
  std::vector<std::string> citations;
};

struct CompletedStep {
  std::string task_id;
  std::string summary;
};

class ContextStore {
 public:
  /// With a directory, workflow contexts and the memory bank persist there.
  explicit ContextStore(std::optional<std::filesystem::path> dir = std::nullopt,
                        Clock clock = system_clock());

  void register_workflow(const std::string& workflow_id, const std::string& tenant_id,
                         const std::string& user_id, const std::string& intent_text);
  bool has_workflow(const std::string& workflow_id) const;

  void append_scratchpad(const std::string& workflow_id, const PlanStep& step);
  void append_pool(PoolMessage message);
  std::vector<ScratchpadEntry> scratchpad(const std::string& workflow_id) const;
  std::vector<PoolMessage> pool(const std::string& workflow_id) const;

  void record_completed(const std::string& workflow_id, const std::string& task_id,
                        const std::string& summary);
  void set_pending(const std::string& workflow_id,
                   std::vector<std::pair<std::string, std::string>> pending);

  AssembledContext assemble_context(const std::string& workflow_id, Purpose purpose) const;

  void upsert_memory(MemoryItem item);
  /// Items for (tenant, user) whose key starts with `prefix`, newest first.
  std::vector<MemoryItem> lookup_memory(const std::string& tenant_id, const std::string& user_id,
                                        const std::string& prefix) const;

  /// JSON-lines export of scratchpad and pool for one workflow.
  std::string export_trace(const std::string& workflow_id) const;

 private:
  struct WorkflowContext {
    std::string tenant_id;
    std::string user_id;
    std::string intent;
    std::vector<ScratchpadEntry> scratchpad;
    std::vector<PoolMessage> pool;
    std::vector<CompletedStep> completed;
    std::vector<std::pair<std::string, std::string>> pending;
  };
  using MemoryKey = std::tuple<std::string, std::string, std::string>;

  WorkflowContext& must_find(const std::string& workflow_id);
  const WorkflowContext& must_find(const std::string& workflow_id) const;
  void persist_workflow(const std::string& workflow_id, const WorkflowContext& w) const;
  void persist_memory() const;
  void load();

  std::optional<std::filesystem::path> dir_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, WorkflowContext> workflows_;
  std::map<MemoryKey, MemoryItem> memory_;
};

Json to_json(const MemoryItem& m);
MemoryItem memory_item_from_json(const Json& j, const std::string& path);

}  // namespace dawn::context
