#pragma once

// Two-stage resource retrieval: exhaustive cosine top-k over token-hash
// embeddings, followed by a pluggable re-ranker. Also the NDCG/Recall
// metrics used to evaluate it.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dawn/protocol.hpp"

namespace dawn::retrieval {

inline constexpr std::size_t kEmbeddingDim = 256;
inline constexpr int kDefaultTopK = 5;

/// Lowercased alphanumeric runs of `text`, in order.
std::vector<std::string> tokenize(std::string_view text);
std::set<std::string> token_set(std::string_view text);

struct EmbeddingVector {
  std::array<double, kEmbeddingDim> values{};

  double norm() const;
  bool is_zero() const;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

/// Default embedder: each token adds 1 to bucket fnv1a(token) % 256, then
/// the vector is L2-normalised. Empty text embeds to the zero vector.
class HashEmbedder final : public Embedder {
 public:
  EmbeddingVector embed(std::string_view text) const override;
};

EmbeddingVector embed(std::string_view text);

enum class Stage { retrieved, reranked };

struct RankedItem {
  std::string resource_id;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

struct RankedList {
  std::string query_id;
  std::vector<RankedItem> items;
  Stage stage = Stage::retrieved;

  std::vector<std::string> ids() const;
};

/// Optional pre-filter applied before cosine ranking.
struct SearchFilter {
  std::optional<ResourceKind> kind;
  // Every keyword must occur as a token of the entry's searchable text.
  std::vector<std::string> required_keywords;
};

/// Immutable snapshot of searchable entries. Rebuilt on registry mutation.
class Index {
 public:
  struct Entry {
    std::string resource_id;
    ResourceKind kind = ResourceKind::tool;
    std::string text;
    std::set<std::string> tokens;
  };

  Index() = default;
  explicit Index(std::span<const ResourceManifest> manifests,
                 std::shared_ptr<const Embedder> embedder = nullptr);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(std::string_view resource_id) const;
  std::span<const double> matrix() const { return matrix_; }
  const Embedder& embedder() const { return *embedder_; }

 private:
  std::vector<Entry> entries_;
  std::vector<double> matrix_;  // entries_.size() x kEmbeddingDim
  std::shared_ptr<const Embedder> embedder_;
};

enum class Execution { serial, parallel };

/// Cosine score of the query against every entry, in entry order.
std::vector<double> score_all(const Index& index, std::string_view query,
                              Execution exec = Execution::parallel);

/// Top-k entries by cosine score; ties broken by ascending resource_id.
RankedList retrieve(const Index& index, std::string_view query, int k,
                    const SearchFilter& filter = {}, Execution exec = Execution::parallel);

struct RerankCandidate {
  std::string resource_id;
  std::string text;
  double score = 0.0;
};

/// Thrown by providers that exceed their time budget.
class ProviderTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RerankProvider {
 public:
  virtual ~RerankProvider() = default;
  virtual std::string name() const = 0;
  /// A (possibly truncated) permutation of candidate ids with scores in [0,1].
  virtual std::vector<RankedItem> rank(std::string_view query, std::string_view context,
                                       std::span<const RerankCandidate> candidates) = 0;
};

class IdentityReranker final : public RerankProvider {
 public:
  std::string name() const override { return "identity"; }
  std::vector<RankedItem> rank(std::string_view, std::string_view,
                               std::span<const RerankCandidate> candidates) override;
};

/// score = |query tokens ∩ candidate tokens| / |query tokens|.
class LexicalOverlapReranker final : public RerankProvider {
 public:
  std::string name() const override { return "lexical"; }
  std::vector<RankedItem> rank(std::string_view query, std::string_view context,
                               std::span<const RerankCandidate> candidates) override;
};

double lexical_overlap(std::string_view query, std::string_view text);

struct RerankOutcome {
  RankedList list;
  bool fell_back = false;
  std::string fallback_reason;
};

/// Stage 2. Provider output is filtered to candidate ids, de-duplicated,
/// clamped to [0,1] and sorted; any provider exception falls back to the
/// input ranking.
RerankOutcome rerank(std::string_view query, std::string_view context,
                     const RankedList& candidates, const Index& index, RerankProvider& provider);

// ---------------------------------------------------------------------------
// Metrics

/// NDCG@k with gain 2^grade - 1 and discount log2(rank + 1). Zero when the
/// ideal DCG is zero.
double ndcg_at_k(std::span<const std::string> ranking,
                 const std::map<std::string, double>& relevance, int k);

/// |top-k ∩ relevant| / |relevant|; 1.0 when `relevant` is empty.
double recall_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                   int k);

}  // namespace dawn::retrieval
