#include "dawn/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "dawn/kernels.hpp"
#include "dawn/log.hpp"

namespace dawn::retrieval {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool ranks_before(const RankedItem& a, const RankedItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.resource_id < b.resource_id;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::set<std::string> token_set(std::string_view text) {
  auto t = tokenize(text);
  return {t.begin(), t.end()};
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += a.values[i] * b.values[i];
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
  EmbeddingVector v;
  for (const auto& tok : tokenize(text)) v.values[fnv1a(tok) % kEmbeddingDim] += 1.0;
  double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

EmbeddingVector embed(std::string_view text) {
  static const HashEmbedder embedder;
  return embedder.embed(text);
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.resource_id);
  return out;
}

// ---------------------------------------------------------------------------

Index::Index(std::span<const ResourceManifest> manifests, std::shared_ptr<const Embedder> embedder)
    : embedder_(embedder ? std::move(embedder) : std::make_shared<HashEmbedder>()) {
  entries_.reserve(manifests.size());
  matrix_.reserve(manifests.size() * kEmbeddingDim);
  for (const auto& m : manifests) {
    Entry e{m.resource_id, m.kind, m.search_text(), {}};
    e.tokens = token_set(e.text);
    auto v = embedder_->embed(e.text);
    matrix_.insert(matrix_.end(), v.values.begin(), v.values.end());
    entries_.push_back(std::move(e));
  }
}

const Index::Entry* Index::find(std::string_view resource_id) const {
  for (const auto& e : entries_) {
    if (e.resource_id == resource_id) return &e;
  }
  return nullptr;
}

std::vector<double> score_all(const Index& index, std::string_view query, Execution exec) {
  std::vector<double> out(index.size(), 0.0);
  if (index.size() == 0) return out;
  auto q = index.embedder().embed(query);
  if (exec == Execution::parallel) {
    kernels::dot_scores_parallel(index.matrix(), kEmbeddingDim, q.values, out);
  } else {
    kernels::dot_scores_serial(index.matrix(), kEmbeddingDim, q.values, out);
  }
  return out;
}

RankedList retrieve(const Index& index, std::string_view query, int k, const SearchFilter& filter,
                    Execution exec) {
  RankedList out;
  out.stage = Stage::retrieved;
  if (k < 1 || index.size() == 0) return out;

  auto scores = score_all(index, query, exec);
  std::vector<std::string> keywords;
  for (const auto& kw : filter.required_keywords) {
    for (auto& t : tokenize(kw)) keywords.push_back(std::move(t));
  }

  std::vector<RankedItem> items;
  items.reserve(index.size());
  const auto& entries = index.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (filter.kind && e.kind != *filter.kind) continue;
    bool has_all = std::all_of(keywords.begin(), keywords.end(),
                               [&](const std::string& kw) { return e.tokens.contains(kw); });
    if (!has_all) continue;
    items.push_back({e.resource_id, scores[i]});
  }
  auto take = std::min<std::size_t>(static_cast<std::size_t>(k), items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(take), items.end(),
                    ranks_before);
  items.resize(take);
  out.items = std::move(items);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<RankedItem> IdentityReranker::rank(std::string_view, std::string_view,
                                               std::span<const RerankCandidate> candidates) {
  std::vector<RankedItem> out;
  for (const auto& c : candidates) out.push_back({c.resource_id, c.score});
  return out;
}

double lexical_overlap(std::string_view query, std::string_view text) {
  auto q = token_set(query);
  if (q.empty()) return 0.0;
  auto d = token_set(text);
  std::size_t hit = 0;
  for (const auto& t : q) hit += d.contains(t) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(q.size());
}

std::vector<RankedItem> LexicalOverlapReranker::rank(std::string_view query, std::string_view,
                                                     std::span<const RerankCandidate> candidates) {
  std::vector<RankedItem> out;
  for (const auto& c : candidates) out.push_back({c.resource_id, lexical_overlap(query, c.text)});
  return out;
}

RerankOutcome rerank(std::string_view query, std::string_view context,
                     const RankedList& candidates, const Index& index, RerankProvider& provider) {
  RerankOutcome out;
  std::vector<RerankCandidate> input;
  input.reserve(candidates.items.size());
  for (const auto& it : candidates.items) {
    const auto* e = index.find(it.resource_id);
    input.push_back({it.resource_id, e ? e->text : std::string{}, it.score});
  }

  std::vector<RankedItem> ranked;
  try {
    ranked = provider.rank(query, context, input);
  } catch (const std::exception& e) {
    out.list = candidates;
    out.fell_back = true;
    out.fallback_reason = e.what();
    log::warn("rerank", "provider " + provider.name() + " failed, keeping stage-1 order: " +
                            e.what());
    return out;
  }

  std::unordered_set<std::string> allowed;
  for (const auto& it : candidates.items) allowed.insert(it.resource_id);
  std::unordered_set<std::string> seen;
  std::vector<RankedItem> kept;
  for (auto& it : ranked) {
    if (!allowed.contains(it.resource_id) || !seen.insert(it.resource_id).second) continue;
    double s = std::isnan(it.score) ? 0.0 : std::clamp(it.score, 0.0, 1.0);
    kept.push_back({std::move(it.resource_id), s});
  }
  std::stable_sort(kept.begin(), kept.end(), ranks_before);
  out.list.query_id = candidates.query_id;
  out.list.stage = Stage::reranked;
  out.list.items = std::move(kept);
  return out;
}

}  // namespace dawn::retrieval
