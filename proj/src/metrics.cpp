#include <algorithm>
#include <cmath>

#include "dawn/log.hpp"
#include "dawn/retrieval.hpp"

namespace dawn::retrieval {

namespace {

double gain(double grade) { return std::exp2(grade) - 1.0; }

}  // namespace

double ndcg_at_k(std::span<const std::string> ranking,
                 const std::map<std::string, double>& relevance, int k) {
  if (k < 1) return 0.0;
  const auto depth = static_cast<std::size_t>(k);

  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(depth, ranking.size()); ++i) {
    auto it = relevance.find(ranking[i]);
    if (it == relevance.end()) continue;
    dcg += gain(it->second) / std::log2(static_cast<double>(i) + 2.0);
  }

  std::vector<double> grades;
  grades.reserve(relevance.size());
  for (const auto& [_, g] : relevance) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(depth, grades.size()); ++i) {
    idcg += gain(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg == 0.0) return 0.0;
  return dcg / idcg;
}

double recall_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                   int k) {
  if (relevant.empty()) {
    log::debug("metrics", "recall over empty relevant set defined as 1.0");
    return 1.0;
  }
  if (k < 1) return 0.0;
  std::set<std::string> hit;
  for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size()); ++i) {
    if (relevant.contains(ranking[i])) hit.insert(ranking[i]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(relevant.size());
}

}  // namespace dawn::retrieval
