#include "vessal/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace vessal {

namespace {

std::vector<int> unlabeled_indices(const Pool& pool) {
  std::vector<int> out;
  for (int i = 0; i < pool.size(); ++i)
    if (!pool.labeled_mask[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

void check_budget(const Pool& pool, int k, const char* op) {
  if (k < 0) throw std::invalid_argument(std::string(op) + ": k must be >= 0");
  const int avail = pool.unlabeled_count();
  if (k > avail)
    throw std::invalid_argument(std::string(op) + ": k=" + std::to_string(k) +
                                " exceeds " + std::to_string(avail) +
                                " unlabeled points");
}

void check_embeddings(const Pool& pool, const char* op) {
  if (pool.embeddings.rows() != pool.size())
    throw std::invalid_argument(std::string(op) +
                                ": embeddings rows do not match the mask");
}

// Draw an index from candidates proportional to weights; uniform fallback
// when all weights vanish (e.g. every candidate duplicates a chosen point).
int weighted_draw(const std::vector<int>& candidates,
                  const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0)
    return candidates[static_cast<std::size_t>(
        rng.uniform_int(candidates.size()))];
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cum += weights[i];
    if (u < cum) return candidates[i];
  }
  return candidates.back();
}

}  // namespace

int Pool::unlabeled_count() const {
  int n = 0;
  for (bool labeled : labeled_mask)
    if (!labeled) ++n;
  return n;
}

std::vector<int> kmeanspp_select(const Pool& pool, int k, Rng& rng) {
  check_budget(pool, k, "kmeanspp_select");
  check_embeddings(pool, "kmeanspp_select");
  std::vector<int> candidates = unlabeled_indices(pool);
  std::vector<int> chosen;
  if (k == 0) return chosen;

  // d2[i] tracks candidate i's squared distance to its nearest chosen point;
  // before anything is chosen the squared norm plays that role.
  std::vector<double> d2(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    d2[i] = pool.embeddings.row(candidates[i]).squaredNorm();

  while (static_cast<int>(chosen.size()) < k) {
    const int pick = weighted_draw(candidates, d2, rng);
    chosen.push_back(pick);
    std::vector<int> next_candidates;
    std::vector<double> next_d2;
    next_candidates.reserve(candidates.size() - 1);
    next_d2.reserve(candidates.size() - 1);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == pick) continue;
      const double to_pick =
          (pool.embeddings.row(candidates[i]) - pool.embeddings.row(pick))
              .squaredNorm();
      next_candidates.push_back(candidates[i]);
      next_d2.push_back(chosen.size() == 1 ? to_pick : std::min(d2[i], to_pick));
    }
    candidates = std::move(next_candidates);
    d2 = std::move(next_d2);
  }
  return chosen;
}

std::vector<int> kcenter_greedy(const Pool& pool, int k) {
  check_budget(pool, k, "kcenter_greedy");
  check_embeddings(pool, "kcenter_greedy");
  std::vector<int> candidates = unlabeled_indices(pool);
  std::vector<int> chosen;
  if (k == 0) return chosen;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(candidates.size(), kInf);
  for (int c = 0; c < pool.size(); ++c) {
    if (!pool.labeled_mask[static_cast<std::size_t>(c)]) continue;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      dist[i] = std::min(dist[i], (pool.embeddings.row(candidates[i]) -
                                   pool.embeddings.row(c))
                                      .norm());
  }

  std::vector<bool> taken(candidates.size(), false);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      if (best < 0 || dist[i] > dist[static_cast<std::size_t>(best)])
        best = static_cast<int>(i);
    }
    taken[static_cast<std::size_t>(best)] = true;
    chosen.push_back(candidates[static_cast<std::size_t>(best)]);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      dist[i] = std::min(
          dist[i],
          (pool.embeddings.row(candidates[i]) -
           pool.embeddings.row(candidates[static_cast<std::size_t>(best)]))
              .norm());
    }
  }
  return chosen;
}

std::vector<int> confidence_select(const Pool& pool, int k) {
  check_budget(pool, k, "confidence_select");
  if (pool.probs.rows() != pool.size())
    throw std::invalid_argument("confidence_select: probs rows do not match the mask");
  std::vector<int> candidates = unlabeled_indices(pool);
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return pool.probs.row(a).maxCoeff() < pool.probs.row(b).maxCoeff();
  });
  candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

std::vector<int> random_select(const Pool& pool, int k, Rng& rng) {
  check_budget(pool, k, "random_select");
  std::vector<int> candidates = unlabeled_indices(pool);
  for (int i = 0; i < k; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.uniform_int(candidates.size() -
                                                 static_cast<std::size_t>(i)));
    std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
  }
  candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

}  // namespace vessal
