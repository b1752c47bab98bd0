#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gmrfsel/model.hpp"

namespace gmrfsel {

namespace {

std::vector<int> shuffled(int n, Rng& rng) {
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  return perm;
}

}  // namespace

GffModel random_gff(int n, double density, double r_min, double r_max, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InfeasibleParameters, "need n >= 2");
  if (!(density >= 0.0 && density <= 1.0)) throw Error(ErrorCode::InfeasibleParameters, "density outside [0,1]");
  if (!(r_min > 0.0 && r_min <= r_max && std::isfinite(r_max)))
    throw Error(ErrorCode::InfeasibleParameters, "bad resistance range");
  Rng rng(seed);
  const auto perm = shuffled(n, rng);
  std::set<std::pair<int, int>> present;
  std::vector<Edge> edges;
  for (int t = 1; t < n; ++t) {
    int u = perm[t], v = perm[rng.below(t)];
    if (u > v) std::swap(u, v);
    present.insert({u, v});
    edges.push_back({u, v, rng.log_uniform(r_min, r_max)});
  }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      if (present.count({u, v})) continue;
      if (rng.bernoulli(density)) edges.push_back({u, v, rng.log_uniform(r_min, r_max)});
    }
  return GffModel(n, std::move(edges), 0);
}

RandomGmrf random_gmrf_with_decomposition(int n, int width, double condition_cap, std::uint64_t seed,
                                          double keep_probability) {
  if (n < 1 || width < 1) throw Error(ErrorCode::InfeasibleParameters, "need n >= 1 and width >= 1");
  if (!(condition_cap > 1.0)) throw Error(ErrorCode::InfeasibleParameters, "condition cap must exceed 1");
  Rng rng(seed);
  const auto perm = shuffled(n, rng);

  std::vector<IndexSet> bags;
  std::vector<std::pair<int, int>> bag_edges;
  const int base = std::min(n, width + 1);
  bags.push_back(make_index_set(std::vector<int>(perm.begin(), perm.begin() + base)));
  // Each width-sized clique remembers the bag that created it.
  std::vector<std::pair<IndexSet, int>> cliques;
  auto add_cliques = [&](const IndexSet& bag, int owner, int must_have) {
    for (int drop : bag) {
      if (drop == must_have) continue;
      IndexSet c = set_difference(bag, {drop});
      cliques.emplace_back(std::move(c), owner);
    }
  };
  if (base == width + 1) add_cliques(bags[0], 0, -1);
  for (int t = base; t < n; ++t) {
    const auto& [clique, owner] = cliques[static_cast<size_t>(rng.below(static_cast<int>(cliques.size())))];
    IndexSet bag = set_union(clique, {perm[t]});
    const int id = static_cast<int>(bags.size());
    bag_edges.emplace_back(owner, id);
    bags.push_back(bag);
    add_cliques(bag, id, perm[t]);
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::set<std::pair<int, int>> done;
  for (const auto& bag : bags)
    for (size_t x = 0; x < bag.size(); ++x)
      for (size_t y = x + 1; y < bag.size(); ++y) {
        const int u = bag[x], v = bag[y];
        if (!done.insert({u, v}).second) continue;
        if (!rng.bernoulli(keep_probability)) continue;
        const double mag = rng.uniform(0.2, 1.0);
        const double val = rng.bernoulli(0.5) ? mag : -mag;
        a(u, v) = val;
        a(v, u) = val;
      }
  for (int i = 0; i < n; ++i) a(i, i) = rng.uniform(0.0, 1.0);

  // A diagonal shift keeps the sparsity pattern while fixing the spectrum:
  // (a_max + t) / (a_min + t) <= cap.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double a_min = es.eigenvalues()(0);
  const double a_max = es.eigenvalues()(n - 1);
  double shift;
  if (a_max - a_min < 1e-12) {
    shift = 1.0 - a_min;
  } else {
    shift = (a_max - condition_cap * a_min) / (condition_cap - 1.0) + rng.uniform() * (a_max - a_min);
  }
  a.diagonal().array() += shift;
  return RandomGmrf{GmrfModel::from_precision(a), std::move(bags), std::move(bag_edges)};
}

GmrfModel random_gmrf(int n, int width, double condition_cap, std::uint64_t seed) {
  return random_gmrf_with_decomposition(n, width, condition_cap, seed).model;
}

GmrfModel random_tree_gmrf(int n, double condition_cap, std::uint64_t seed) {
  return random_gmrf_with_decomposition(n, 1, condition_cap, seed, 1.0).model;
}

}  // namespace gmrfsel
