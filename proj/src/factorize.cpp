#include <algorithm>

#include "gmrfsel/factorize.hpp"

namespace gmrfsel {

SupportedMatrix ClusterFactors::sum() const {
  if (factors.empty()) return SupportedMatrix();
  SupportedMatrix total(factors.front().ambient_dim());
  for (const auto& f : factors) total += f;
  return total;
}

namespace {

ClusterFactors factorize_gff(const GffModel& gff, const TreeDecomposition& td) {
  const int n = gff.n();
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& c : td.clusters) blocks.push_back(Eigen::MatrixXd::Zero(c.size(), c.size()));
  for (const auto& e : gff.edges()) {
    int home = -1;
    for (int j = 0; j < td.size() && home < 0; ++j)
      if (contains(td.clusters[j], e.u) && contains(td.clusters[j], e.v)) home = j;
    if (home < 0) throw Error(ErrorCode::InvalidDecomposition, "edge not covered by any cluster");
    const SupportedMatrix probe(n, td.clusters[home], blocks[home]);
    const int a = probe.local_index(e.u), b = probe.local_index(e.v);
    const double g = 1.0 / e.r;
    blocks[home](a, a) += g;
    blocks[home](b, b) += g;
    blocks[home](a, b) -= g;
    blocks[home](b, a) -= g;
  }
  ClusterFactors out;
  for (int j = 0; j < td.size(); ++j) out.factors.emplace_back(n, td.clusters[j], std::move(blocks[j]));
  return out;
}

ClusterFactors factorize_general(const Eigen::MatrixXd& lambda, const TreeDecomposition& td) {
  const int n = static_cast<int>(lambda.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lambda, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  const double lmax = es.eigenvalues()(n - 1);
  if (!(lmin > kRankTol * lmax)) throw Error(ErrorCode::SingularMatrix, "precision is not positive definite");

  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& c : td.clusters) blocks.push_back(Eigen::MatrixXd::Zero(c.size(), c.size()));
  auto local = [&](int j, int v) {
    const auto& c = td.clusters[j];
    return static_cast<int>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
  };

  Eigen::MatrixXd a = lambda;
  a.diagonal().array() -= lmin;
  std::vector<char> done(static_cast<size_t>(n), 0);
  for (int v : td.elimination_order) {
    const int home = td.top[v];
    const auto& cluster = td.clusters[home];
    done[v] = 1;
    // Remaining support of row v must fit inside the home cluster.
    for (int u = 0; u < n; ++u)
      if (!done[u] && a(v, u) != 0.0 && !contains(cluster, u))
        throw Error(ErrorCode::EliminationOrderBroken,
                    "row " + std::to_string(v + 1) + " reaches vertex " + std::to_string(u + 1) +
                        " outside its cluster");
    const double pivot = a(v, v);
    auto& blk = blocks[home];
    if (pivot > kRankTol * lmax) {
      for (int p : cluster) {
        if (p != v && done[p]) continue;
        for (int q : cluster) {
          if (q != v && done[q]) continue;
          const double outer = a(v, p) * a(v, q) / pivot;
          blk(local(home, p), local(home, q)) += outer;
          if (p != v && q != v) a(p, q) -= outer;
        }
      }
    } else {
      // Numerically zero pivot: the leftover row is hand-assigned as is.
      for (int p : cluster) {
        if (p != v && done[p]) continue;
        blk(local(home, v), local(home, p)) += a(v, p);
        if (p != v) blk(local(home, p), local(home, v)) += a(p, v);
      }
    }
    for (int u = 0; u < n; ++u) {
      a(v, u) = 0.0;
      a(u, v) = 0.0;
    }
  }

  std::vector<int> holders(static_cast<size_t>(n), 0);
  for (const auto& c : td.clusters)
    for (int v : c) ++holders[v];
  for (int j = 0; j < td.size(); ++j)
    for (int v : td.clusters[j]) blocks[j](local(j, v), local(j, v)) += lmin / holders[v];

  ClusterFactors out;
  for (int j = 0; j < td.size(); ++j) out.factors.emplace_back(n, td.clusters[j], std::move(blocks[j]));
  return out;
}

}  // namespace

ClusterFactors factorize(const Model& model, const TreeDecomposition& td, FactorMode mode) {
  if (mode == FactorMode::Gff) {
    const auto* gff = std::get_if<GffModel>(&model);
    if (!gff) throw Error(ErrorCode::InfeasibleParameters, "gff factorization needs a GFF model");
    return factorize_gff(*gff, td);
  }
  return factorize_general(model_precision(model), td);
}

}  // namespace gmrfsel
