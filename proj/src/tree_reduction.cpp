#include <cmath>
#include <queue>

#include "gmrfsel/model.hpp"

namespace gmrfsel {

TreeReduction tree_gmrf_to_gff(const GmrfModel& model) {
  const int n = model.n();
  const Eigen::MatrixXd& lambda = model.precision();
  const Eigen::MatrixXd& sigma = model.covariance();
  const auto& edges = model.graph();

  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  // Signs by BFS so that every scaled off-diagonal is non-positive.
  std::vector<int> sign(static_cast<size_t>(n), 0);
  int components = 0;
  for (int root = 0; root < n; ++root) {
    if (sign[root] != 0) continue;
    ++components;
    std::queue<int> q;
    sign[root] = 1;
    q.push(root);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (sign[w] == 0) {
          sign[w] = lambda(v, w) > 0.0 ? -sign[v] : sign[v];
          q.push(w);
        }
    }
  }
  if (static_cast<int>(edges.size()) != n - components) throw Error(ErrorCode::NotATree, "graph has a cycle");
  if (components > 1) throw Error(ErrorCode::IndependentPairPresent, "graph is a forest; components are independent");

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(sigma(i, j)) <= 1e-12 * std::sqrt(sigma(i, i) * sigma(j, j)))
        throw Error(ErrorCode::IndependentPairPresent,
                    "variables " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " are independent");

  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = sign[i];
  // Precision of (w_i X_i) is Lambda_ij / (w_i w_j).
  const Eigen::MatrixXd signed_lambda = s.asDiagonal() * lambda * s.asDiagonal();
  const Eigen::VectorXd row_sums = signed_lambda.rowwise().sum();
  const double scale = signed_lambda.diagonal().maxCoeff();

  Eigen::VectorXd w = s;
  if (row_sums.minCoeff() < -1e-12 * scale) {
    // x = M^-1 1 is positive for the M-matrix M; scaling by 1/x makes every row sum x_i > 0.
    const Eigen::VectorXd x = signed_lambda.llt().solve(Eigen::VectorXd::Ones(n));
    if (x.minCoeff() <= 0.0) throw Error(ErrorCode::NumericFailure, "scaling vector is not positive");
    for (int i = 0; i < n; ++i) w(i) = s(i) / x(i);
  }

  Eigen::MatrixXd scaled(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scaled(i, j) = lambda(i, j) / (w(i) * w(j));

  std::vector<Edge> gff_edges;
  for (auto [u, v] : edges) gff_edges.push_back({u, v, -1.0 / scaled(u, v)});
  IndexSet tail;
  const Eigen::VectorXd sums = scaled.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    if (sums(i) > 1e-12 * scale) {
      const int aux = n + static_cast<int>(tail.size());
      tail.push_back(aux);
      gff_edges.push_back({i, aux, 1.0 / sums(i)});
    }
  }
  if (tail.empty()) throw Error(ErrorCode::NumericFailure, "no strictly dominant row");
  const int total = n + static_cast<int>(tail.size());
  GffModel gff(total, std::move(gff_edges), tail.front());

  // Conditional covariance of the first n coordinates given the tail.
  const Eigen::MatrixXd head = gff.laplacian().topLeftCorner(n, n);
  const Eigen::MatrixXd cond_cov = head.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd target = w.asDiagonal() * sigma * w.asDiagonal();
  const double tol = 1e-8 * target.cwiseAbs().maxCoeff();
  if ((cond_cov - target).cwiseAbs().maxCoeff() > tol)
    throw Error(ErrorCode::NumericFailure, "reduced covariance does not match");
  return TreeReduction{std::move(w), std::move(gff), std::move(tail)};
}

}  // namespace gmrfsel
