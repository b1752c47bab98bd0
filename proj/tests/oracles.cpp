#include "oracles.hpp"

#include <random>

#include "gmrfsel/select.hpp"

namespace oracle {

namespace {

IndexSet complement(int n, const IndexSet& s) {
  IndexSet out;
  for (int v = 0; v < n; ++v)
    if (!gmrfsel::contains(s, v)) out.push_back(v);
  return out;
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (size_t a = 0; a < rows.size(); ++a)
    for (size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
  return out;
}

}  // namespace

double err_dense(const Eigen::MatrixXd& precision, const IndexSet& observed) {
  const int n = static_cast<int>(precision.rows());
  const IndexSet u = complement(n, observed);
  if (u.empty()) return 0.0;
  const Eigen::MatrixXd inv = sub(precision, u, u).fullPivLu().inverse();
  return inv.trace() / n;
}

double conditional_variance_dense(const Eigen::MatrixXd& cov, int i, const IndexSet& s) {
  if (gmrfsel::contains(s, i)) return 0.0;
  if (s.empty()) return cov(i, i);
  const Eigen::MatrixXd sss = sub(cov, s, s);
  const Eigen::VectorXd ssi = sub(cov, s, {i});
  return cov(i, i) - ssi.dot(sss.fullPivLu().solve(ssi));
}

Eigen::MatrixXd laplacian(int n, const std::vector<gmrfsel::Edge>& edges) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    l(e.u, e.v) -= 1.0 / e.r;
    l(e.v, e.u) -= 1.0 / e.r;
  }
  for (int i = 0; i < n; ++i) l(i, i) = -l.row(i).sum();
  return l;
}

namespace {

template <class Visit>
void each_subset(const gmrfsel::Model& model, Visit&& visit) {
  const int n = gmrfsel::model_size(model);
  const auto pin = gmrfsel::free_vertex(model);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (pin && !(mask >> *pin & 1u)) continue;
    IndexSet s;
    for (int v = 0; v < n; ++v)
      if (mask >> v & 1u) s.push_back(v);
    visit(s, static_cast<int>(s.size()) - (pin ? 1 : 0));
  }
}

}  // namespace

Best exhaustive_budget(const gmrfsel::Model& model, int budget) {
  Best best{{}, std::numeric_limits<double>::infinity()};
  const auto& prec = gmrfsel::model_precision(model);
  each_subset(model, [&](const IndexSet& s, int cost) {
    if (cost > budget) return;
    const double e = err_dense(prec, s);
    if (e < best.err || (e == best.err && s < best.set)) best = {s, e};
  });
  return best;
}

Best exhaustive_cover(const gmrfsel::Model& model, double alpha) {
  Best best{{}, std::numeric_limits<double>::infinity()};
  int best_cost = 1 << 30;
  const auto& prec = gmrfsel::model_precision(model);
  each_subset(model, [&](const IndexSet& s, int cost) {
    const double e = err_dense(prec, s);
    if (!gmrfsel::within_alpha(e, alpha)) return;
    if (cost < best_cost || (cost == best_cost && s < best.set)) {
      best = {s, e};
      best_cost = cost;
    }
  });
  return best;
}

bool independent(const std::vector<std::pair<int, int>>& edges, const IndexSet& s) {
  for (auto [u, v] : edges)
    if (gmrfsel::contains(s, u) && gmrfsel::contains(s, v)) return false;
  return true;
}

Eigen::MatrixXd random_pd(int n, unsigned seed, double ridge) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = d(gen);
  Eigen::MatrixXd m = a * a.transpose() / n;
  m.diagonal().array() += ridge;
  return m;
}

Eigen::MatrixXd counterexample_covariance() {
  Eigen::MatrixXd s(4, 4);
  s << 0.4435, 0.1092, -0.0905, -0.0527,  //
      0.1092, 0.3041, 0.0256, 0.0227,     //
      -0.0905, 0.0256, 0.1273, -0.1444,   //
      -0.0527, 0.0227, -0.1444, 0.3752;
  return s;
}

gmrfsel::GffModel cycle(int n) {
  std::vector<gmrfsel::Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return gmrfsel::GffModel(n, edges, 0);
}

gmrfsel::GffModel path(int n, double r) {
  std::vector<gmrfsel::Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, r});
  return gmrfsel::GffModel(n, edges, 0);
}

gmrfsel::GffModel complete(int n, double r) {
  std::vector<gmrfsel::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, r});
  return gmrfsel::GffModel(n, edges, 0);
}

}  // namespace oracle
