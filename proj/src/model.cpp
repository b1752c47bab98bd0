#include "gmrfsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>

namespace gmrfsel {

namespace {

std::vector<int> complement_of(int n, const IndexSet& s) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v)
    if (!contains(s, v)) out.push_back(v);
  return out;
}

void check_vertices(int n, const IndexSet& s) {
  for (int v : s)
    if (v < 0 || v >= n)
      throw Error(ErrorCode::IndexOutOfSupport, "vertex " + std::to_string(v + 1) + " out of range");
}

double trace_over_complement(const Eigen::MatrixXd& lambda, const IndexSet& observed) {
  const int n = static_cast<int>(lambda.rows());
  const auto rest = complement_of(n, observed);
  if (rest.empty()) return 0.0;
  try {
    return trace_of_inverse(principal(lambda, rest));
  } catch (const Error&) {
    throw Error(ErrorCode::SingularSubmatrix, "unobserved block is singular");
  }
}

// Var[X_i | X_S] = Sigma_ii - Sigma_iS Sigma_SS^-1 Sigma_Si.
double schur_variance(const Eigen::MatrixXd& sigma, int i, const IndexSet& s) {
  if (s.empty()) return sigma(i, i);
  Eigen::MatrixXd ss = principal(sigma, s);
  Eigen::VectorXd si(static_cast<Eigen::Index>(s.size()));
  for (size_t t = 0; t < s.size(); ++t) si(static_cast<Eigen::Index>(t)) = sigma(s[t], i);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ss);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= kRankTol * std::max(ldlt.vectorD().maxCoeff(), 0.0))
    throw Error(ErrorCode::SingularObservationBlock, "observation covariance block is singular");
  return sigma(i, i) - si.dot(ldlt.solve(si));
}

std::vector<std::pair<int, int>> pattern_edges(const Eigen::MatrixXd& m) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out.emplace_back(i, j);
  return out;
}

bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 1) return true;
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int parts = n;
  for (auto [u, v] : edges) {
    const int a = find(u), b = find(v);
    if (a != b) {
      parent[a] = b;
      --parts;
    }
  }
  return parts == 1;
}

}  // namespace

GmrfModel::GmrfModel(Eigen::MatrixXd precision, Eigen::MatrixXd covariance)
    : precision_(std::move(precision)), covariance_(std::move(covariance)) {
  graph_ = pattern_edges(precision_);
}

GmrfModel GmrfModel::from_precision(const Eigen::MatrixXd& precision) {
  if (precision.rows() == 0 || precision.rows() != precision.cols())
    throw Error(ErrorCode::InvariantViolation, "precision must be a nonempty square matrix");
  SupportedMatrix checked = SupportedMatrix::full(precision);
  const auto ext = eig_extremes(checked);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(checked.block(), Eigen::EigenvaluesOnly);
  if (ext.empty || es.eigenvalues()(0) <= kRankTol * ext.max)
    throw Error(ErrorCode::InvariantViolation, "precision is not positive definite");
  Eigen::MatrixXd sigma = checked.block().llt().solve(
      Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return GmrfModel(checked.block(), std::move(sigma));
}

GmrfModel GmrfModel::from_covariance(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() == 0 || covariance.rows() != covariance.cols())
    throw Error(ErrorCode::InvariantViolation, "covariance must be a nonempty square matrix");
  SupportedMatrix checked = SupportedMatrix::full(covariance);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(checked.block(), Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  if (hi <= 0.0 || es.eigenvalues()(0) <= kRankTol * hi)
    throw Error(ErrorCode::InvariantViolation, "covariance is not positive definite");
  Eigen::MatrixXd lambda = checked.block().llt().solve(
      Eigen::MatrixXd::Identity(covariance.rows(), covariance.cols()));
  lambda = 0.5 * (lambda + lambda.transpose()).eval();
  // Inversion noise would otherwise make every pair adjacent.
  const double cut = kRankTol * lambda.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < lambda.rows(); ++i)
    for (Eigen::Index j = 0; j < lambda.cols(); ++j)
      if (i != j && std::abs(lambda(i, j)) <= cut) lambda(i, j) = 0.0;
  return GmrfModel(std::move(lambda), checked.block());
}

GffModel::GffModel(int n, std::vector<Edge> edges, int pin) : n_(n), edges_(std::move(edges)), pin_(pin) {
  if (n_ < 1) throw Error(ErrorCode::InvariantViolation, "a GFF needs at least one vertex");
  if (pin_ < 0 || pin_ >= n_) throw Error(ErrorCode::IndexOutOfSupport, "pin out of range");
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> plain;
  for (auto& e : edges_) {
    if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_)
      throw Error(ErrorCode::IndexOutOfSupport, "edge endpoint out of range");
    if (e.u == e.v) throw Error(ErrorCode::InvariantViolation, "self-loop");
    if (!(e.r > 0.0) || !std::isfinite(e.r))
      throw Error(ErrorCode::InvariantViolation, "resistance must be positive and finite");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (!seen.insert({e.u, e.v}).second)
      throw Error(ErrorCode::InvariantViolation, "duplicate edge");
    plain.emplace_back(e.u, e.v);
  }
  if (!connected(n_, plain)) throw Error(ErrorCode::DisconnectedGraph, "graph is not connected");
  laplacian_ = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& e : edges_) {
    const double c = 1.0 / e.r;
    laplacian_(e.u, e.u) += c;
    laplacian_(e.v, e.v) += c;
    laplacian_(e.u, e.v) -= c;
    laplacian_(e.v, e.u) -= c;
  }
  covariance_ = Eigen::MatrixXd::Zero(n_, n_);
  const auto rest = complement_of(n_, {pin_});
  if (!rest.empty()) {
    const Eigen::MatrixXd reduced = principal(laplacian_, rest);
    const Eigen::MatrixXd inv =
        reduced.llt().solve(Eigen::MatrixXd::Identity(reduced.rows(), reduced.cols()));
    for (size_t a = 0; a < rest.size(); ++a)
      for (size_t b = 0; b < rest.size(); ++b)
        covariance_(rest[a], rest[b]) = 0.5 * (inv(a, b) + inv(b, a));
  }
}

std::vector<std::pair<int, int>> GffModel::graph() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : edges_) out.emplace_back(e.u, e.v);
  std::sort(out.begin(), out.end());
  return out;
}

double GffModel::min_resistance() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) r = std::min(r, e.r);
  return r;
}

double GffModel::max_resistance() const {
  double r = 0.0;
  for (const auto& e : edges_) r = std::max(r, e.r);
  return r;
}

int model_size(const Model& m) {
  return std::visit([](const auto& x) { return x.n(); }, m);
}

const Eigen::MatrixXd& model_precision(const Model& m) {
  if (const auto* g = std::get_if<GffModel>(&m)) return g->laplacian();
  return std::get<GmrfModel>(m).precision();
}

std::optional<int> free_vertex(const Model& m) {
  if (const auto* g = std::get_if<GffModel>(&m)) return g->pin();
  return std::nullopt;
}

IndexSet scored_set(const Model& m, const IndexSet& s) {
  IndexSet out = make_index_set(s);
  if (auto pin = free_vertex(m)) out = set_union(out, {*pin});
  return out;
}

int budget_cost(const Model& m, const IndexSet& s) {
  int cost = static_cast<int>(s.size());
  if (auto pin = free_vertex(m); pin && contains(s, *pin)) --cost;
  return cost;
}

SupportedMatrix laplacian(const GffModel& gff) { return SupportedMatrix::full(gff.laplacian()); }

double err(const GmrfModel& model, const IndexSet& s) {
  check_vertices(model.n(), s);
  return trace_over_complement(model.precision(), make_index_set(s)) / model.n();
}

double err(const GffModel& model, const IndexSet& s) {
  check_vertices(model.n(), s);
  return trace_over_complement(model.laplacian(), set_union(make_index_set(s), {model.pin()})) /
         model.n();
}

double err(const Model& model, const IndexSet& s) {
  return std::visit([&](const auto& m) { return err(m, s); }, model);
}

double conditional_variance(const GmrfModel& model, int i, const IndexSet& s) {
  check_vertices(model.n(), s);
  check_vertices(model.n(), {i});
  const IndexSet obs_set = make_index_set(s);
  if (contains(obs_set, i)) return 0.0;
  return schur_variance(model.covariance(), i, obs_set);
}

double conditional_variance(const GffModel& model, int i, const IndexSet& s) {
  check_vertices(model.n(), s);
  check_vertices(model.n(), {i});
  const IndexSet obs_set = make_index_set(s);
  if (i == model.pin() || contains(obs_set, i)) return 0.0;
  // The pinned coordinate is identically zero, so it carries no information.
  return schur_variance(model.covariance(), i, set_difference(obs_set, {model.pin()}));
}

double conditional_variance(const Model& model, int i, const IndexSet& s) {
  return std::visit([&](const auto& m) { return conditional_variance(m, i, s); }, model);
}

Eigen::VectorXd predictor_weights(const GmrfModel& model, int i, const IndexSet& s) {
  const IndexSet obs_set = make_index_set(s);
  check_vertices(model.n(), obs_set);
  if (contains(obs_set, i)) throw Error(ErrorCode::InfeasibleParameters, "target is observed");
  const Eigen::Index k = static_cast<Eigen::Index>(obs_set.size());
  if (k == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd ss = principal(model.covariance(), obs_set);
  Eigen::VectorXd si(k);
  for (Eigen::Index t = 0; t < k; ++t) si(t) = model.covariance()(obs_set[t], i);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ss);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= kRankTol * std::max(ldlt.vectorD().maxCoeff(), 0.0))
    throw Error(ErrorCode::SingularObservationBlock, "observation covariance block is singular");
  return ldlt.solve(si);
}

Eigen::VectorXd predictor_weights(const GffModel& model, int i, const IndexSet& s) {
  // The pinned covariance row is zero, so the weights come from the conditional
  // mean of the precision form: E[X_U | X_S] = -Lambda_UU^-1 Lambda_US X_S.
  const IndexSet obs_set = make_index_set(s);
  check_vertices(model.n(), obs_set);
  if (contains(obs_set, i)) throw Error(ErrorCode::InfeasibleParameters, "target is observed");
  const IndexSet cond = set_union(obs_set, {model.pin()});
  if (i == model.pin()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(obs_set.size()));
  const auto rest = complement_of(model.n(), cond);
  const Eigen::MatrixXd uu = principal(model.laplacian(), rest);
  Eigen::MatrixXd us(static_cast<Eigen::Index>(rest.size()), static_cast<Eigen::Index>(obs_set.size()));
  for (size_t a = 0; a < rest.size(); ++a)
    for (size_t b = 0; b < obs_set.size(); ++b) us(a, b) = model.laplacian()(rest[a], obs_set[b]);
  Eigen::LLT<Eigen::MatrixXd> llt(uu);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularObservationBlock, "unobserved block is singular");
  const Eigen::MatrixXd mean_map = -llt.solve(us);
  const auto row = std::find(rest.begin(), rest.end(), i) - rest.begin();
  return mean_map.row(row).transpose();
}

double predictor_residual(const Model& model, int i, const IndexSet& s, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& sigma =
      std::visit([](const auto& m) -> const Eigen::MatrixXd& { return m.covariance(); }, model);
  const IndexSet obs_set = make_index_set(s);
  double res = sigma(i, i);
  for (size_t a = 0; a < obs_set.size(); ++a) {
    res -= 2.0 * w(static_cast<Eigen::Index>(a)) * sigma(obs_set[a], i);
    for (size_t b = 0; b < obs_set.size(); ++b)
      res += w(static_cast<Eigen::Index>(a)) * w(static_cast<Eigen::Index>(b)) * sigma(obs_set[a], obs_set[b]);
  }
  return res;
}

ElectricalFlow electrical_flow(const GffModel& gff, int t, const IndexSet& s) {
  const IndexSet sinks = make_index_set(s);
  if (sinks.empty()) throw Error(ErrorCode::DisconnectedFromS, "sink set is empty, so no current can leave");
  check_vertices(gff.n(), sinks);
  check_vertices(gff.n(), {t});
  ElectricalFlow out;
  out.potential = Eigen::VectorXd::Zero(gff.n());
  out.flow.assign(gff.edges().size(), 0.0);
  if (contains(sinks, t)) return out;

  // Contract S into a grounded node: unknowns are the remaining vertices.
  std::vector<int> slot(static_cast<size_t>(gff.n()), -1);
  int k = 0;
  for (int v = 0; v < gff.n(); ++v)
    if (!contains(sinks, v)) slot[v] = k++;
  std::vector<char> reach(static_cast<size_t>(gff.n()), 0);
  std::vector<std::vector<int>> adj(static_cast<size_t>(gff.n()));
  for (const auto& e : gff.edges()) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::queue<int> q;
  for (int v : sinks) {
    reach[v] = 1;
    q.push(v);
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v])
      if (!reach[w]) {
        reach[w] = 1;
        q.push(w);
      }
  }
  if (!reach[t]) throw Error(ErrorCode::DisconnectedFromS, "target is not connected to the sink set");

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (const auto& e : gff.edges()) {
    const double c = 1.0 / e.r;
    const int a = slot[e.u], b = slot[e.v];
    if (a >= 0) g(a, a) += c;
    if (b >= 0) g(b, b) += c;
    if (a >= 0 && b >= 0) {
      g(a, b) -= c;
      g(b, a) -= c;
    }
  }
  // Components cut off from S would make g singular; pin them to zero potential.
  for (int v = 0; v < gff.n(); ++v)
    if (slot[v] >= 0 && !reach[v]) {
      g.row(slot[v]).setZero();
      g.col(slot[v]).setZero();
      g(slot[v], slot[v]) = 1.0;
    }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(slot[t]) = 1.0;
  const Eigen::VectorXd phi = g.ldlt().solve(rhs);
  for (int v = 0; v < gff.n(); ++v)
    if (slot[v] >= 0) out.potential(v) = phi(slot[v]);
  for (size_t idx = 0; idx < gff.edges().size(); ++idx) {
    const auto& e = gff.edges()[idx];
    const double f = (out.potential(e.u) - out.potential(e.v)) / e.r;
    out.flow[idx] = f;
    out.energy += f * f * e.r;
  }
  out.resistance = out.potential(t);
  return out;
}

double effective_resistance(const GffModel& gff, int i, const IndexSet& s) {
  return electrical_flow(gff, i, s).resistance;
}

Tightness regular_tightness(const GffModel& gff, const IndexSet& s) {
  const int n = gff.n();
  std::vector<int> degree(static_cast<size_t>(n), 0);
  for (const auto& e : gff.edges()) {
    if (e.r != 1.0) throw Error(ErrorCode::NotUnitRegular, "resistances must all be 1");
    ++degree[e.u];
    ++degree[e.v];
  }
  const int d = degree.empty() ? 0 : degree[0];
  if (d == 0 || std::any_of(degree.begin(), degree.end(), [d](int x) { return x != d; }))
    throw Error(ErrorCode::NotUnitRegular, "graph is not regular");
  const IndexSet obs_set = make_index_set(s);
  check_vertices(n, obs_set);
  if (obs_set.empty()) throw Error(ErrorCode::InfeasibleParameters, "observed set must be nonempty");

  Tightness out;
  out.lower_bound = (1.0 - static_cast<double>(obs_set.size()) / n) / d;
  const double value = trace_over_complement(gff.laplacian(), obs_set) / n;
  bool independent = true;
  for (const auto& e : gff.edges())
    if (!contains(obs_set, e.u) && !contains(obs_set, e.v)) independent = false;
  const bool equal = std::abs(value - out.lower_bound) <= 1e-9;
  if (equal != independent)
    throw Error(ErrorCode::NumericFailure, "tightness and independence disagree");
  out.tight = independent;
  return out;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::below(int bound) {
  return static_cast<int>(uniform() * bound);
}

double Rng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

}  // namespace gmrfsel
