#include "gmrfsel/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gmrfsel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfSupport: return "IndexOutOfSupport";
    case ErrorCode::SingularComplement: return "SingularComplement";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::SingularSubmatrix: return "SingularSubmatrix";
    case ErrorCode::SingularObservationBlock: return "SingularObservationBlock";
    case ErrorCode::DisconnectedFromS: return "DisconnectedFromS";
    case ErrorCode::NotUnitRegular: return "NotUnitRegular";
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::IndependentPairPresent: return "IndependentPairPresent";
    case ErrorCode::InfeasibleParameters: return "InfeasibleParameters";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InvalidDecomposition: return "InvalidDecomposition";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::EliminationOrderBroken: return "EliminationOrderBroken";
    case ErrorCode::OutOfGridRange: return "OutOfGridRange";
    case ErrorCode::EigenvalueOutOfRange: return "EigenvalueOutOfRange";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::StateSpaceExceeded: return "StateSpaceExceeded";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

IndexSet make_index_set(std::vector<int> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool contains(const IndexSet& s, int v) { return std::binary_search(s.begin(), s.end(), v); }

SupportedMatrix::SupportedMatrix(int ambient_dim) : n_(ambient_dim), block_(0, 0) {}

SupportedMatrix::SupportedMatrix(int ambient_dim, IndexSet support, Eigen::MatrixXd block)
    : n_(ambient_dim), support_(std::move(support)), block_(std::move(block)) {
  const auto k = static_cast<Eigen::Index>(support_.size());
  if (block_.rows() != k || block_.cols() != k)
    throw Error(ErrorCode::InvariantViolation, "block size does not match support size");
  for (size_t t = 0; t < support_.size(); ++t) {
    if (support_[t] < 0 || support_[t] >= n_)
      throw Error(ErrorCode::IndexOutOfSupport, "support index outside ambient dimension");
    if (t > 0 && support_[t] <= support_[t - 1])
      throw Error(ErrorCode::InvariantViolation, "support must be strictly ascending");
  }
  if (k > 0) {
    const double scale = std::max(1.0, block_.cwiseAbs().maxCoeff());
    if ((block_ - block_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw Error(ErrorCode::InvariantViolation, "matrix is not symmetric");
    block_ = 0.5 * (block_ + block_.transpose()).eval();
  }
}

SupportedMatrix SupportedMatrix::full(const Eigen::MatrixXd& m) {
  IndexSet all(static_cast<size_t>(m.rows()));
  for (int i = 0; i < static_cast<int>(m.rows()); ++i) all[i] = i;
  return SupportedMatrix(static_cast<int>(m.rows()), std::move(all), m);
}

int SupportedMatrix::local_index(int v) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), v);
  if (it == support_.end() || *it != v) return -1;
  return static_cast<int>(it - support_.begin());
}

double SupportedMatrix::entry(int i, int j) const {
  const int a = local_index(i);
  const int b = local_index(j);
  if (a < 0 || b < 0) return 0.0;
  return block_(a, b);
}

Eigen::MatrixXd SupportedMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) out(support_[a], support_[b]) = block_(a, b);
  return out;
}

void SupportedMatrix::check_psd() const {
  if (empty()) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_, Eigen::EigenvaluesOnly);
  const double hi = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  if (es.eigenvalues()(0) < -kPsdTol * hi)
    throw Error(ErrorCode::InvariantViolation,
                "matrix is not positive semidefinite (min eigenvalue " +
                    std::to_string(es.eigenvalues()(0)) + ")");
}

SupportedMatrix& SupportedMatrix::operator+=(const SupportedMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::SupportMismatch, "ambient dimensions differ");
  if (other.support_ == support_) {
    block_ += other.block_;
    return *this;
  }
  IndexSet merged = set_union(support_, other.support_);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(merged.size()),
                                              static_cast<Eigen::Index>(merged.size()));
  auto scatter = [&](const SupportedMatrix& src) {
    std::vector<int> pos(src.support_.size());
    for (size_t t = 0; t < src.support_.size(); ++t)
      pos[t] = static_cast<int>(std::lower_bound(merged.begin(), merged.end(), src.support_[t]) -
                                merged.begin());
    for (size_t a = 0; a < pos.size(); ++a)
      for (size_t b = 0; b < pos.size(); ++b) sum(pos[a], pos[b]) += src.block_(a, b);
  };
  scatter(*this);
  scatter(other);
  support_ = std::move(merged);
  block_ = std::move(sum);
  return *this;
}

Eigen::MatrixXd principal(const Eigen::MatrixXd& m, std::span<const int> local) {
  const auto k = static_cast<Eigen::Index>(local.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(local[a], local[b]);
  return out;
}

namespace {

std::vector<int> positions_of(const SupportedMatrix& m, const IndexSet& items) {
  std::vector<int> pos;
  pos.reserve(items.size());
  for (int v : items) {
    const int p = m.local_index(v);
    if (p < 0)
      throw Error(ErrorCode::IndexOutOfSupport, "index " + std::to_string(v + 1) + " not in support");
    pos.push_back(p);
  }
  return pos;
}

bool well_conditioned(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  return hi > 0.0 && es.eigenvalues()(0) > kRankTol * hi;
}

}  // namespace

namespace detail {

bool schur_complement(const Eigen::MatrixXd& m, std::span<const int> keep, std::span<const int> drop,
                      Eigen::MatrixXd& out) {
  const auto k = static_cast<Eigen::Index>(keep.size());
  const auto d = static_cast<Eigen::Index>(drop.size());
  out.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(keep[a], keep[b]);
  if (d == 0 || k == 0) return true;
  Eigen::MatrixXd e(d, d);
  Eigen::MatrixXd c(d, k);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) e(a, b) = m(drop[a], drop[b]);
    for (Eigen::Index b = 0; b < k; ++b) c(a, b) = m(drop[a], keep[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(e);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd half = llt.matrixL().solve(c);
  out.noalias() -= half.transpose() * half;
  out = 0.5 * (out + out.transpose()).eval();
  return true;
}

bool inverse_diagonal(const Eigen::MatrixXd& m, Eigen::VectorXd& diag) {
  const auto k = m.rows();
  diag.resize(k);
  if (k == 0) return true;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  // M^-1 = L^-T L^-1, so (M^-1)_ii is the squared norm of column i of L^-1.
  const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(k, k));
  diag = linv.colwise().squaredNorm().transpose();
  return true;
}

}  // namespace detail

SupportedMatrix obs(const SupportedMatrix& m, const IndexSet& observed) {
  if (!is_subset(observed, m.support()))
    throw Error(ErrorCode::IndexOutOfSupport, "observed set is not contained in the support");
  IndexSet rest = set_difference(m.support(), observed);
  const auto pos = positions_of(m, rest);
  return SupportedMatrix(m.ambient_dim(), std::move(rest), principal(m.block(), pos));
}

SupportedMatrix marginal(const SupportedMatrix& m, const IndexSet& keep) {
  if (!is_subset(keep, m.support()))
    throw Error(ErrorCode::IndexOutOfSupport, "kept set is not contained in the support");
  const IndexSet drop = set_difference(m.support(), keep);
  const auto kp = positions_of(m, keep);
  const auto dp = positions_of(m, drop);
  if (!well_conditioned(principal(m.block(), dp)))
    throw Error(ErrorCode::SingularComplement, "eliminated block is rank deficient");
  Eigen::MatrixXd out;
  if (!detail::schur_complement(m.block(), kp, dp, out))
    throw Error(ErrorCode::SingularComplement, "eliminated block is not positive definite");
  return SupportedMatrix(m.ambient_dim(), keep, std::move(out));
}

double trace_of_inverse(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  if (!well_conditioned(m)) throw Error(ErrorCode::SingularMatrix, "matrix is singular");
  Eigen::VectorXd diag;
  if (!detail::inverse_diagonal(m, diag))
    throw Error(ErrorCode::SingularMatrix, "matrix is not positive definite");
  return diag.sum();
}

double trace_of_inverse(const SupportedMatrix& m) { return trace_of_inverse(m.block()); }

EigExtremes eig_extremes(const SupportedMatrix& m) {
  EigExtremes out;
  if (m.empty()) {
    out.empty = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.block(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  out.max = ev(ev.size() - 1);
  const double cutoff = std::abs(out.max) * kRankTol;
  out.empty = true;
  for (Eigen::Index t = 0; t < ev.size(); ++t) {
    if (ev(t) > cutoff) {
      out.min_nonzero = ev(t);
      out.empty = false;
      break;
    }
  }
  if (out.empty) out.max = 0.0;
  return out;
}

bool psd_sandwich_check(const SupportedMatrix& a, const SupportedMatrix& b, double eps) {
  if (a.support() != b.support() || a.ambient_dim() != b.ambient_dim())
    throw Error(ErrorCode::SupportMismatch, "sandwich check needs equal supports");
  if (a.empty()) return true;
  const double scale = std::max(eig_extremes(b).max, 0.0);
  const double tol = -kPsdTol * scale;
  auto min_eig = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  };
  const Eigen::MatrixXd upper = std::exp(eps) * b.block() - a.block();
  const Eigen::MatrixXd lower = a.block() - std::exp(-eps) * b.block();
  return min_eig(upper) >= tol && min_eig(lower) >= tol;
}

}  // namespace gmrfsel
