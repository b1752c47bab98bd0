#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "gmrfsel/rounding.hpp"

namespace gmrfsel {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

GffGrid::GffGrid(double c_low_, double c_high_, double eps_) : c_low(c_low_), c_high(c_high_), eps(eps_) {
  if (!(c_low > 0.0 && c_high >= c_low && eps > 0.0))
    throw Error(ErrorCode::InfeasibleParameters, "grid needs 0 < c_l <= c_h and eps > 0");
  top = static_cast<std::int64_t>(std::ceil(std::log(c_high / c_low) / eps));
}

GffGrid GffGrid::for_model(const GffModel& gff, double eps) {
  const double rmin = gff.min_resistance(), rmax = gff.max_resistance();
  const double n = gff.n();
  return GffGrid(rmin / (n * rmax * rmax), n / rmin, eps);
}

double GffGrid::point(std::int64_t k) const { return c_low * std::exp(static_cast<double>(k) * eps); }

std::int64_t GffGrid::snap(double value, double zero_cutoff) const {
  if (std::abs(value) <= zero_cutoff) return -1;
  if (value < c_low * std::exp(-eps) || value > point(top))
    throw Error(ErrorCode::OutOfGridRange, "value " + fmt(value) + " outside the grid [" + fmt(c_low) + ", " +
                                               fmt(point(top)) + "]");
  auto k = static_cast<std::int64_t>(std::floor(std::log(value / c_low) / eps));
  k = std::clamp<std::int64_t>(k, 0, top);
  // Guard against the logarithm landing one cell off.
  while (k > 0 && point(k) > value) --k;
  while (k < top && point(k + 1) <= value) ++k;
  if (k < top && point(k + 1) - value < value - point(k)) ++k;
  return k;
}

namespace {

double max_abs(const SupportedMatrix& p) { return p.empty() ? 0.0 : p.block().cwiseAbs().maxCoeff(); }

// Row sums of a Schur complement of a Laplacian carry cancellation error of a
// few ulps times the largest entry, so exact zeros arrive as ~1e-14 noise.
constexpr double kZeroTol = 1e-9;

}  // namespace

RoundKey gff_round_key(const SupportedMatrix& p, const GffGrid& grid) {
  const auto& b = p.block();
  const int k = p.size();
  const double cutoff = kZeroTol * std::max(max_abs(p), grid.c_high);
  RoundKey key;
  key.reserve(static_cast<size_t>(k * (k + 1) / 2));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      if (b(i, j) > cutoff) throw Error(ErrorCode::OutOfGridRange, "positive off-diagonal entry");
      key.push_back(grid.snap(-b(i, j), cutoff));
    }
  for (int i = 0; i < k; ++i) {
    const double row = b.row(i).sum();
    if (row < -cutoff) throw Error(ErrorCode::OutOfGridRange, "negative row sum " + fmt(row));
    key.push_back(grid.snap(row, cutoff));
  }
  return key;
}

SupportedMatrix gff_from_key(const RoundKey& key, int ambient_dim, const IndexSet& support, const GffGrid& grid) {
  const int k = static_cast<int>(support.size());
  if (key.size() != static_cast<size_t>(k * (k + 1) / 2))
    throw Error(ErrorCode::InvariantViolation, "key does not match the support size");
  auto value = [&](std::int64_t idx) { return idx < 0 ? 0.0 : grid.point(idx); };
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
  size_t pos = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const double mag = value(key[pos++]);
      b(i, j) = -mag;
      b(j, i) = -mag;
    }
  for (int i = 0; i < k; ++i) {
    double off = 0.0;
    for (int j = 0; j < k; ++j)
      if (j != i) off -= b(i, j);
    b(i, i) = value(key[pos++]) + off;
  }
  return SupportedMatrix(ambient_dim, support, std::move(b));
}

SupportedMatrix gff_round(const SupportedMatrix& p, const GffGrid& grid) {
  return gff_from_key(gff_round_key(p, grid), p.ambient_dim(), p.support(), grid);
}

bool gff_relation(const SupportedMatrix& a, const SupportedMatrix& b, double eps, double scale) {
  if (a.support() != b.support()) throw Error(ErrorCode::SupportMismatch, "gff relation needs equal supports");
  const int k = a.size();
  const double za = kZeroTol * std::max(max_abs(a), scale), zb = kZeroTol * std::max(max_abs(b), scale);
  auto close = [&](double x, double y) {
    const bool zx = std::abs(x) <= za, zy = std::abs(y) <= zb;
    if (zx || zy) return zx && zy;
    if ((x > 0) != (y > 0)) return false;
    return std::abs(std::log(x / y)) <= eps * (1.0 + 1e-9) + 1e-12;
  };
  for (int i = 0; i < k; ++i) {
    if (!close(a.block().row(i).sum(), b.block().row(i).sum())) return false;
    for (int j = i + 1; j < k; ++j)
      if (!close(a.block()(i, j), b.block()(i, j))) return false;
  }
  return true;
}

SvdGrid::SvdGrid(double lo_, double hi_, double eps_, double lambda_ratio, int cluster_count, int vertex_count)
    : lo(lo_), hi(hi_), eps(eps_) {
  if (!(lo > 0.0 && hi >= lo && eps > 0.0))
    throw Error(ErrorCode::InfeasibleParameters, "eigenvalue grid needs 0 < lo <= hi and eps > 0");
  top = static_cast<std::int64_t>(std::ceil(std::log(hi / lo) / (eps / 2)));
  const double r = lambda_ratio / std::max(1, cluster_count);
  const double v = std::max(1, vertex_count);
  eps1 = r * r * eps * eps / (1e4 * v * v * v);
}

double SvdGrid::point(std::int64_t k) const { return lo * std::exp(static_cast<double>(k) * eps / 2); }

double SvdGrid::pitch(int k) const { return std::max(eps1 / std::sqrt(std::max(1, k)), 1e-9); }

namespace {

Eigen::MatrixXd thin_orthonormal(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

// Greedy row pivots of an orthonormal basis W. The singular values of W[P,:]
// do not depend on which basis of span(W) is used, so neither do the pivots.
std::vector<int> chart_pivots(const Eigen::MatrixXd& w) {
  const auto r = w.rows(), d = w.cols();
  double tau = 0.5 / std::sqrt(static_cast<double>(r));
  for (int attempt = 0; attempt < 64; ++attempt, tau /= 2) {
    std::vector<int> pivots;
    for (int j = 0; j < r && static_cast<Eigen::Index>(pivots.size()) < d; ++j) {
      pivots.push_back(j);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows_of(w, pivots));
      const auto& sv = svd.singularValues();
      if (!(sv(sv.size() - 1) > tau)) pivots.pop_back();
    }
    if (static_cast<Eigen::Index>(pivots.size()) == d) return pivots;
  }
  throw Error(ErrorCode::NumericFailure, "no well-conditioned chart for an eigenspace");
}

}  // namespace

RoundResult svd_round_keyed(const SupportedMatrix& p, const SvdGrid& grid) {
  const int k = p.size();
  RoundResult res;
  res.key.push_back(k);
  if (k == 0) {
    res.matrix = p;
    return res;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.block());
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericFailure, "eigensolver failed");
  const Eigen::VectorXd& vals = es.eigenvalues();
  const Eigen::MatrixXd& vecs = es.eigenvectors();
  if (!(vals(k - 1) > 0.0) || vals(0) <= kRankTol * vals(k - 1))
    throw Error(ErrorCode::RankDeficient, "matrix to round is rank deficient");

  const double half = grid.eps / 2;
  std::vector<std::int64_t> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double v = vals(i);
    if (v < grid.lo * std::exp(-half) || v > grid.point(grid.top) * std::exp(half))
      throw Error(ErrorCode::EigenvalueOutOfRange, "eigenvalue " + std::to_string(v) + " outside [" +
                                                       std::to_string(grid.lo) + ", " + std::to_string(grid.hi) +
                                                       "]");
    idx[i] = std::clamp<std::int64_t>(std::llround(std::log(v / grid.lo) / half), 0, grid.top);
  }

  const double pitch = grid.pitch(k);
  Eigen::MatrixXd complement = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  for (int start = 0; start < k;) {
    int stop = start;
    while (stop < k && idx[stop] == idx[start]) ++stop;
    const int d = stop - start;
    const auto r = complement.cols();
    res.key.push_back(idx[start]);
    res.key.push_back(d);

    const Eigen::MatrixXd w = thin_orthonormal(complement.transpose() * vecs.middleCols(start, d));
    const auto pivots = chart_pivots(w);
    const Eigen::MatrixXd chart = w * rows_of(w, pivots).inverse();
    Eigen::MatrixXd snapped = Eigen::MatrixXd::Zero(r, d);
    size_t next_pivot = 0;
    for (int row = 0; row < r; ++row) {
      if (next_pivot < pivots.size() && pivots[next_pivot] == row) {
        snapped(row, static_cast<Eigen::Index>(next_pivot)) = 1.0;
        res.key.push_back(row);
        ++next_pivot;
        continue;
      }
      for (int c = 0; c < d; ++c) {
        const auto q = static_cast<std::int64_t>(std::llround(chart(row, c) / pitch));
        snapped(row, c) = static_cast<double>(q) * pitch;
        res.key.push_back(q);
      }
    }

    const Eigen::MatrixXd basis = thin_orthonormal(snapped);
    const Eigen::MatrixXd q = complement * basis;
    out.noalias() += grid.point(idx[start]) * q * q.transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> full(basis);
    const Eigen::MatrixXd all = full.householderQ();
    complement = complement * all.rightCols(r - d);
    start = stop;
  }
  out = 0.5 * (out + out.transpose());
  res.matrix = SupportedMatrix(p.ambient_dim(), p.support(), std::move(out));
  return res;
}

SupportedMatrix svd_round(const SupportedMatrix& p, const SvdGrid& grid) { return svd_round_keyed(p, grid).matrix; }

}  // namespace gmrfsel
