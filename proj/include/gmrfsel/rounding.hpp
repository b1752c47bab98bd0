#pragma once

#include <cstdint>
#include <vector>

#include "gmrfsel/linalg.hpp"
#include "gmrfsel/model.hpp"

namespace gmrfsel {

// Integer description of a rounded matrix. Two matrices on the same support
// round to the same net member exactly when their keys are equal.
using RoundKey = std::vector<std::int64_t>;

// Geometric grid {0} u {c_l e^{k eps} : 0 <= k <= K} used for the
// off-diagonal magnitudes and row sums of diagonally dominant M-matrices.
struct GffGrid {
  double c_low = 0.0;
  double c_high = 0.0;
  double eps = 0.0;
  std::int64_t top = 0;  // K

  GffGrid(double c_low, double c_high, double eps);
  // Range implied by the resistances of a GFF: c_l = r_min/(n r_max^2), c_h = n/r_min.
  static GffGrid for_model(const GffModel& gff, double eps);

  double point(std::int64_t k) const;
  // Index of the nearest grid point, -1 for zero. Throws OutOfGridRange.
  std::int64_t snap(double value, double zero_cutoff) const;
};

RoundKey gff_round_key(const SupportedMatrix& p, const GffGrid& grid);
SupportedMatrix gff_from_key(const RoundKey& key, int ambient_dim, const IndexSet& support, const GffGrid& grid);
SupportedMatrix gff_round(const SupportedMatrix& p, const GffGrid& grid);

// Off-diagonals and row sums of `a` each within a factor e^{+-eps} of those of `b`,
// with zeros matching exactly. Magnitudes below 1e-9 times the larger of the
// matrix scale and `scale` count as zero; the grid's c_h is the natural `scale`.
bool gff_relation(const SupportedMatrix& a, const SupportedMatrix& b, double eps, double scale = 0.0);

// Eigenvalue grid lo e^{k eps/2} together with the eigenvector resolution eps1.
struct SvdGrid {
  double lo = 0.0;
  double hi = 0.0;
  double eps = 0.0;
  double eps1 = 0.0;
  std::int64_t top = 0;

  // eps1 = (lambda_ratio / m)^2 eps^2 / (1e4 |V|^3), with lambda_ratio = lambda_min / lambda_max.
  SvdGrid(double lo, double hi, double eps, double lambda_ratio, int cluster_count, int vertex_count);

  double point(std::int64_t k) const;
  // Quantization step for chart entries of a k x k matrix. Floored at 1e-9,
  // below which the chart could not be recovered exactly from a rounded matrix.
  double pitch(int k) const;
};

struct RoundResult {
  RoundKey key;
  SupportedMatrix matrix;
};

// Rounds eigenvalues to the grid and each eigenspace to a canonical chart.
// The output is a fixed point: rounding it again gives the same key.
RoundResult svd_round_keyed(const SupportedMatrix& p, const SvdGrid& grid);
SupportedMatrix svd_round(const SupportedMatrix& p, const SvdGrid& grid);

}  // namespace gmrfsel
