#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmrfsel/errors.hpp"

namespace gmrfsel {

// Sorted, duplicate-free list of 0-based vertex indices.
using IndexSet = std::vector<int>;

IndexSet make_index_set(std::vector<int> items);
IndexSet set_union(const IndexSet& a, const IndexSet& b);
IndexSet set_intersection(const IndexSet& a, const IndexSet& b);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);
bool is_subset(const IndexSet& a, const IndexSet& b);
bool contains(const IndexSet& s, int v);

// Relative thresholds shared by every numeric routine.
inline constexpr double kRankTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

// Symmetric matrix of ambient dimension n whose nonzeros all lie in
// support x support. The block is stored densely in support order.
class SupportedMatrix {
 public:
  SupportedMatrix() = default;
  explicit SupportedMatrix(int ambient_dim);
  SupportedMatrix(int ambient_dim, IndexSet support, Eigen::MatrixXd block);

  static SupportedMatrix full(const Eigen::MatrixXd& m);

  int ambient_dim() const noexcept { return n_; }
  const IndexSet& support() const noexcept { return support_; }
  const Eigen::MatrixXd& block() const noexcept { return block_; }
  int size() const noexcept { return static_cast<int>(support_.size()); }
  bool empty() const noexcept { return support_.empty(); }

  // Entry at ambient coordinates; zero outside the support.
  double entry(int i, int j) const;
  // Position of ambient index v inside the support, or -1.
  int local_index(int v) const;

  Eigen::MatrixXd dense() const;

  // Throws InvariantViolation unless the support block is PSD within tolerance.
  void check_psd() const;

  SupportedMatrix& operator+=(const SupportedMatrix& other);
  friend SupportedMatrix operator+(SupportedMatrix a, const SupportedMatrix& b) {
    a += b;
    return a;
  }

 private:
  int n_ = 0;
  IndexSet support_;
  Eigen::MatrixXd block_;
};

// Principal submatrix of `m` on the rows/columns listed in `local` (positions, not ambient ids).
Eigen::MatrixXd principal(const Eigen::MatrixXd& m, std::span<const int> local);

// Delete the rows and columns in `observed` (conditioning on those variables).
SupportedMatrix obs(const SupportedMatrix& m, const IndexSet& observed);

// Schur complement onto `keep`, integrating out support \ keep.
SupportedMatrix marginal(const SupportedMatrix& m, const IndexSet& keep);

// Tr(M[V,V]^-1) through a Cholesky factor; 0 on empty support.
double trace_of_inverse(const SupportedMatrix& m);
double trace_of_inverse(const Eigen::MatrixXd& m);

struct EigExtremes {
  double min_nonzero = 0.0;
  double max = 0.0;
  bool empty = false;  // no nonzero eigenvalue at all
};

EigExtremes eig_extremes(const SupportedMatrix& m);

// e^-eps B <= A <= e^eps B in the Loewner order.
bool psd_sandwich_check(const SupportedMatrix& a, const SupportedMatrix& b, double eps);

namespace detail {
// Unchecked kernels for hot loops. Return false when the factorization breaks down.
bool schur_complement(const Eigen::MatrixXd& m, std::span<const int> keep, std::span<const int> drop,
                      Eigen::MatrixXd& out);
bool inverse_diagonal(const Eigen::MatrixXd& m, Eigen::VectorXd& diag);
}  // namespace detail

}  // namespace gmrfsel
