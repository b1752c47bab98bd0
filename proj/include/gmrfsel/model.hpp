#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gmrfsel/linalg.hpp"

namespace gmrfsel {

// Gaussian MRF given by a full-rank precision matrix.
class GmrfModel {
 public:
  static GmrfModel from_precision(const Eigen::MatrixXd& precision);
  static GmrfModel from_covariance(const Eigen::MatrixXd& covariance);

  int n() const noexcept { return static_cast<int>(precision_.rows()); }
  const Eigen::MatrixXd& precision() const noexcept { return precision_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  SupportedMatrix precision_matrix() const { return SupportedMatrix::full(precision_); }
  // Edges (i < j) of the nonzero pattern of the precision.
  const std::vector<std::pair<int, int>>& graph() const noexcept { return graph_; }

 private:
  GmrfModel(Eigen::MatrixXd precision, Eigen::MatrixXd covariance);

  Eigen::MatrixXd precision_;
  Eigen::MatrixXd covariance_;
  std::vector<std::pair<int, int>> graph_;
};

struct Edge {
  int u = 0;
  int v = 0;
  double r = 1.0;  // resistance
};

// Gaussian free field on a connected resistor network with one pinned vertex.
class GffModel {
 public:
  GffModel(int n, std::vector<Edge> edges, int pin = 0);

  int n() const noexcept { return n_; }
  int pin() const noexcept { return pin_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  // Full n x n Laplacian; the pinned row is kept.
  const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
  // Covariance of the field with the pinned coordinate identically zero.
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  std::vector<std::pair<int, int>> graph() const;

  double min_resistance() const;
  double max_resistance() const;

  GffModel with_pin(int pin) const { return GffModel(n_, edges_, pin); }

 private:
  int n_;
  std::vector<Edge> edges_;
  int pin_;
  Eigen::MatrixXd laplacian_;
  Eigen::MatrixXd covariance_;
};

using Model = std::variant<GmrfModel, GffModel>;

int model_size(const Model& m);
// Precision used by err: Lambda for a GMRF, the full Laplacian for a GFF.
const Eigen::MatrixXd& model_precision(const Model& m);
// Vertex that is always observed for free, if any.
std::optional<int> free_vertex(const Model& m);
// Observed set as scored by err: S plus the pin for a GFF.
IndexSet scored_set(const Model& m, const IndexSet& s);
// Number of budgeted observations in S (the pin is free).
int budget_cost(const Model& m, const IndexSet& s);

SupportedMatrix laplacian(const GffModel& gff);

// (1/n) Tr(Lambda[S', S']^-1) with S' the unobserved vertices.
double err(const GmrfModel& model, const IndexSet& s);
double err(const GffModel& model, const IndexSet& s);
double err(const Model& model, const IndexSet& s);

// Var[X_i | X_S] from the covariance.
double conditional_variance(const GmrfModel& model, int i, const IndexSet& s);
double conditional_variance(const GffModel& model, int i, const IndexSet& s);
double conditional_variance(const Model& model, int i, const IndexSet& s);

// Weights of the best linear predictor of X_i from X_S, one per element of S.
Eigen::VectorXd predictor_weights(const GmrfModel& model, int i, const IndexSet& s);
Eigen::VectorXd predictor_weights(const GffModel& model, int i, const IndexSet& s);

// E[(X_i - w^T X_S)^2] evaluated from the covariance.
double predictor_residual(const Model& model, int i, const IndexSet& s, const Eigen::VectorXd& w);

struct ElectricalFlow {
  Eigen::VectorXd potential;  // unit current into t, S held at 0
  std::vector<double> flow;   // per edge, from u to v
  double resistance = 0.0;    // potential at t
  double energy = 0.0;        // sum of f^2 r over edges
};

// Unit current from t into the contracted set S.
ElectricalFlow electrical_flow(const GffModel& gff, int t, const IndexSet& s);
double effective_resistance(const GffModel& gff, int i, const IndexSet& s);

struct Tightness {
  double lower_bound = 0.0;
  bool tight = false;
};

// Lower bound (1 - |S|/n)/d on a unit-resistance d-regular graph, with tightness.
// err here is taken on the raw Laplacian without inserting the pin, so S must be nonempty.
Tightness regular_tightness(const GffModel& gff, const IndexSet& s);

struct TreeReduction {
  Eigen::VectorXd w;
  GffModel gff;
  IndexSet observed_tail;
};

// Rescale a tree-structured GMRF into a GFF whose first n coordinates,
// given the auxiliary tail, have the law of (w_1 X_1, ..., w_n X_n).
TreeReduction tree_gmrf_to_gff(const GmrfModel& model);

GffModel random_gff(int n, double density, double r_min, double r_max, std::uint64_t seed);

struct RandomGmrf {
  GmrfModel model;
  std::vector<IndexSet> bags;  // a tree decomposition of the generated graph
  std::vector<std::pair<int, int>> bag_edges;
};

RandomGmrf random_gmrf_with_decomposition(int n, int width, double condition_cap, std::uint64_t seed,
                                          double keep_probability = 0.7);
GmrfModel random_gmrf(int n, int width, double condition_cap, std::uint64_t seed);
// Tree-structured GMRF in which no two variables are independent.
GmrfModel random_tree_gmrf(int n, double condition_cap, std::uint64_t seed);

// Seeded generator with platform-independent draws (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int bound);  // [0, bound)
  double log_uniform(double lo, double hi);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gmrfsel
