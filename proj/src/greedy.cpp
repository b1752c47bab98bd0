#include <algorithm>
#include <cmath>
#include <queue>

#include "gmrfsel/select.hpp"

namespace gmrfsel {

std::string_view solver_tag(Solver s) {
  switch (s) {
    case Solver::Exact: return "exact";
    case Solver::GreedyBudget: return "greedy-budget";
    case Solver::GreedyCover: return "greedy-cover";
    case Solver::Dp: return "dp";
  }
  return "exact";
}

Solver parse_solver_tag(std::string_view tag) {
  if (tag == "exact") return Solver::Exact;
  if (tag == "greedy-budget") return Solver::GreedyBudget;
  if (tag == "greedy-cover") return Solver::GreedyCover;
  if (tag == "dp") return Solver::Dp;
  throw Error(ErrorCode::ParseError, "unknown solver tag '" + std::string(tag) + "'");
}

bool within_alpha(double err_value, double alpha) { return err_value <= alpha + 1e-12 * std::abs(alpha); }

double greedy_budget_factor() { return 1.0 / (1.0 - std::exp(-1.0)); }

double greedy_cover_factor(const GffModel& gff) {
  if (gff.n() < 2) return 1.0;
  const double nm1 = gff.n() - 1.0;
  return 1.0 + std::log(nm1 * nm1 * gff.max_resistance() / gff.min_resistance());
}

namespace {

// Inverse of the unobserved block, updated by rank-one downdates as vertices are observed.
class UnobservedInverse {
 public:
  UnobservedInverse(const Eigen::MatrixXd& lambda, const IndexSet& observed) {
    for (int v = 0; v < lambda.rows(); ++v)
      if (!contains(observed, v)) rest_.push_back(v);
    if (!rest_.empty()) {
      const Eigen::MatrixXd block = principal(lambda, rest_);
      Eigen::LLT<Eigen::MatrixXd> llt(block);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::SingularSubmatrix, "unobserved block is singular");
      inv_ = llt.solve(Eigen::MatrixXd::Identity(block.rows(), block.cols()));
    }
  }

  const std::vector<int>& rest() const { return rest_; }
  double trace() const { return rest_.empty() ? 0.0 : inv_.trace(); }

  // Tr C - Tr C', with C' the inverse after observing x: (C^2)_xx / C_xx.
  double gain(int x) const {
    const auto p = position(x);
    return inv_.col(p).squaredNorm() / inv_(p, p);
  }

  void observe(int x) {
    const auto p = position(x);
    const Eigen::VectorXd c = inv_.col(p);
    inv_ -= c * c.transpose() / c(p);
    const auto k = static_cast<Eigen::Index>(rest_.size());
    Eigen::MatrixXd next(k - 1, k - 1);
    for (Eigen::Index a = 0, ra = 0; a < k; ++a) {
      if (a == p) continue;
      for (Eigen::Index b = 0, rb = 0; b < k; ++b) {
        if (b == p) continue;
        next(ra, rb++) = inv_(a, b);
      }
      ++ra;
    }
    inv_ = std::move(next);
    rest_.erase(rest_.begin() + p);
  }

 private:
  Eigen::Index position(int x) const {
    return std::lower_bound(rest_.begin(), rest_.end(), x) - rest_.begin();
  }

  std::vector<int> rest_;
  Eigen::MatrixXd inv_;
};

struct Candidate {
  double gain;
  int vertex;
  // Larger gain first, then lower index.
  bool operator<(const Candidate& o) const {
    if (gain != o.gain) return gain < o.gain;
    return vertex > o.vertex;
  }
};

class GreedyRun {
 public:
  explicit GreedyRun(const Model& model)
      : model_(model),
        lazy_(std::holds_alternative<GffModel>(model)),
        selected_(scored_set(model, {})),
        inv_(model_precision(model), selected_) {
    if (lazy_)
      for (int v : inv_.rest()) heap_.push({inv_.gain(v), v});
  }

  bool exhausted() const { return inv_.rest().empty(); }
  double current_err() const { return inv_.trace() / model_size(model_); }
  const IndexSet& selected() const { return selected_; }
  long evaluations() const { return evaluations_; }

  // Adds argmin_x err(S + x), ties to the lowest index.
  void step() {
    const int x = lazy_ ? pick_lazy() : pick_full();
    inv_.observe(x);
    selected_ = set_union(selected_, {x});
  }

 private:
  int pick_full() {
    Candidate best{-1.0, -1};
    for (int v : inv_.rest()) {
      ++evaluations_;
      Candidate c{inv_.gain(v), v};
      if (best.vertex < 0 || best < c) best = c;
    }
    return best.vertex;
  }

  // Gains only shrink as S grows, so a refreshed gain that still beats every
  // stale bound is the true argmax.
  int pick_lazy() {
    while (true) {
      Candidate top = heap_.top();
      heap_.pop();
      if (contains(selected_, top.vertex)) continue;
      ++evaluations_;
      Candidate fresh{inv_.gain(top.vertex), top.vertex};
      if (heap_.empty() || !(fresh < heap_.top())) return fresh.vertex;
      heap_.push(fresh);
    }
  }

  const Model& model_;
  bool lazy_;
  IndexSet selected_;
  UnobservedInverse inv_;
  std::priority_queue<Candidate> heap_;
  long evaluations_ = 0;
};

}  // namespace

SelectionReport greedy_budget(const Model& model, int budget) {
  if (budget < 0) throw Error(ErrorCode::InfeasibleParameters, "budget must be non-negative");
  GreedyRun run(model);
  nlohmann::ordered_json trajectory = nlohmann::ordered_json::array();
  for (int round = 0; round < budget && !run.exhausted(); ++round) {
    run.step();
    trajectory.push_back(run.current_err());
  }
  SelectionReport rep;
  rep.selected = run.selected();
  rep.err_value = err(model, rep.selected);
  rep.solver = Solver::GreedyBudget;
  if (std::holds_alternative<GffModel>(model))
    rep.guarantee = Guarantee{greedy_budget_factor(), "greedy on a supermodular objective, 1/(1-1/e)"};
  rep.n = model_size(model);
  rep.budget_or_alpha = budget;
  rep.diagnostics = {{"gain_evaluations", run.evaluations()}, {"trajectory", trajectory}};
  return rep;
}

SelectionReport greedy_cover(const Model& model, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::InfeasibleParameters, "alpha must be non-negative");
  GreedyRun run(model);
  nlohmann::ordered_json trajectory = nlohmann::ordered_json::array();
  while (!run.exhausted() && !within_alpha(err(model, run.selected()), alpha)) {
    run.step();
    trajectory.push_back(run.current_err());
  }
  SelectionReport rep;
  rep.selected = run.selected();
  rep.err_value = err(model, rep.selected);
  rep.solver = Solver::GreedyCover;
  if (const auto* gff = std::get_if<GffModel>(&model))
    rep.guarantee = Guarantee{greedy_cover_factor(*gff), "greedy cover, 1+ln((n-1)^2 R/r)"};
  rep.n = model_size(model);
  rep.budget_or_alpha = alpha;
  rep.diagnostics = {{"gain_evaluations", run.evaluations()}, {"trajectory", trajectory}};
  return rep;
}

}  // namespace gmrfsel
