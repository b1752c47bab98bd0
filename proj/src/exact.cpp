#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "gmrfsel/select.hpp"

namespace gmrfsel {

int configured_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GMRF_SELECT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Depth-first walk over in/out decisions for the candidate vertices. The
// unobserved vertices are appended to a growing Cholesky factor L of
// Lambda[U,U]; only L^-1 is kept, and Tr(Lambda[U,U]^-1) = ||L^-1||_F^2.
class SubsetWalker {
 public:
  SubsetWalker(const Eigen::MatrixXd& lambda, std::vector<int> candidates, IndexSet forced)
      : lambda_(lambda), cand_(std::move(candidates)), forced_(std::move(forced)) {
    const int n = static_cast<int>(lambda.rows());
    linv_ = Eigen::MatrixXd::Zero(n, n);
    order_.reserve(static_cast<size_t>(n));
    chosen_.reserve(static_cast<size_t>(n));
  }

  // Visits every set with size in [lo, hi] extending the decision prefix.
  // `visit(chosen, trace)` returns false to stop early.
  template <class Visit>
  void run(const std::vector<bool>& prefix, int lo, int hi, Visit&& visit) {
    k_ = 0;
    order_.clear();
    chosen_.clear();
    trace_ = 0.0;
    for (size_t p = 0; p < prefix.size(); ++p) {
      if (prefix[p]) {
        chosen_.push_back(cand_[p]);
      } else if (!append(cand_[p])) {
        return;
      }
    }
    if (static_cast<int>(chosen_.size()) > hi) return;
    stop_ = false;
    dfs(prefix.size(), lo, hi, visit);
  }

  long evaluated() const { return evaluated_; }

 private:
  bool append(int v) {
    const Eigen::Index k = k_;
    Eigen::VectorXd a(k);
    for (Eigen::Index t = 0; t < k; ++t) a(t) = lambda_(order_[t], v);
    // l = L^-1 a, d^2 = Lambda_vv - |l|^2.
    const Eigen::VectorXd l = linv_.topLeftCorner(k, k).triangularView<Eigen::Lower>() * a;
    const double d2 = lambda_(v, v) - l.squaredNorm();
    if (!(d2 > kRankTol * lambda_(v, v))) return false;
    const double d = std::sqrt(d2);
    Eigen::RowVectorXd row = -(l.transpose() * linv_.topLeftCorner(k, k).triangularView<Eigen::Lower>()) / d;
    linv_.row(k).head(k) = row;
    linv_(k, k) = 1.0 / d;
    trace_ += row.squaredNorm() + 1.0 / d2;
    order_.push_back(v);
    ++k_;
    return true;
  }

  void pop() {
    --k_;
    trace_ -= linv_.row(k_).head(k_ + 1).squaredNorm();
    order_.pop_back();
  }

  template <class Visit>
  void dfs(size_t pos, int lo, int hi, Visit& visit) {
    if (stop_) return;
    const int have = static_cast<int>(chosen_.size());
    const int left = static_cast<int>(cand_.size() - pos);
    if (have + left < lo) return;
    if (pos == cand_.size()) {
      ++evaluated_;
      IndexSet s = set_union(make_index_set(chosen_), forced_);
      if (!visit(s, trace_)) stop_ = true;
      return;
    }
    // Include first: sets of a fixed size then come out in lexicographic order.
    if (have < hi) {
      chosen_.push_back(cand_[pos]);
      dfs(pos + 1, lo, hi, visit);
      chosen_.pop_back();
    }
    const double saved = trace_;
    if (append(cand_[pos])) {
      dfs(pos + 1, lo, hi, visit);
      pop();
      trace_ = saved;
    }
  }

  const Eigen::MatrixXd& lambda_;
  std::vector<int> cand_;
  IndexSet forced_;
  Eigen::MatrixXd linv_;
  Eigen::Index k_ = 0;
  std::vector<int> order_;
  std::vector<int> chosen_;
  double trace_ = 0.0;
  bool stop_ = false;
  long evaluated_ = 0;
};

struct Best {
  double value = std::numeric_limits<double>::infinity();
  IndexSet set;
  bool found = false;

  void offer(double v, const IndexSet& s) {
    if (!found || v < value || (v == value && s < set)) {
      value = v;
      set = s;
      found = true;
    }
  }
};

struct SearchSpace {
  std::vector<int> candidates;
  IndexSet forced;
};

SearchSpace search_space(const Model& model, const ExactOptions& options) {
  const int n = model_size(model);
  if (n > options.max_n)
    throw Error(ErrorCode::InstanceTooLarge,
                "n = " + std::to_string(n) + " exceeds the exhaustive cap " + std::to_string(options.max_n));
  SearchSpace space;
  space.forced = scored_set(model, {});
  for (int v = 0; v < n; ++v)
    if (!contains(space.forced, v)) space.candidates.push_back(v);
  return space;
}

std::vector<std::vector<bool>> prefixes(size_t candidates, int threads) {
  size_t depth = 0;
  while (depth < candidates && depth < 12 && (size_t{1} << depth) < static_cast<size_t>(threads) * 8) ++depth;
  std::vector<std::vector<bool>> out;
  for (size_t mask = 0; mask < (size_t{1} << depth); ++mask) {
    std::vector<bool> p(depth);
    // Chunk order matches the walk order: include before exclude.
    for (size_t b = 0; b < depth; ++b) p[b] = !((mask >> (depth - 1 - b)) & 1u);
    out.push_back(std::move(p));
  }
  return out;
}

// Runs `per_chunk(walker, prefix, slot)` over all chunks on a worker pool.
template <class PerChunk>
long run_chunks(const Model& model, const SearchSpace& space, int threads, size_t chunk_count,
                const std::vector<std::vector<bool>>& chunks, PerChunk per_chunk) {
  std::atomic<size_t> next{0};
  std::atomic<long> evaluated{0};
  auto worker = [&] {
    SubsetWalker walker(model_precision(model), space.candidates, space.forced);
    for (size_t c = next++; c < chunk_count; c = next++) per_chunk(walker, chunks[c], c);
    evaluated += walker.evaluated();
  };
  const int pool = std::min<int>(threads, static_cast<int>(chunk_count));
  std::vector<std::thread> workers;
  for (int t = 1; t < pool; ++t) workers.emplace_back(worker);
  worker();
  for (auto& w : workers) w.join();
  return evaluated.load();
}

}  // namespace

SelectionReport exact_budget(const Model& model, int budget, const ExactOptions& options) {
  if (budget < 0) throw Error(ErrorCode::InfeasibleParameters, "budget must be non-negative");
  const SearchSpace space = search_space(model, options);
  const int threads = configured_threads(options.threads);
  const auto chunks = prefixes(space.candidates.size(), threads);
  std::vector<Best> best(chunks.size());
  const long evaluated = run_chunks(model, space, threads, chunks.size(), chunks,
                                    [&](SubsetWalker& w, const std::vector<bool>& prefix, size_t slot) {
                                      w.run(prefix, 0, budget, [&](const IndexSet& s, double trace) {
                                        best[slot].offer(trace, s);
                                        return true;
                                      });
                                    });
  Best overall;
  for (const auto& b : best)
    if (b.found) overall.offer(b.value, b.set);
  if (!overall.found) throw Error(ErrorCode::SingularSubmatrix, "no subset has a nonsingular complement");

  SelectionReport rep;
  rep.selected = overall.set;
  rep.err_value = err(model, rep.selected);
  rep.solver = Solver::Exact;
  rep.guarantee = Guarantee{1.0, "exhaustive enumeration"};
  rep.n = model_size(model);
  rep.budget_or_alpha = budget;
  rep.diagnostics = {{"subsets_evaluated", evaluated}};
  return rep;
}

SelectionReport exact_cover(const Model& model, double alpha, const ExactOptions& options) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::InfeasibleParameters, "alpha must be non-negative");
  const SearchSpace space = search_space(model, options);
  const int threads = configured_threads(options.threads);
  const int n = model_size(model);
  const auto chunks = prefixes(space.candidates.size(), threads);
  long evaluated = 0;
  for (int size = 0; size <= static_cast<int>(space.candidates.size()); ++size) {
    // The first feasible set of a chunk is its lexicographic minimum.
    std::vector<Best> first(chunks.size());
    evaluated += run_chunks(model, space, threads, chunks.size(), chunks,
                            [&](SubsetWalker& w, const std::vector<bool>& prefix, size_t slot) {
                              w.run(prefix, size, size, [&](const IndexSet& s, double trace) {
                                if (!within_alpha(trace / n, alpha)) return true;
                                first[slot].offer(0.0, s);
                                return false;
                              });
                            });
    Best overall;
    for (const auto& b : first)
      if (b.found) overall.offer(0.0, b.set);
    if (!overall.found) continue;
    SelectionReport rep;
    rep.selected = overall.set;
    rep.err_value = err(model, rep.selected);
    rep.solver = Solver::Exact;
    rep.guarantee = Guarantee{1.0, "exhaustive enumeration"};
    rep.n = n;
    rep.budget_or_alpha = alpha;
    rep.diagnostics = {{"subsets_evaluated", evaluated}};
    return rep;
  }
  throw Error(ErrorCode::NumericFailure, "full observation does not meet alpha");
}

}  // namespace gmrfsel
