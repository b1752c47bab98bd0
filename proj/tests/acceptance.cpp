// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance          run every criterion
//   acceptance N        run criterion N only (used by ctest)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gmrfsel/dp.hpp"
#include "gmrfsel/factorize.hpp"
#include "gmrfsel/io.hpp"
#include "gmrfsel/rounding.hpp"
#include "gmrfsel/select.hpp"
#include "oracles.hpp"

using namespace gmrfsel;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

#define REQUIRE(out, cond, msg)          \
  do {                                   \
    if (!(cond)) {                       \
      (out).pass = false;                \
      std::ostringstream os_;            \
      os_ << msg;                        \
      (out).detail = os_.str();          \
      return out;                        \
    }                                    \
  } while (0)

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

IndexSet random_set(int n, Rng& rng, double p) {
  IndexSet s;
  for (int v = 0; v < n; ++v)
    if (rng.bernoulli(p)) s.push_back(v);
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome counterexample_values() {
  Outcome out;
  const auto t0 = Clock::now();
  const GmrfModel m = GmrfModel::from_covariance(oracle::counterexample_covariance());
  const double e1 = err(m, {0}), e12 = err(m, {0, 1}), e13 = err(m, {0, 2}), e123 = err(m, {0, 1, 2});
  REQUIRE(out, std::abs(e1 - 0.1887) <= 2e-4, "err({1}) = " << e1);
  REQUIRE(out, std::abs(e12 - 0.1162) <= 2e-4, "err({1,2}) = " << e12);
  REQUIRE(out, std::abs(e13 - 0.1009) <= 2e-4, "err({1,3}) = " << e13);
  REQUIRE(out, std::abs(e123 - 0.0263) <= 2e-4, "err({1,2,3}) = " << e123);
  REQUIRE(out, e1 - e12 < e13 - e123, "diminishing returns unexpectedly hold");
  const double secs = seconds_since(t0);
  REQUIRE(out, secs < 1.0, "took " << secs << " s");
  out.detail = "err = " + fmt(e1) + ", " + fmt(e12) + ", " + fmt(e13) + ", " + fmt(e123) + "; gains " +
               fmt(e1 - e12) + " < " + fmt(e13 - e123);
  return out;
}

Outcome complete_graph_variances() {
  Outcome out;
  const GffModel g = oracle::complete(5, 2.5);
  for (int i = 1; i < 5; ++i) {
    const double v = conditional_variance(g, i, {0});
    REQUIRE(out, std::abs(v - 1.0) <= 1e-9, "V[X_" << i + 1 << "] = " << v);
  }
  const SupportedMatrix cov(5, {1, 2, 3}, g.covariance().block(1, 1, 3, 3));
  const double lo = eig_extremes(cov).min_nonzero;
  REQUIRE(out, std::abs(lo - 0.5) <= 1e-9, "smallest covariance eigenvalue " << lo);
  out.detail = "variances 1, smallest eigenvalue " + fmt(lo);
  return out;
}

Outcome regular_graph_tightness() {
  Outcome out;
  const auto t0 = Clock::now();
  long sets = 0, tight = 0;
  for (int n = 3; n <= 10; ++n) {
    const GffModel c = oracle::cycle(n);
    const SupportedMatrix lap = laplacian(c);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      IndexSet s, comp;
      for (int v = 0; v < n; ++v) (mask >> v & 1u ? s : comp).push_back(v);
      const double value = trace_of_inverse(obs(lap, s)) / n;
      const double bound = (1.0 - static_cast<double>(s.size()) / n) / 2.0;
      REQUIRE(out, value >= bound - 1e-12, "C_" << n << " mask " << mask << ": " << value << " < " << bound);
      const bool independent = oracle::independent(edges, comp);
      const Tightness t = regular_tightness(c, s);
      REQUIRE(out, t.tight == independent && (std::abs(value - bound) <= 1e-9) == independent,
              "C_" << n << " mask " << mask << ": equality does not match independence");
      ++sets;
      tight += independent;
    }
  }
  const double secs = seconds_since(t0);
  REQUIRE(out, secs < 10.0, "took " << secs << " s");
  out.detail = std::to_string(sets) + " sets, " + std::to_string(tight) + " tight, " + fmt(secs) + " s";
  return out;
}

Outcome three_path_agreement() {
  Outcome out;
  Rng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GffModel g = random_gff(2 + rng.below(11), 0.3, 0.5, 2.0, 1000 + t);
    const IndexSet s = set_union(random_set(g.n(), rng, 0.4), {g.pin()});
    const double by_trace = err(g, s);
    double by_var = 0.0, by_res = 0.0;
    for (int i = 0; i < g.n(); ++i) {
      if (contains(s, i)) continue;
      by_var += conditional_variance(g, i, s);
      by_res += effective_resistance(g, i, s);
    }
    by_var /= g.n();
    by_res /= g.n();
    const double scale = std::max({by_trace, by_var, by_res, 1e-300});
    const double gap = std::max({std::abs(by_trace - by_var), std::abs(by_trace - by_res), std::abs(by_var - by_res)}) / scale;
    worst = std::max(worst, gap);
    REQUIRE(out, gap <= 1e-9, "instance " << t << ": relative gap " << gap);
  }
  out.detail = "100 instances, worst relative gap " + fmt(worst);
  return out;
}

Outcome supermodularity() {
  Outcome out;
  Rng rng(77);
  int tuples = 0;
  for (int t = 0; t < 1000; ++t) {
    const GffModel g = random_gff(3 + rng.below(8), 0.3, 0.5, 2.0, 5000 + t);
    const IndexSet a = set_union(random_set(g.n(), rng, 0.3), {g.pin()});
    const int x = rng.below(g.n()), y = rng.below(g.n());
    const double lhs = err(g, a) - err(g, set_union(a, {x}));
    const double rhs = err(g, set_union(a, {y})) - err(g, set_union(a, make_index_set({x, y})));
    REQUIRE(out, lhs >= rhs - 1e-9, "tuple " << t << ": " << lhs << " < " << rhs);
    ++tuples;
  }
  out.detail = std::to_string(tuples) + " tuples, no violations";
  return out;
}

Outcome greedy_guarantees() {
  Outcome out;
  const double factor = 1.0 / (1.0 - std::exp(-1.0));
  Rng rng(606);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(t);
    // Alternate trees and sparse graphs with extra edges.
    const GffModel g = random_gff(3 + rng.below(8), t % 2 ? 0.3 : 0.0, 0.5, 2.0, seed);
    const int b = rng.below(5);
    const double greedy = greedy_budget(g, b).err_value;
    const double opt = exact_budget(g, b).err_value;
    const double classical = std::exp(-1.0) * err(g, {g.pin()}) + (1.0 - std::exp(-1.0)) * opt;
    // A budget-bound violation halts the suite and is reported as a finding.
    REQUIRE(out, greedy <= factor * opt + 1e-9,
            "finding after " << checked << " instances: gff seed " << seed << " (n=" << g.n() << ", b=" << b
                             << ") greedy " << fmt(greedy) << " > " << fmt(factor) << " * optimum " << fmt(opt)
                             << " (ratio " << fmt(greedy / opt) << "); the classical bound e^-1 err(S_0) + "
                             << "(1-1/e) OPT = " << fmt(classical) << (greedy <= classical + 1e-9 ? " holds" : " fails"));

    const double alpha = err(g, {g.pin()}) * rng.uniform(0.05, 1.0);
    const int g_size = budget_cost(g, greedy_cover(g, alpha).selected);
    const int e_size = budget_cost(g, exact_cover(g, alpha).selected);
    REQUIRE(out, g_size <= greedy_cover_factor(g) * e_size + 1e-9,
            "instance " << t << ": cover size " << g_size << " vs optimum " << e_size);
    ++checked;
  }
  // The sample can miss the bound's failures; show a fixed instance where it does fail.
  const GffModel w(4, {{0, 1, 0.93317}, {1, 2, 0.66734}, {1, 3, 0.70493}});
  const double wg = greedy_budget(w, 2).err_value, wo = exact_budget(w, 2).err_value;
  out.detail = std::to_string(checked) + " instances within both certificates (not a proof: the 4-vertex tree "
               "r = 0.93317, 0.66734, 0.70493 at b=2 has ratio " + fmt(wg / wo) + ")";
  return out;
}

TreeDecomposition file_decomposition(const RandomGmrf& g, const std::filesystem::path& dir, int index) {
  const auto path = dir / ("graph" + std::to_string(index) + ".td");
  {
    std::ofstream f(path);
    write_decomposition(f, g.model.n(), g.bags, g.bag_edges);
  }
  return load_decomposition(path.string(), g.model);
}

Outcome dp_approximation() {
  Outcome out;
  const auto t0 = Clock::now();
  Rng rng(4242);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const GffModel g = random_gff(3 + rng.below(10), 0.0, 0.5, 2.0, 20000 + t);
    const int b = 1 + rng.below(3);
    const TreeDecomposition td = balance_for_tree(g.n(), g.graph());
    const double got = dp_select(g, td, b, 0.1).err_value;
    const double opt = exact_budget(g, b).err_value;
    REQUIRE(out, got <= 1.1 * opt + 1e-9, "tree " << t << ": dp " << got << " vs optimum " << opt);
    if (opt > 0) worst = std::max(worst, got / opt);
  }
  const auto dir = std::filesystem::temp_directory_path() / "gmrfsel_acceptance";
  std::filesystem::create_directories(dir);
  for (int t = 0; t < 20; ++t) {
    const RandomGmrf g = random_gmrf_with_decomposition(4 + rng.below(5), 2, 10.0, 30000 + t);
    const int b = 1 + rng.below(2);
    const TreeDecomposition td = file_decomposition(g, dir, t);
    const double got = dp_select(g.model, td, b, 0.1, {Rounding::Svd, 1e7}).err_value;
    const double opt = exact_budget(g.model, b).err_value;
    REQUIRE(out, got <= 1.1 * opt + 1e-9, "width-2 graph " << t << ": dp " << got << " vs optimum " << opt);
    worst = std::max(worst, got / opt);
  }
  std::filesystem::remove_all(dir);
  const double secs = seconds_since(t0);
  REQUIRE(out, secs < 300.0, "took " << secs << " s");
  out.detail = "50 trees + 20 width-2 graphs, worst ratio " + fmt(worst) + ", " + fmt(secs) + " s";
  return out;
}

Outcome rounding_contracts() {
  Outcome out;
  Rng rng(808);
  const double eps = 0.05;
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + rng.below(4);
    const Eigen::MatrixXd a = oracle::random_pd(k, 40000 + static_cast<unsigned>(t), 0.3);
    IndexSet support;
    for (int i = 0; i < k; ++i) support.push_back(i);
    const SupportedMatrix p(k, support, a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const SvdGrid grid(es.eigenvalues().minCoeff() / 2, es.eigenvalues().maxCoeff() * 2, eps, 0.1, 4, 8);
    const RoundResult r = svd_round_keyed(p, grid);
    REQUIRE(out, psd_sandwich_check(r.matrix, p, eps), "svd matrix " << t << " leaves the sandwich");
    const RoundResult again = svd_round_keyed(r.matrix, grid);
    REQUIRE(out, again.key == r.key && (again.matrix.dense() - r.matrix.dense()).cwiseAbs().maxCoeff() <= 1e-12,
            "svd matrix " << t << " is not a fixed point after rounding");
  }
  const GffGrid grid(1e-3, 1e3, eps);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + rng.below(5);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        if (j == i + 1 || rng.bernoulli(0.5)) b(i, j) = b(j, i) = -rng.uniform(0.05, 5.0);
    for (int i = 0; i < k; ++i) b(i, i) = -b.row(i).sum() + (i == 0 || rng.bernoulli(0.7) ? rng.uniform(0.01, 3.0) : 0.0);
    IndexSet support;
    for (int i = 0; i < k; ++i) support.push_back(i);
    const SupportedMatrix p(k, support, b);
    const SupportedMatrix r = gff_round(p, grid);
    REQUIRE(out, gff_relation(r, p, eps, grid.c_high), "gff matrix " << t << " breaks the row-sum relation");
    REQUIRE(out, gff_round(r, grid).dense() == r.dense(), "gff matrix " << t << " is not a fixed point");
    const double tp = trace_of_inverse(p), tr = trace_of_inverse(r);
    REQUIRE(out, tr <= std::exp(eps) * tp * (1 + 1e-9) && tr >= std::exp(-eps) * tp * (1 - 1e-9),
            "gff matrix " << t << ": trace " << tr << " vs " << tp);
  }
  out.detail = "100 svd + 100 gff matrices at eps " + fmt(eps);
  return out;
}

Outcome factorization() {
  Outcome out;
  int pairs = 0;
  auto check = [&](const Model& model, const TreeDecomposition& td, FactorMode mode) -> bool {
    const ClusterFactors f = factorize(model, td, mode);
    const Eigen::MatrixXd& lambda = model_precision(model);
    const double scale = lambda.cwiseAbs().maxCoeff();
    if ((f.sum().dense() - lambda).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
    if (mode == FactorMode::General) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lambda);
      const double lo = es.eigenvalues().minCoeff() / td.size(), hi = es.eigenvalues().maxCoeff();
      for (const auto& x : f.factors) {
        if (x.empty()) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fx(x.block());
        if (fx.eigenvalues().minCoeff() < lo - 1e-9 || fx.eigenvalues().maxCoeff() > hi + 1e-9) return false;
      }
    }
    ++pairs;
    return true;
  };
  for (int t = 0; t < 25; ++t) {
    const GffModel g = random_gff(4 + t % 9, 0.0, 0.5, 2.0, 50000 + t);
    REQUIRE(out, check(g, balance_for_tree(g.n(), g.graph()), FactorMode::Gff), "free field " << t);
  }
  for (int t = 0; t < 40; ++t) {
    const RandomGmrf g = random_gmrf_with_decomposition(4 + t % 9, 1 + t % 3, 20.0, 60000 + t);
    RawDecomposition raw{g.model.n(), 0, g.bags, g.bag_edges};
    for (const auto& bag : g.bags) raw.declared_bag_size = std::max(raw.declared_bag_size, static_cast<int>(bag.size()));
    REQUIRE(out, check(g.model, normalize(raw, g.model.n(), g.model.graph()), FactorMode::General), "gmrf " << t);
  }
  out.detail = std::to_string(pairs) + " pairs";
  return out;
}

Outcome tree_reduction() {
  Outcome out;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const GmrfModel m = random_tree_gmrf(2 + t % 11, 20.0, 70000 + static_cast<std::uint64_t>(t));
    const TreeReduction r = tree_gmrf_to_gff(m);
    IndexSet free_vertices;
    for (int v = 0; v < r.gff.n(); ++v)
      if (!contains(r.observed_tail, v)) free_vertices.push_back(v);
    Eigen::MatrixXd l(free_vertices.size(), free_vertices.size());
    for (size_t a = 0; a < free_vertices.size(); ++a)
      for (size_t b = 0; b < free_vertices.size(); ++b) l(a, b) = r.gff.laplacian()(free_vertices[a], free_vertices[b]);
    const Eigen::MatrixXd cov = l.inverse().topLeftCorner(m.n(), m.n());
    const Eigen::MatrixXd scaled = r.w.asDiagonal() * m.covariance() * r.w.asDiagonal();
    const double gap = (scaled - cov).cwiseAbs().maxCoeff();
    worst = std::max(worst, gap);
    REQUIRE(out, gap <= 1e-8, "tree gmrf " << t << ": entrywise gap " << gap);
  }
  out.detail = "50 trees, worst entrywise gap " + fmt(worst);
  return out;
}

Outcome eigenvalue_preservation() {
  Outcome out;
  Rng rng(909);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + rng.below(7);
    IndexSet support;
    for (int v = 0; v < n; ++v)
      if (rng.bernoulli(0.75)) support.push_back(v);
    if (support.empty()) support.push_back(0);
    const SupportedMatrix m(n, support, oracle::random_pd(static_cast<int>(support.size()), 80000 + t, 0.1));
    const double base = eig_extremes(m).min_nonzero;
    IndexSet o, delta;
    for (int v : support) {
      if (rng.bernoulli(0.4)) o.push_back(v);
      if (rng.bernoulli(0.5)) delta.push_back(v);
    }
    const SupportedMatrix a = obs(m, o), b = marginal(m, delta);
    if (!a.empty()) REQUIRE(out, eig_extremes(a).min_nonzero >= base - 1e-9, "obs case " << t);
    if (!b.empty()) REQUIRE(out, eig_extremes(b).min_nonzero >= base - 1e-9, "marginal case " << t);
  }
  out.detail = "100 (M, O, Delta) triples";
  return out;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"counterexample err values and failed diminishing returns", counterexample_values},
      {"complete graph on five vertices: variances and covariance eigenvalue", complete_graph_variances},
      {"cycle graphs: lower bound and tightness iff independent complement", regular_graph_tightness},
      {"three err evaluation paths agree", three_path_agreement},
      {"free-field supermodularity over 1000 tuples", supermodularity},
      {"greedy budget and cover guarantees", greedy_guarantees},
      {"dynamic program within 1.1 of the optimum", dp_approximation},
      {"rounding sandwich, row-sum relation, idempotence, trace stability", rounding_contracts},
      {"cluster factorization sums and eigenvalue bounds", factorization},
      {"tree GMRF to free-field reduction", tree_reduction},
      {"obs and marginal keep the smallest nonzero eigenvalue", eigenvalue_preservation},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::cerr << "criterion number must be in 1.." << criteria.size() << '\n';
      return 2;
    }
  }
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].name << " -- " << o.detail << '\n';
  }
  return failed == 0 ? 0 : 1;
}
