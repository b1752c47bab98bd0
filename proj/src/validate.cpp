#include <algorithm>
#include <cmath>

#include "gmrfsel/dp.hpp"
#include "gmrfsel/io.hpp"
#include "gmrfsel/select.hpp"
#include "gmrfsel/validate.hpp"

namespace gmrfsel {

namespace {

using json = nlohmann::ordered_json;

struct Suite {
  std::string name;
  long checks = 0;
  long violations = 0;
  long notes = 0;
  json items = json::array();

  void fail(json detail) {
    ++violations;
    detail["kind"] = "violation";
    items.push_back(std::move(detail));
  }
  void note(json detail) {
    ++notes;
    detail["kind"] = "finding";
    items.push_back(std::move(detail));
  }
  json summary() const {
    return {{"suite", name}, {"checks", checks}, {"violations", violations}, {"findings", notes}, {"items", items}};
  }
};

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300}); }

IndexSet random_subset(int n, Rng& rng, double p) {
  IndexSet s;
  for (int v = 0; v < n; ++v)
    if (rng.bernoulli(p)) s.push_back(v);
  return s;
}

std::vector<int> one_based(const IndexSet& s) {
  std::vector<int> out;
  for (int v : s) out.push_back(v + 1);
  return out;
}

Suite three_path(std::uint64_t seed, int trials) {
  Suite suite{"three-path agreement"};
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t inst = rng.below(1 << 30);
    const GffModel gff = random_gff(2 + rng.below(11), 0.3, 0.5, 2.0, inst);
    const IndexSet s = set_union(random_subset(gff.n(), rng, 0.4), {gff.pin()});
    const double by_trace = err(gff, s);
    double by_var = 0.0, by_res = 0.0;
    for (int i = 0; i < gff.n(); ++i) {
      if (contains(s, i)) continue;
      by_var += conditional_variance(gff, i, s);
      by_res += effective_resistance(gff, i, s);
    }
    by_var /= gff.n();
    by_res /= gff.n();
    ++suite.checks;
    if (!close_rel(by_trace, by_var, 1e-9) || !close_rel(by_trace, by_res, 1e-9))
      suite.fail({{"instance_seed", inst}, {"set", one_based(s)}, {"trace", by_trace}, {"variance", by_var},
                  {"resistance", by_res}});
  }
  return suite;
}

Suite supermodularity(std::uint64_t seed, int trials) {
  Suite suite{"gff supermodularity"};
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t inst = rng.below(1 << 30);
    const GffModel gff = random_gff(3 + rng.below(8), 0.3, 0.5, 2.0, inst);
    const IndexSet a = set_union(random_subset(gff.n(), rng, 0.3), {gff.pin()});
    const int x = rng.below(gff.n()), y = rng.below(gff.n());
    const double lhs = err(gff, a) - err(gff, set_union(a, {x}));
    const double rhs = err(gff, set_union(a, {y})) - err(gff, set_union(a, make_index_set({x, y})));
    ++suite.checks;
    if (lhs < rhs - 1e-9)
      suite.fail({{"instance_seed", inst}, {"A", one_based(a)}, {"x", x + 1}, {"y", y + 1}, {"gap", rhs - lhs}});
  }
  return suite;
}

Suite greedy_vs_exact(std::uint64_t seed, int trials) {
  Suite suite{"greedy against exhaustive"};
  Rng rng(seed);
  const double inverse_factor = greedy_budget_factor();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t inst = rng.below(1 << 30);
    const GffModel gff = random_gff(3 + rng.below(8), 0.3, 0.5, 2.0, inst);
    const int b = rng.below(5);
    const double greedy = greedy_budget(gff, b).err_value;
    const double opt = exact_budget(gff, b).err_value;
    const double start = err(gff, {gff.pin()});
    const double classical = std::exp(-1.0) * start + (1.0 - std::exp(-1.0)) * opt;
    ++suite.checks;
    if (greedy > classical + 1e-9)
      suite.fail({{"instance_seed", inst}, {"budget", b}, {"greedy", greedy}, {"classical_bound", classical}});
    else if (greedy > inverse_factor * opt + 1e-9)
      suite.note({{"instance_seed", inst}, {"budget", b}, {"greedy", greedy}, {"optimum", opt},
                  {"ratio", greedy / opt}, {"note", "exceeds OPT/(1-1/e)"}});

    const double alpha = start * rng.uniform(0.05, 1.0);
    const auto gc = greedy_cover(gff, alpha);
    const auto ec = exact_cover(gff, alpha);
    const double factor = greedy_cover_factor(gff);
    const int g_size = budget_cost(gff, gc.selected), e_size = budget_cost(gff, ec.selected);
    ++suite.checks;
    if (!within_alpha(gc.err_value, alpha) || g_size > factor * e_size + 1e-9)
      suite.fail({{"instance_seed", inst}, {"alpha", alpha}, {"greedy_size", g_size}, {"exact_size", e_size},
                  {"factor", factor}});
  }
  return suite;
}

Suite dp_vs_exact(std::uint64_t seed, int trials) {
  Suite suite{"dp against exhaustive"};
  Rng rng(seed);
  const int per_family = std::max(1, trials / 4);
  auto check = [&](const Model& model, const TreeDecomposition& td, int b, Rounding rounding, std::uint64_t inst) {
    ++suite.checks;
    const double opt = exact_budget(model, b).err_value;
    try {
      const double got = dp_select(model, td, b, 0.1, {rounding, 1e7}).err_value;
      if (got > 1.1 * opt + 1e-9)
        suite.fail({{"instance_seed", inst}, {"rounding", rounding_tag(rounding)}, {"budget", b}, {"dp", got},
                    {"optimum", opt}});
    } catch (const Error& e) {
      suite.fail({{"instance_seed", inst}, {"rounding", rounding_tag(rounding)}, {"budget", b}, {"error", e.what()}});
    }
  };
  for (int t = 0; t < per_family; ++t) {
    const std::uint64_t inst = rng.below(1 << 30);
    const GffModel gff = random_gff(3 + rng.below(8), 0.0, 0.5, 2.0, inst);
    check(gff, balance_for_tree(gff.n(), gff.graph()), 1 + rng.below(3), Rounding::Gff, inst);
  }
  for (int t = 0; t < per_family; ++t) {
    const std::uint64_t inst = rng.below(1 << 30);
    const auto g = random_gmrf_with_decomposition(4 + rng.below(5), 2, 10.0, inst);
    RawDecomposition raw;
    raw.n = g.model.n();
    raw.bags = g.bags;
    raw.edges = g.bag_edges;
    for (const auto& bag : g.bags) raw.declared_bag_size = std::max(raw.declared_bag_size, static_cast<int>(bag.size()));
    check(g.model, normalize(raw, g.model.n(), g.model.graph()), 1 + rng.below(2), Rounding::Svd, inst);
  }
  return suite;
}

}  // namespace

ValidateResult validate_suite(const ValidateOptions& options) {
  ValidateResult out;
  out.findings = json::object();
  out.findings["seed"] = options.seed;
  out.findings["trials"] = options.trials;
  if (options.trials <= 0) {
    out.vacuous = true;
    out.findings["warning"] = "no trials requested; nothing was checked";
    out.findings["suites"] = json::array();
    return out;
  }
  Rng seeds(options.seed);
  std::vector<Suite> suites;
  suites.push_back(three_path(seeds.below(1 << 30), options.trials));
  suites.push_back(supermodularity(seeds.below(1 << 30), options.trials * 10));
  suites.push_back(greedy_vs_exact(seeds.below(1 << 30), options.trials));
  suites.push_back(dp_vs_exact(seeds.below(1 << 30), options.trials));
  json list = json::array();
  for (const auto& s : suites) {
    out.checks += s.checks;
    out.violations += s.violations;
    list.push_back(s.summary());
  }
  out.findings["violations"] = out.violations;
  out.findings["suites"] = std::move(list);
  return out;
}

}  // namespace gmrfsel
