#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gmrfsel/dp.hpp"
#include "gmrfsel/io.hpp"
#include "gmrfsel/select.hpp"
#include "gmrfsel/validate.hpp"

using namespace gmrfsel;

namespace {

constexpr int kExitError = 2;
constexpr int kExitStateCap = 3;
constexpr int kExitViolations = 4;

struct Common {
  std::string input;
  int pin = 0;  // 1-based override, 0 keeps the file's pin
  std::string format = "json";
  bool timing = false;
};

Model load(const Common& c) {
  Model m = load_model(c.input);
  if (c.pin != 0) {
    auto* gff = std::get_if<GffModel>(&m);
    if (!gff) throw Error(ErrorCode::InfeasibleParameters, "--pin applies only to GFF models");
    if (c.pin < 1 || c.pin > gff->n()) throw Error(ErrorCode::InfeasibleParameters, "--pin out of range");
    m = gff->with_pin(c.pin - 1);
  }
  return m;
}

ReportFormat format_of(const std::string& f) { return f == "text" ? ReportFormat::Text : ReportFormat::Json; }

IndexSet parse_set(const std::string& text, int n) {
  IndexSet out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw Error(ErrorCode::ParseError, "bad set element '" + item + "'");
    if (v < 1 || v > n) throw Error(ErrorCode::ParseError, "set element " + std::to_string(v) + " out of range");
    out.push_back(v - 1);
  }
  return make_index_set(std::move(out));
}

template <class F>
SelectionReport timed(bool timing, F&& run) {
  const auto t0 = std::chrono::steady_clock::now();
  SelectionReport r = run();
  if (timing)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void print(const SelectionReport& r, const std::string& format) { std::cout << emit_report(r, format_of(format)) << '\n'; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Choose which variables of a Gaussian MRF to observe"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // eval
  Common eval_opts;
  std::string eval_set;
  auto* eval = app.add_subcommand("eval", "Evaluate err(S) for a given set");
  eval->add_option("--input", eval_opts.input, "Model file")->required();
  eval->add_option("--set", eval_set, "Comma-separated 1-based vertices")->required();
  eval->add_option("--pin", eval_opts.pin, "Pinned vertex of a GFF (1-based)");
  eval->add_option("--format", eval_opts.format)->check(CLI::IsMember({"json", "text"}));

  // select
  auto* select = app.add_subcommand("select", "Run a selection algorithm");
  select->require_subcommand(1);
  Common sel_opts;
  std::optional<int> budget;
  std::optional<double> alpha;
  int max_n = 20, threads = 0;
  double eps_prime = 0.1, state_cap = 1e7;
  std::string td_path, rounding = "gff";
  auto add_common = [&](CLI::App* cmd, bool with_alpha) {
    cmd->add_option("--input", sel_opts.input, "Model file")->required();
    cmd->add_option("--pin", sel_opts.pin, "Pinned vertex of a GFF (1-based)");
    cmd->add_option("--format", sel_opts.format)->check(CLI::IsMember({"json", "text"}));
    cmd->add_flag("--timing", sel_opts.timing, "Report wall-clock time");
    auto* b = cmd->add_option("--budget", budget, "Number of observations");
    if (with_alpha) {
      auto* a = cmd->add_option("--alpha", alpha, "Target err for the cover problem");
      b->excludes(a);
    }
  };
  auto* exact = select->add_subcommand("exact", "Exhaustive search");
  add_common(exact, true);
  exact->add_option("--max-n", max_n, "Largest n accepted");
  exact->add_option("--threads", threads, "Worker threads (default: GMRF_SELECT_THREADS or all cores)");
  auto* greedy = select->add_subcommand("greedy", "Greedy selection");
  add_common(greedy, true);
  auto* dp = select->add_subcommand("dp", "Dynamic program over a tree decomposition");
  add_common(dp, false);
  dp->add_option("--eps-prime", eps_prime, "Target relative error in (0,1)");
  dp->add_option("--td", td_path, "Tree decomposition file (built automatically for trees)");
  dp->add_option("--rounding", rounding)->check(CLI::IsMember({"gff", "svd"}));
  dp->add_option("--state-cap", state_cap, "Largest state count accepted");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random model");
  gen->require_subcommand(1);
  int gen_n = 10;
  std::uint64_t gen_seed = 1;
  double density = 0.3, rmin = 0.5, rmax = 2.0, cap = 10.0;
  int width = 2;
  std::string gen_out, td_out;
  auto* gen_gff = gen->add_subcommand("gff", "Random connected resistor network");
  gen_gff->add_option("--n", gen_n)->required();
  gen_gff->add_option("--seed", gen_seed)->required();
  gen_gff->add_option("--density", density, "Probability of each extra edge");
  gen_gff->add_option("--rmin", rmin);
  gen_gff->add_option("--rmax", rmax);
  gen_gff->add_option("--output", gen_out, "Write here instead of stdout");
  auto* gen_gmrf = gen->add_subcommand("gmrf", "Random GMRF of bounded treewidth");
  gen_gmrf->add_option("--n", gen_n)->required();
  gen_gmrf->add_option("--seed", gen_seed)->required();
  gen_gmrf->add_option("--width", width, "Treewidth of the generating k-tree");
  gen_gmrf->add_option("--cap", cap, "Condition number cap");
  gen_gmrf->add_option("--output", gen_out, "Write here instead of stdout");
  gen_gmrf->add_option("--td-out", td_out, "Also write the generating tree decomposition");

  // convert
  auto* convert = app.add_subcommand("convert", "Model conversions");
  convert->require_subcommand(1);
  std::string conv_in, conv_out;
  auto* to_gff = convert->add_subcommand("tree-gmrf-to-gff", "Rescale a tree GMRF into a GFF");
  to_gff->add_option("--input", conv_in)->required();
  to_gff->add_option("--output", conv_out, "Write here instead of stdout");

  // validate
  auto* val = app.add_subcommand("validate", "Cross-check all solvers on random instances");
  std::uint64_t val_seed = 1;
  int trials = 20;
  std::string findings_path;
  bool inject_fault = false;
  val->add_option("--seed", val_seed);
  val->add_option("--trials", trials);
  val->add_option("--findings", findings_path, "Write findings JSON here");
  val->add_flag("--inject-fault", inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*eval) {
      const Model m = load(eval_opts);
      const IndexSet s = scored_set(m, parse_set(eval_set, model_size(m)));
      const double value = err(m, s);
      if (eval_opts.format == "text") {
        std::cout << "err=" << std::setprecision(12) << value << '\n';
      } else {
        nlohmann::ordered_json j;
        nlohmann::ordered_json sel = nlohmann::ordered_json::array();
        for (int v : s) sel.push_back(v + 1);
        j["set"] = std::move(sel);
        j["err"] = round_significant(value);
        j["n"] = model_size(m);
        std::cout << j.dump(2) << '\n';
      }
      return 0;
    }

    if (*select) {
      const Model m = load(sel_opts);
      if (!budget && !alpha) throw Error(ErrorCode::InfeasibleParameters, "give --budget or --alpha");
      SelectionReport r;
      if (*exact) {
        const ExactOptions eo{max_n, threads};
        r = timed(sel_opts.timing, [&] { return budget ? exact_budget(m, *budget, eo) : exact_cover(m, *alpha, eo); });
      } else if (*greedy) {
        r = timed(sel_opts.timing, [&] { return budget ? greedy_budget(m, *budget) : greedy_cover(m, *alpha); });
      } else {
        if (!budget) throw Error(ErrorCode::InfeasibleParameters, "the dynamic program needs --budget");
        const DpSelectOptions o{parse_rounding_tag(rounding), state_cap};
        r = timed(sel_opts.timing, [&] {
          const TreeDecomposition td =
              td_path.empty() ? balance_for_tree(model_size(m), model_graph(m)) : load_decomposition(td_path, m);
          return dp_select(m, td, *budget, eps_prime, o);
        });
      }
      print(r, sel_opts.format);
      return 0;
    }

    if (*gen) {
      std::ostringstream text;
      if (*gen_gff) {
        write_model(text, random_gff(gen_n, density, rmin, rmax, gen_seed));
      } else {
        const RandomGmrf g = random_gmrf_with_decomposition(gen_n, width, cap, gen_seed);
        write_model(text, g.model);
        if (!td_out.empty()) {
          auto out = open_out(td_out);
          write_decomposition(out, gen_n, g.bags, g.bag_edges);
        }
      }
      if (gen_out.empty()) {
        std::cout << text.str();
      } else {
        auto out = open_out(gen_out);
        out << text.str();
      }
      return 0;
    }

    if (*convert) {
      const Model m = load_model(conv_in);
      const auto* gmrf = std::get_if<GmrfModel>(&m);
      if (!gmrf) throw Error(ErrorCode::InfeasibleParameters, "input must be a GMRF");
      const TreeReduction red = tree_gmrf_to_gff(*gmrf);
      std::ostringstream text;
      text << "c w";
      for (Eigen::Index i = 0; i < red.w.size(); ++i) text << ' ' << round_significant(red.w(i), 17);
      text << "\nc observed tail";
      for (int v : red.observed_tail) text << ' ' << v + 1;
      text << '\n';
      write_model(text, red.gff);
      if (conv_out.empty()) {
        std::cout << text.str();
      } else {
        auto out = open_out(conv_out);
        out << text.str();
      }
      return 0;
    }

    if (*val) {
      testing::set_schur_sign_fault(inject_fault);
      const ValidateResult res = validate_suite({val_seed, trials});
      if (!findings_path.empty()) {
        auto out = open_out(findings_path);
        out << res.findings.dump(2) << '\n';
      }
      if (res.vacuous) std::cerr << "warning: trials = 0, nothing was checked\n";
      std::cout << "checks=" << res.checks << " violations=" << res.violations << '\n';
      return res.violations > 0 ? kExitViolations : 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::StateSpaceExceeded ? kExitStateCap : kExitError;
  }
  return 0;
}
