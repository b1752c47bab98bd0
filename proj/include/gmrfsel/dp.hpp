#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gmrfsel/factorize.hpp"
#include "gmrfsel/model.hpp"
#include "gmrfsel/report.hpp"
#include "gmrfsel/tree_decomposition.hpp"

namespace gmrfsel {

enum class Rounding { Gff, Svd };

std::string_view rounding_tag(Rounding r);
Rounding parse_rounding_tag(std::string_view tag);

struct DpOptions {
  Rounding rounding = Rounding::Gff;
  double eps = 0.01;       // rounding resolution used inside the program
  double state_cap = 1e7;  // refuse runs whose state count would exceed this
  bool audit = false;      // keep (original, rounded) pairs for inspection
  size_t audit_limit = 5000;
};

struct DpStats {
  long p_states = 0;      // reachable inside-prior states over all separators
  long q_states = 0;      // distinct outside priors reached top-down
  long evaluations = 0;   // memoized message evaluations
  long table_entries = 0;
  double estimated_states = 0.0;
};

struct RoundingAudit {
  SupportedMatrix original;
  SupportedMatrix rounded;
};

// Message tables of one run. Entries are filled lazily from the root, so the
// table holds exactly the states reachable from the empty outside prior.
class MessageTable {
 public:
  MessageTable();
  ~MessageTable();
  MessageTable(MessageTable&&) noexcept;
  MessageTable& operator=(MessageTable&&) noexcept;

  const DpStats& stats() const;
  const std::vector<RoundingAudit>& audit() const;
  // Every rounded matrix the run stored, for net-membership checks.
  std::vector<SupportedMatrix> stored_matrices() const;
  // Minimum table value (sum of conditional variances) at the root over counts <= b.
  double best_value() const;

  struct Impl;
  std::unique_ptr<Impl> impl;
};

// Upper estimate of per-edge states: |P| |Q| 2^|separator| (b+1), maximized over edges.
double estimate_states(const Model& model, const TreeDecomposition& td, int budget, const DpOptions& options);

MessageTable run_dp(const Model& model, const TreeDecomposition& td, int budget, const DpOptions& options);

// Follows backpointers from the root; err is recomputed from the model.
SelectionReport extract_solution(const MessageTable& table, const Model& model, const TreeDecomposition& td,
                                 int budget);

struct DpSelectOptions {
  Rounding rounding = Rounding::Gff;
  double state_cap = 1e7;
};

struct EpsChoice {
  double eps = 0.0;
  double theoretical_log10 = 0.0;
  bool clamped = false;
};

EpsChoice dp_epsilon(Rounding rounding, double eps_prime, int width, int height);

SelectionReport dp_select(const Model& model, const TreeDecomposition& td, int budget, double eps_prime,
                          const DpSelectOptions& options = {});

namespace testing {
// Flips the sign of the Schur correction inside the program. Used only to
// check that the validation harness notices a broken solver.
void set_schur_sign_fault(bool on);
}  // namespace testing

}  // namespace gmrfsel
