#pragma once

#include "gmrfsel/model.hpp"
#include "gmrfsel/report.hpp"

namespace gmrfsel {

// Cover feasibility test shared by every solver: err <= alpha up to rounding noise.
bool within_alpha(double err_value, double alpha);

// Greedy selection. On a GFF the objective is supermodular and the report
// carries the corresponding certificate; on a general GMRF no certificate is
// attached and every candidate is re-evaluated each round.
SelectionReport greedy_budget(const Model& model, int budget);
SelectionReport greedy_cover(const Model& model, double alpha);

double greedy_budget_factor();
double greedy_cover_factor(const GffModel& gff);

struct ExactOptions {
  int max_n = 20;
  int threads = 0;  // 0: GMRF_SELECT_THREADS or the hardware default
};

// Exhaustive search. Ties are broken lexicographically on the sorted set.
SelectionReport exact_budget(const Model& model, int budget, const ExactOptions& options = {});
SelectionReport exact_cover(const Model& model, double alpha, const ExactOptions& options = {});

int configured_threads(int requested);

}  // namespace gmrfsel
