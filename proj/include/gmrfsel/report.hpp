#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gmrfsel/linalg.hpp"

namespace gmrfsel {

enum class Solver { Exact, GreedyBudget, GreedyCover, Dp };

std::string_view solver_tag(Solver s);
Solver parse_solver_tag(std::string_view tag);

struct Guarantee {
  double factor = 1.0;
  std::string source;

  bool operator==(const Guarantee&) const = default;
};

struct SelectionReport {
  IndexSet selected;  // 0-based, sorted; includes the pin for a GFF
  double err_value = 0.0;
  Solver solver = Solver::Exact;
  std::optional<Guarantee> guarantee;
  int n = 0;
  double budget_or_alpha = 0.0;
  std::optional<double> wall_ms;
  nlohmann::ordered_json diagnostics;  // null or an object

  bool operator==(const SelectionReport&) const = default;
};

}  // namespace gmrfsel
