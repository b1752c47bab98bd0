#pragma once

#include <iosfwd>
#include <string>

#include "gmrfsel/model.hpp"
#include "gmrfsel/report.hpp"
#include "gmrfsel/tree_decomposition.hpp"

namespace gmrfsel {

// Matrix block: `n k`, then k support indices (1-based), then k rows of k entries.
SupportedMatrix parse_matrix(std::istream& in);
void write_matrix(std::ostream& out, const SupportedMatrix& m);

// `gff n m pin` with m lines `u v r`, or `gmrf` / `gmrf-cov` followed by a matrix block.
// Malformed text raises ParseError with a line number; a well-formed file
// describing an invalid model raises InvariantViolation.
Model parse_model(std::istream& in);
Model load_model(const std::string& path);
void write_model(std::ostream& out, const Model& model);

TreeDecomposition load_decomposition(const std::string& path, const Model& model);
void write_decomposition(std::ostream& out, int n, const std::vector<IndexSet>& bags,
                         const std::vector<std::pair<int, int>>& edges);

GraphEdges model_graph(const Model& model);

enum class ReportFormat { Json, Text };

// Vertices are printed 1-based and reals with 12 significant digits.
std::string emit_report(const SelectionReport& report, ReportFormat format);
SelectionReport parse_report(const std::string& json_text);

double round_significant(double value, int digits = 12);

}  // namespace gmrfsel
