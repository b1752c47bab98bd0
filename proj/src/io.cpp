#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "gmrfsel/io.hpp"

namespace gmrfsel {

namespace {

struct Token {
  std::string text;
  int line = 0;
};

// Whitespace tokens with line numbers; lines starting with `c` or `#` are comments.
class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      bool first = true;
      while (ls >> tok) {
        if (first && (tok == "c" || tok[0] == '#')) break;
        first = false;
        toks_.push_back({tok, lineno});
      }
      last_line_ = lineno;
    }
  }

  bool done() const { return pos_ >= toks_.size(); }
  int line() const { return done() ? last_line_ : toks_[pos_].line; }

  const Token& next(const char* what) {
    if (done()) fail(std::string("unexpected end of input, expected ") + what);
    return toks_[pos_++];
  }

  std::string word(const char* what) { return next(what).text; }

  long integer(const char* what) {
    const Token& t = next(what);
    size_t used = 0;
    long v = 0;
    try {
      v = std::stol(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size()) fail_at(t.line, std::string("expected ") + what + ", got '" + t.text + "'");
    return v;
  }

  double real(const char* what) {
    const Token& t = next(what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size() || !std::isfinite(v))
      fail_at(t.line, std::string("expected ") + what + ", got '" + t.text + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(line(), what); }
  [[noreturn]] static void fail_at(int line, const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  int last_line_ = 0;
};

SupportedMatrix read_matrix(Tokens& t) {
  const int header_line = t.line();
  const long n = t.integer("ambient dimension");
  const long k = t.integer("support size");
  if (n < 1 || k < 0 || k > n) Tokens::fail_at(header_line, "need n >= 1 and 0 <= k <= n");
  std::vector<int> support;
  for (long i = 0; i < k; ++i) {
    const int line = t.line();
    const long v = t.integer("support index");
    if (v < 1 || v > n) Tokens::fail_at(line, "support index out of range");
    if (!support.empty() && v - 1 <= support.back()) Tokens::fail_at(line, "support must be strictly ascending");
    support.push_back(static_cast<int>(v - 1));
  }
  Eigen::MatrixXd block(k, k);
  for (long i = 0; i < k; ++i)
    for (long j = 0; j < k; ++j) block(i, j) = t.real("matrix entry");
  try {
    return SupportedMatrix(static_cast<int>(n), std::move(support), std::move(block));
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, e.what());
  }
}

void expect_end(Tokens& t) {
  if (!t.done()) t.fail("trailing content '" + t.word("") + "'");
}

Model read_gff(Tokens& t) {
  const int header_line = t.line();
  const long n = t.integer("vertex count");
  const long m = t.integer("edge count");
  const long pin = t.integer("pinned vertex");
  if (n < 1 || m < 0) Tokens::fail_at(header_line, "need n >= 1 and m >= 0");
  if (pin < 1 || pin > n) Tokens::fail_at(header_line, "pinned vertex out of range");
  std::vector<Edge> edges;
  for (long e = 0; e < m; ++e) {
    const int line = t.line();
    const long u = t.integer("edge endpoint");
    const long v = t.integer("edge endpoint");
    const double r = t.real("resistance");
    if (u < 1 || u > n || v < 1 || v > n) Tokens::fail_at(line, "edge endpoint out of range");
    if (!(r > 0.0)) Tokens::fail_at(line, "resistance must be positive, got " + std::to_string(r));
    edges.push_back({static_cast<int>(u - 1), static_cast<int>(v - 1), r});
  }
  expect_end(t);
  try {
    return GffModel(static_cast<int>(n), std::move(edges), static_cast<int>(pin - 1));
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, e.what());
  }
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SupportedMatrix parse_matrix(std::istream& in) {
  Tokens t(in);
  SupportedMatrix m = read_matrix(t);
  expect_end(t);
  return m;
}

void write_matrix(std::ostream& out, const SupportedMatrix& m) {
  out << m.ambient_dim() << ' ' << m.size() << '\n';
  for (int i = 0; i < m.size(); ++i) out << (i ? " " : "") << m.support()[i] + 1;
  out << '\n';
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) out << (j ? " " : "") << fmt17(m.block()(i, j));
    out << '\n';
  }
}

Model parse_model(std::istream& in) {
  Tokens t(in);
  const int line = t.line();
  const std::string kind = t.word("model header");
  if (kind == "gff") return read_gff(t);
  if (kind != "gmrf" && kind != "gmrf-cov")
    Tokens::fail_at(line, "unknown model kind '" + kind + "' (expected gff, gmrf or gmrf-cov)");
  const SupportedMatrix m = read_matrix(t);
  expect_end(t);
  if (m.size() != m.ambient_dim())
    throw Error(ErrorCode::InvariantViolation, "a model matrix must have full support");
  try {
    return kind == "gmrf" ? GmrfModel::from_precision(m.block()) : GmrfModel::from_covariance(m.block());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, e.what());
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_model(in);
}

void write_model(std::ostream& out, const Model& model) {
  if (const auto* gff = std::get_if<GffModel>(&model)) {
    out << "gff " << gff->n() << ' ' << gff->edges().size() << ' ' << gff->pin() + 1 << '\n';
    for (const auto& e : gff->edges()) out << e.u + 1 << ' ' << e.v + 1 << ' ' << fmt17(e.r) << '\n';
    return;
  }
  out << "gmrf\n";
  write_matrix(out, std::get<GmrfModel>(model).precision_matrix());
}

GraphEdges model_graph(const Model& model) {
  if (const auto* gff = std::get_if<GffModel>(&model)) return gff->graph();
  return std::get<GmrfModel>(model).graph();
}

TreeDecomposition load_decomposition(const std::string& path, const Model& model) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_and_normalize(in, model_size(model), model_graph(model));
}

void write_decomposition(std::ostream& out, int n, const std::vector<IndexSet>& bags,
                         const std::vector<std::pair<int, int>>& edges) {
  size_t width = 0;
  for (const auto& b : bags) width = std::max(width, b.size());
  out << "s td " << bags.size() << ' ' << width << ' ' << n << '\n';
  for (size_t i = 0; i < bags.size(); ++i) {
    out << "b " << i + 1;
    for (int v : bags[i]) out << ' ' << v + 1;
    out << '\n';
  }
  for (auto [a, b] : edges) out << a + 1 << ' ' << b + 1 << '\n';
}

double round_significant(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string emit_report(const SelectionReport& r, ReportFormat format) {
  if (format == ReportFormat::Text) {
    std::ostringstream os;
    os << "solver=" << solver_tag(r.solver) << " n=" << r.n << " budget_or_alpha=" << fmt12(r.budget_or_alpha)
       << " selected=";
    for (size_t i = 0; i < r.selected.size(); ++i) os << (i ? "," : "") << r.selected[i] + 1;
    if (r.selected.empty()) os << "-";
    os << " err=" << fmt12(r.err_value);
    if (r.guarantee) os << " guarantee=" << fmt12(r.guarantee->factor) << " (" << r.guarantee->source << ")";
    if (r.wall_ms) os << " wall_ms=" << fmt12(*r.wall_ms);
    return os.str();
  }
  nlohmann::ordered_json j;
  nlohmann::ordered_json sel = nlohmann::ordered_json::array();
  for (int v : r.selected) sel.push_back(v + 1);
  j["selected"] = std::move(sel);
  j["err"] = round_significant(r.err_value);
  j["solver"] = std::string(solver_tag(r.solver));
  if (r.guarantee)
    j["guarantee"] = {{"factor", round_significant(r.guarantee->factor)}, {"source", r.guarantee->source}};
  else
    j["guarantee"] = nullptr;
  j["n"] = r.n;
  j["budget_or_alpha"] = round_significant(r.budget_or_alpha);
  j["wall_ms"] = r.wall_ms ? nlohmann::ordered_json(round_significant(*r.wall_ms)) : nlohmann::ordered_json();
  j["diagnostics"] = r.diagnostics;
  return j.dump(2);
}

SelectionReport parse_report(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report is not valid JSON: ") + e.what());
  }
  try {
    SelectionReport r;
    std::vector<int> sel;
    for (const auto& v : j.at("selected")) sel.push_back(v.get<int>() - 1);
    r.selected = make_index_set(std::move(sel));
    r.err_value = j.at("err").get<double>();
    r.solver = parse_solver_tag(j.at("solver").get<std::string>());
    if (!j.at("guarantee").is_null())
      r.guarantee = Guarantee{j["guarantee"].at("factor").get<double>(), j["guarantee"].at("source").get<std::string>()};
    r.n = j.at("n").get<int>();
    r.budget_or_alpha = j.at("budget_or_alpha").get<double>();
    if (!j.at("wall_ms").is_null()) r.wall_ms = j["wall_ms"].get<double>();
    r.diagnostics = j.at("diagnostics");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

}  // namespace gmrfsel
