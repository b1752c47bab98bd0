#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>

#include "gmrfsel/dp.hpp"
#include "gmrfsel/rounding.hpp"

namespace gmrfsel {

std::string_view rounding_tag(Rounding r) { return r == Rounding::Gff ? "gff" : "svd"; }

Rounding parse_rounding_tag(std::string_view tag) {
  if (tag == "gff") return Rounding::Gff;
  if (tag == "svd") return Rounding::Svd;
  throw Error(ErrorCode::ParseError, "unknown rounding '" + std::string(tag) + "'");
}

namespace testing {
namespace {
std::atomic<bool> schur_fault{false};
}
void set_schur_sign_fault(bool on) { schur_fault = on; }
}  // namespace testing

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Mask = std::uint32_t;

struct Rounder {
  Rounding mode = Rounding::Gff;
  std::optional<GffGrid> gff;
  std::optional<SvdGrid> svd;

  RoundResult round(const SupportedMatrix& p) const {
    if (mode == Rounding::Gff) {
      RoundKey key = gff_round_key(p, *gff);
      SupportedMatrix m = gff_from_key(key, p.ambient_dim(), p.support(), *gff);
      return {std::move(key), std::move(m)};
    }
    return svd_round_keyed(p, *svd);
  }
};

struct Node {
  IndexSet cluster;
  IndexSet delta;
  IndexSet gamma;
  std::vector<int> delta_pos;  // positions inside `cluster`
  std::vector<int> gamma_pos;
  std::vector<int> kids;
  std::vector<std::vector<int>> kid_delta_pos;  // child separator, as positions inside `cluster`
  Eigen::MatrixXd factor;                       // over `cluster`
  int pin_delta_bit = -1;
  int pin_gamma_bit = -1;
};

struct Combo {
  Mask l_mask = 0;
  int child_mask[2] = {0, 0};
  int child_state[2] = {-1, -1};
  int out_state = -1;
};

struct Entry {
  double value = kInf;
  int combo = -1;
  int child_q[2] = {-1, -1};
};

struct Context {
  bool valid = false;
  IndexSet free_delta;  // separator minus the observed part
  std::map<RoundKey, int> p_ids;
  std::vector<SupportedMatrix> p_mats;
  std::map<std::pair<int, int>, int> state_ids;
  std::vector<std::pair<int, int>> states;  // (inside prior id, count)
  std::vector<std::vector<int>> by_count;
  std::vector<Combo> combos;
  std::map<RoundKey, int> q_ids;
  std::vector<SupportedMatrix> q_mats;
  std::unordered_map<int, std::vector<Entry>> evals;
  std::map<std::tuple<int, Mask, int, int>, int> child_q;
};

std::vector<int> pick(const std::vector<int>& items, Mask mask) {
  std::vector<int> out;
  for (size_t b = 0; b < items.size(); ++b)
    if (mask >> b & 1u) out.push_back(items[b]);
  return out;
}

// Schur complement of `full` onto `keep` eliminating `drop` (local positions).
Eigen::MatrixXd schur(const Eigen::MatrixXd& full, const std::vector<int>& keep, const std::vector<int>& drop) {
  const auto k = static_cast<Eigen::Index>(keep.size());
  const auto d = static_cast<Eigen::Index>(drop.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = full(keep[a], keep[b]);
  if (d == 0 || k == 0) return out;
  Eigen::MatrixXd e(d, d), c(d, k);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) e(a, b) = full(drop[a], drop[b]);
    for (Eigen::Index b = 0; b < k; ++b) c(a, b) = full(drop[a], keep[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(e);
  const double scale = e.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success ||
      llt.matrixLLT().diagonal().cwiseAbs2().minCoeff() <= kRankTol * std::max(scale, 1e-300))
    throw Error(ErrorCode::NumericFailure, "a marginal inside the program is singular");
  const Eigen::MatrixXd half = llt.matrixL().solve(c);
  if (testing::schur_fault.load())
    out.noalias() += half.transpose() * half;
  else
    out.noalias() -= half.transpose() * half;
  return 0.5 * (out + out.transpose());
}

}  // namespace

struct MessageTable::Impl {
  const Model* model = nullptr;
  const TreeDecomposition* td = nullptr;
  int n = 0;
  int budget = 0;
  int pin = -1;
  DpOptions options;
  Rounder rounder;
  std::vector<Node> nodes;
  std::vector<std::vector<Context>> ctx;
  DpStats stats;
  std::vector<RoundingAudit> audit;
  int top = -1;
  int root_q = -1;
  int best_state = -1;
  double best = kInf;

  int weight(const std::vector<int>& ambient) const {
    int w = 0;
    for (int v : ambient) w += v == pin ? 0 : 1;
    return w;
  }

  RoundResult round(const SupportedMatrix& p) {
    RoundResult r = rounder.round(p);
    if (options.audit && audit.size() < options.audit_limit) audit.push_back({p, r.matrix});
    return r;
  }

  void add_into(Eigen::MatrixXd& full, const Node& node, const SupportedMatrix& m) const {
    const auto& sup = m.support();
    std::vector<int> pos(sup.size());
    for (size_t a = 0; a < sup.size(); ++a)
      pos[a] = static_cast<int>(std::lower_bound(node.cluster.begin(), node.cluster.end(), sup[a]) -
                                node.cluster.begin());
    for (size_t a = 0; a < sup.size(); ++a)
      for (size_t b = 0; b < sup.size(); ++b)
        full(pos[a], pos[b]) += m.block()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }

  void check_cap() const {
    if (static_cast<double>(stats.p_states + stats.table_entries) > options.state_cap)
      throw Error(ErrorCode::StateSpaceExceeded,
                  "state count passed the cap of " + std::to_string(static_cast<long long>(options.state_cap)));
  }

  void build_nodes(const ClusterFactors& factors) {
    const auto& t = *td;
    nodes.resize(static_cast<size_t>(t.size()));
    for (int i = 0; i < t.size(); ++i) {
      Node& nd = nodes[i];
      nd.cluster = t.clusters[i];
      nd.delta = t.separator(i);
      nd.gamma = t.own(i);
      auto pos_of = [&](const IndexSet& s) {
        std::vector<int> out;
        for (int v : s)
          out.push_back(static_cast<int>(std::lower_bound(nd.cluster.begin(), nd.cluster.end(), v) -
                                         nd.cluster.begin()));
        return out;
      };
      nd.delta_pos = pos_of(nd.delta);
      nd.gamma_pos = pos_of(nd.gamma);
      nd.kids = t.children[i];
      for (int k : nd.kids) nd.kid_delta_pos.push_back(pos_of(t.separator(k)));
      nd.factor = factors.factors[i].block();
      for (size_t b = 0; b < nd.delta.size(); ++b)
        if (nd.delta[b] == pin) nd.pin_delta_bit = static_cast<int>(b);
      for (size_t b = 0; b < nd.gamma.size(); ++b)
        if (nd.gamma[b] == pin) nd.pin_gamma_bit = static_cast<int>(b);
      if (nd.delta.size() > 20 || nd.gamma.size() > 20)
        throw Error(ErrorCode::StateSpaceExceeded, "cluster too wide for subset enumeration");
    }
  }

  // Child mask of S_t = O & Delta_t, with O given as a position mask over the cluster.
  static int child_mask(const std::vector<int>& kid_pos, const std::vector<char>& observed) {
    int m = 0;
    for (size_t b = 0; b < kid_pos.size(); ++b)
      if (observed[kid_pos[b]]) m |= 1 << b;
    return m;
  }

  std::vector<char> observed_positions(const Node& nd, Mask s_mask, Mask l_mask) const {
    std::vector<char> obs(nd.cluster.size(), 0);
    for (size_t b = 0; b < nd.delta_pos.size(); ++b)
      if (s_mask >> b & 1u) obs[nd.delta_pos[b]] = 1;
    for (size_t b = 0; b < nd.gamma_pos.size(); ++b)
      if (l_mask >> b & 1u) obs[nd.gamma_pos[b]] = 1;
    return obs;
  }

  // Bottom-up pass: reachable inside priors per (node, observed separator part).
  void build_inside(int i) {
    const Node& nd = nodes[i];
    const Mask full_s = (Mask{1} << nd.delta.size()) - 1;
    const Mask full_l = (Mask{1} << nd.gamma.size()) - 1;
    ctx[i].assign(static_cast<size_t>(full_s) + 1, Context{});
    for (Mask s = 0; s <= full_s; ++s) {
      if (nd.pin_delta_bit >= 0 && !(s >> nd.pin_delta_bit & 1u)) continue;
      Context& c = ctx[i][s];
      c.valid = true;
      c.free_delta = pick(nd.delta, full_s & ~s);
      std::vector<int> keep;
      for (size_t b = 0; b < nd.delta_pos.size(); ++b)
        if (!(s >> b & 1u)) keep.push_back(nd.delta_pos[b]);
      const int w_s = weight(pick(nd.delta, s));
      for (Mask l = 0; l <= full_l; ++l) {
        if (nd.pin_gamma_bit >= 0 && !(l >> nd.pin_gamma_bit & 1u)) continue;
        const int w_o = w_s + weight(pick(nd.gamma, l));
        if (w_o > budget) continue;
        const auto observed = observed_positions(nd, s, l);
        std::vector<int> drop;
        for (size_t b = 0; b < nd.gamma_pos.size(); ++b)
          if (!(l >> b & 1u)) drop.push_back(nd.gamma_pos[b]);

        Combo combo;
        combo.l_mask = l;
        std::vector<const Context*> kid_ctx;
        std::vector<int> kid_w;
        for (size_t t = 0; t < nd.kids.size(); ++t) {
          combo.child_mask[t] = child_mask(nd.kid_delta_pos[t], observed);
          kid_ctx.push_back(&ctx[nd.kids[t]][combo.child_mask[t]]);
          kid_w.push_back(weight(pick(nodes[nd.kids[t]].delta, static_cast<Mask>(combo.child_mask[t]))));
        }
        auto emit = [&](int c0, int c1) {
          Eigen::MatrixXd full = nd.factor;
          int count = w_o;
          for (size_t t = 0; t < nd.kids.size(); ++t) {
            const auto& [pid, cnt] = kid_ctx[t]->states[t == 0 ? c0 : c1];
            add_into(full, nd, kid_ctx[t]->p_mats[pid]);
            count += cnt - kid_w[t];
          }
          if (count > budget) return;
          combo.child_state[0] = c0;
          combo.child_state[1] = c1;
          const SupportedMatrix p(n, c.free_delta, schur(full, keep, drop));
          RoundResult r = round(p);
          auto [it, fresh] = c.p_ids.try_emplace(std::move(r.key), static_cast<int>(c.p_mats.size()));
          if (fresh) c.p_mats.push_back(std::move(r.matrix));
          auto [sit, new_state] = c.state_ids.try_emplace({it->second, count}, static_cast<int>(c.states.size()));
          if (new_state) {
            c.states.push_back({it->second, count});
            ++stats.p_states;
          }
          combo.out_state = sit->second;
          c.combos.push_back(combo);
        };
        if (nd.kids.empty()) {
          emit(-1, -1);
        } else {
          const Context& k0 = *kid_ctx[0];
          const Context& k1 = *kid_ctx[1];
          for (size_t a = 0; a < k0.states.size(); ++a) {
            if (w_o + k0.states[a].second - kid_w[0] > budget) continue;
            for (size_t b = 0; b < k1.states.size(); ++b) emit(static_cast<int>(a), static_cast<int>(b));
          }
        }
        check_cap();
      }
    }
  }

  int intern_q(Context& c, RoundResult r) {
    auto [it, fresh] = c.q_ids.try_emplace(std::move(r.key), static_cast<int>(c.q_mats.size()));
    if (fresh) {
      c.q_mats.push_back(std::move(r.matrix));
      ++stats.q_states;
    }
    return it->second;
  }

  // Outside prior of child t given the parent's prior, observations and the sibling's inside prior.
  int child_prior(int i, Mask s, int q, const Combo& combo, int t) {
    Context& c = ctx[i][s];
    const Node& nd = nodes[i];
    const int sib = 1 - t;
    const auto cache_key = std::make_tuple(q, combo.l_mask, t, combo.child_state[sib]);
    if (auto it = c.child_q.find(cache_key); it != c.child_q.end()) return it->second;

    Context& kc = ctx[nd.kids[t]][combo.child_mask[t]];
    const auto observed = observed_positions(nd, s, combo.l_mask);
    const auto& kid_pos = nd.kid_delta_pos[t];
    std::vector<int> keep, drop;
    for (size_t b = 0; b < kid_pos.size(); ++b)
      if (!observed[kid_pos[b]]) keep.push_back(kid_pos[b]);
    for (size_t p = 0; p < nd.cluster.size(); ++p)
      if (!observed[p] && std::find(keep.begin(), keep.end(), static_cast<int>(p)) == keep.end())
        drop.push_back(static_cast<int>(p));
    int id;
    if (kc.free_delta.empty()) {
      id = intern_q(kc, rounder.round(SupportedMatrix(n)));
    } else {
      Eigen::MatrixXd full = nd.factor;
      add_into(full, nd, c.q_mats[q]);
      const Context& sc = ctx[nd.kids[sib]][combo.child_mask[sib]];
      add_into(full, nd, sc.p_mats[sc.states[combo.child_state[sib]].first]);
      id = intern_q(kc, round(SupportedMatrix(n, kc.free_delta, schur(full, keep, drop))));
    }
    c.child_q.emplace(cache_key, id);
    return id;
  }

  const std::vector<Entry>& eval(int i, Mask s, int q) {
    Context& c = ctx[i][s];
    if (auto it = c.evals.find(q); it != c.evals.end()) return it->second;
    const Node& nd = nodes[i];
    std::vector<Entry> out(c.states.size());
    for (size_t ci = 0; ci < c.combos.size(); ++ci) {
      const Combo& combo = c.combos[ci];
      double total = 0.0;
      int kid_q[2] = {-1, -1};
      Eigen::MatrixXd full = nd.factor;
      add_into(full, nd, c.q_mats[q]);
      bool feasible = true;
      for (size_t t = 0; t < nd.kids.size() && feasible; ++t) {
        kid_q[t] = child_prior(i, s, q, combo, static_cast<int>(t));
        const auto& kid_entries = eval(nd.kids[t], static_cast<Mask>(combo.child_mask[t]), kid_q[t]);
        const double v = kid_entries[combo.child_state[t]].value;
        if (!std::isfinite(v)) feasible = false;
        total += v;
        const Context& kc = ctx[nd.kids[t]][combo.child_mask[t]];
        add_into(full, nd, kc.p_mats[kc.states[combo.child_state[t]].first]);
      }
      if (!feasible) continue;
      // Conditional variances of this cluster's own unobserved vertices.
      const auto observed = observed_positions(nd, s, combo.l_mask);
      std::vector<int> alive;
      for (size_t p = 0; p < nd.cluster.size(); ++p)
        if (!observed[p]) alive.push_back(static_cast<int>(p));
      if (!alive.empty()) {
        const Eigen::MatrixXd block = principal(full, alive);
        Eigen::VectorXd diag;
        if (!detail::inverse_diagonal(block, diag))
          throw Error(ErrorCode::NumericFailure, "conditional precision inside the program is singular");
        for (size_t b = 0; b < nd.gamma_pos.size(); ++b) {
          if (combo.l_mask >> b & 1u) continue;
          const auto at = std::lower_bound(alive.begin(), alive.end(), nd.gamma_pos[b]) - alive.begin();
          total += diag(at);
        }
      }
      Entry& e = out[combo.out_state];
      if (total < e.value) {
        e.value = total;
        e.combo = static_cast<int>(ci);
        e.child_q[0] = kid_q[0];
        e.child_q[1] = kid_q[1];
      }
    }
    ++stats.evaluations;
    for (const auto& e : out)
      if (std::isfinite(e.value)) ++stats.table_entries;
    check_cap();
    return c.evals.emplace(q, std::move(out)).first->second;
  }

  void collect(int i, Mask s, int q, int state, IndexSet& selected) const {
    const Context& c = ctx[i][s];
    const Entry& e = c.evals.at(q)[state];
    if (e.combo < 0) throw Error(ErrorCode::EmptyTable, "missing backpointer");
    const Combo& combo = c.combos[e.combo];
    const Node& nd = nodes[i];
    for (int v : pick(nd.gamma, combo.l_mask)) selected.push_back(v);
    for (size_t t = 0; t < nd.kids.size(); ++t)
      collect(nd.kids[t], static_cast<Mask>(combo.child_mask[t]), e.child_q[t], combo.child_state[t], selected);
  }
};

MessageTable::MessageTable() : impl(std::make_unique<Impl>()) {}
MessageTable::~MessageTable() = default;
MessageTable::MessageTable(MessageTable&&) noexcept = default;
MessageTable& MessageTable::operator=(MessageTable&&) noexcept = default;

const DpStats& MessageTable::stats() const { return impl->stats; }
const std::vector<RoundingAudit>& MessageTable::audit() const { return impl->audit; }
double MessageTable::best_value() const { return impl->best; }

std::vector<SupportedMatrix> MessageTable::stored_matrices() const {
  std::vector<SupportedMatrix> out;
  for (const auto& per_node : impl->ctx)
    for (const auto& c : per_node) {
      out.insert(out.end(), c.p_mats.begin(), c.p_mats.end());
      out.insert(out.end(), c.q_mats.begin(), c.q_mats.end());
    }
  return out;
}

namespace {

double log_binomial_prefix(int pool, int budget) {
  // log of sum_{k <= budget} C(pool, k)
  double total = 0.0, term = 1.0;
  for (int k = 0; k <= std::min(pool, budget); ++k) {
    if (k > 0) term = term * (pool - k + 1) / k;
    total += term;
  }
  return std::log(total);
}

double gff_net_log_size(const GffGrid& grid, int sep) {
  const double entries = sep * (sep + 1) / 2.0;
  return entries * std::log(static_cast<double>(grid.top) + 2.0);
}

}  // namespace

double estimate_states(const Model& model, const TreeDecomposition& td, int budget, const DpOptions& options) {
  const int n = model_size(model);
  std::optional<GffGrid> grid;
  if (options.rounding == Rounding::Gff) {
    const auto* gff = std::get_if<GffModel>(&model);
    if (!gff) throw Error(ErrorCode::InfeasibleParameters, "gff rounding needs a GFF model");
    grid = GffGrid::for_model(*gff, options.eps);
  }
  double worst = 0.0;
  for (int i = 0; i < td.size(); ++i) {
    if (i == td.root) continue;
    const IndexSet sep = td.separator(i);
    const int inside = static_cast<int>(td.subtree_vertices(i).size());
    const int s = static_cast<int>(sep.size());
    const double net = grid ? gff_net_log_size(*grid, s) : kInf;
    const double p = std::min(net, log_binomial_prefix(inside - s, budget));
    const double q = std::min(net, log_binomial_prefix(n - inside, budget));
    const double log_states = p + q + s * std::log(2.0) + std::log(budget + 1.0);
    worst = std::max(worst, std::exp(std::min(log_states, 700.0)));
  }
  return worst;
}

MessageTable run_dp(const Model& model, const TreeDecomposition& td, int budget, const DpOptions& options) {
  if (budget < 0) throw Error(ErrorCode::InfeasibleParameters, "budget must be non-negative");
  if (!(options.eps > 0.0)) throw Error(ErrorCode::InfeasibleParameters, "eps must be positive");
  const int n = model_size(model);
  validate(td, n, std::holds_alternative<GffModel>(model) ? std::get<GffModel>(model).graph()
                                                         : std::get<GmrfModel>(model).graph());
  MessageTable table;
  auto& im = *table.impl;
  im.model = &model;
  im.td = &td;
  im.n = n;
  im.budget = budget;
  im.options = options;
  im.pin = free_vertex(model).value_or(-1);
  im.stats.estimated_states = estimate_states(model, td, budget, options);
  if (im.stats.estimated_states > options.state_cap)
    throw Error(ErrorCode::StateSpaceExceeded,
                "estimated " + std::to_string(im.stats.estimated_states) + " states per edge exceeds the cap of " +
                    std::to_string(options.state_cap) + " (width " + std::to_string(td.width) + ", height " +
                    std::to_string(td.height) + ", budget " + std::to_string(budget) + ")");

  im.rounder.mode = options.rounding;
  ClusterFactors factors;
  if (options.rounding == Rounding::Gff) {
    im.rounder.gff = GffGrid::for_model(std::get<GffModel>(model), options.eps);
    factors = factorize(model, td, FactorMode::Gff);
  } else {
    if (!std::holds_alternative<GmrfModel>(model))
      throw Error(ErrorCode::InfeasibleParameters, "svd rounding needs a positive definite GMRF");
    const Eigen::MatrixXd& lambda = model_precision(model);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lambda, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(n - 1);
    // Rounded priors may drift by e^{eps} per level above the exact range.
    const double slack = (td.height + 1) * options.eps;
    im.rounder.svd = SvdGrid(lmin / td.size() * std::exp(-slack), lmax * std::exp(slack), options.eps, lmin / lmax,
                             td.size(), n);
    factors = factorize(model, td, FactorMode::General);
  }
  im.build_nodes(factors);
  im.ctx.resize(static_cast<size_t>(td.size()));
  for (int i : td.post_order)
    if (i != td.root) im.build_inside(i);

  im.top = td.children[td.root][0];
  Context& top_ctx = im.ctx[im.top][0];
  im.root_q = im.intern_q(top_ctx, im.rounder.round(SupportedMatrix(n)));
  const auto& entries = im.eval(im.top, 0, im.root_q);
  for (size_t st = 0; st < entries.size(); ++st) {
    const double v = entries[st].value;
    if (!std::isfinite(v)) continue;
    const int cnt = top_ctx.states[st].second;
    if (v < im.best || (v == im.best && cnt < top_ctx.states[im.best_state].second)) {
      im.best = v;
      im.best_state = static_cast<int>(st);
    }
  }
  return table;
}

SelectionReport extract_solution(const MessageTable& table, const Model& model, const TreeDecomposition& td,
                                 int budget) {
  const auto& im = *table.impl;
  if (im.best_state < 0) throw Error(ErrorCode::EmptyTable, "no finite message at the root");
  (void)td;
  IndexSet selected;
  im.collect(im.top, 0, im.root_q, im.best_state, selected);
  selected = scored_set(model, make_index_set(std::move(selected)));
  if (budget_cost(model, selected) > budget)
    throw Error(ErrorCode::InvariantViolation, "extracted set exceeds the budget");
  SelectionReport rep;
  rep.selected = selected;
  rep.err_value = err(model, selected);
  rep.solver = Solver::Dp;
  rep.n = model_size(model);
  rep.budget_or_alpha = budget;
  rep.diagnostics = nlohmann::ordered_json::object();
  rep.diagnostics["table_err"] = im.best / rep.n;
  rep.diagnostics["p_states"] = im.stats.p_states;
  rep.diagnostics["q_states"] = im.stats.q_states;
  rep.diagnostics["evaluations"] = im.stats.evaluations;
  rep.diagnostics["estimated_states"] = im.stats.estimated_states;
  return rep;
}

EpsChoice dp_epsilon(Rounding rounding, double eps_prime, int width, int height) {
  if (!(eps_prime > 0.0 && eps_prime < 1.0)) throw Error(ErrorCode::InfeasibleParameters, "eps' must lie in (0, 1)");
  EpsChoice out;
  if (rounding == Rounding::Svd) {
    out.eps = eps_prime / (4.0 * (2.0 * height + 1.0));
    out.theoretical_log10 = std::log10(out.eps);
    return out;
  }
  out.theoretical_log10 = std::log10(eps_prime / 4.0) - 4.0 * width * height * std::log10(3.0);
  constexpr double kFloor = 1e-12;
  if (out.theoretical_log10 < std::log10(kFloor)) {
    out.eps = kFloor;
    out.clamped = true;
  } else {
    out.eps = std::pow(10.0, out.theoretical_log10);
  }
  return out;
}

SelectionReport dp_select(const Model& model, const TreeDecomposition& td, int budget, double eps_prime,
                          const DpSelectOptions& options) {
  const EpsChoice eps = dp_epsilon(options.rounding, eps_prime, td.width, td.height);
  DpOptions dp;
  dp.rounding = options.rounding;
  dp.eps = eps.eps;
  dp.state_cap = options.state_cap;
  const MessageTable table = run_dp(model, td, budget, dp);
  SelectionReport rep = extract_solution(table, model, td, budget);
  rep.guarantee = Guarantee{1.0 + eps_prime, "tree-decomposition dynamic program, 1+eps'"};
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  diag["rounding"] = std::string(rounding_tag(options.rounding));
  diag["eps_prime"] = eps_prime;
  diag["eps"] = eps.eps;
  diag["eps_theoretical_log10"] = eps.theoretical_log10;
  diag["width"] = td.width;
  diag["height"] = td.height;
  diag["clusters"] = td.size();
  if (eps.clamped)
    diag["warning"] = "theoretical eps is below machine precision; clamped to 1e-12";
  for (auto& [k, v] : rep.diagnostics.items()) diag[k] = v;
  rep.diagnostics = std::move(diag);
  return rep;
}

}  // namespace gmrfsel
