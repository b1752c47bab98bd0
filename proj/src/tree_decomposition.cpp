#include <algorithm>
#include <istream>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "gmrfsel/tree_decomposition.hpp"

namespace gmrfsel {

IndexSet TreeDecomposition::separator(int node) const {
  const int p = parent[node];
  return p < 0 ? IndexSet{} : set_intersection(clusters[node], clusters[p]);
}

IndexSet TreeDecomposition::own(int node) const {
  const int p = parent[node];
  return p < 0 ? clusters[node] : set_difference(clusters[node], clusters[p]);
}

IndexSet TreeDecomposition::subtree_vertices(int node) const {
  IndexSet out = clusters[node];
  for (int c : children[node]) out = set_union(out, subtree_vertices(c));
  return out;
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidDecomposition, what); }

// Adjacency lists of an undirected graph on `count` nodes.
std::vector<std::vector<int>> adjacency(int count, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(count));
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& l : adj) std::sort(l.begin(), l.end());
  return adj;
}

// Rooted bag tree before normalization.
struct Rooted {
  std::vector<IndexSet> bags;
  std::vector<std::vector<int>> children;
  int root = 0;
};

int center_of(const std::vector<std::vector<int>>& adj) {
  const int m = static_cast<int>(adj.size());
  std::vector<int> degree(static_cast<size_t>(m));
  std::vector<int> layer;
  for (int i = 0; i < m; ++i) {
    degree[i] = static_cast<int>(adj[i].size());
    if (degree[i] <= 1) layer.push_back(i);
  }
  int remaining = m;
  while (remaining > 2) {
    std::vector<int> next;
    remaining -= static_cast<int>(layer.size());
    for (int v : layer)
      for (int u : adj[v])
        if (--degree[u] == 1) next.push_back(u);
    layer = std::move(next);
  }
  return *std::min_element(layer.begin(), layer.end());
}

std::vector<int> rooted_post_order(const Rooted& t) {
  std::vector<int> order;
  std::vector<std::pair<int, size_t>> stack{{t.root, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < t.children[node].size()) {
      const int c = t.children[node][next++];
      stack.push_back({c, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

TreeDecomposition finish(Rooted t, int n) {
  // Merge surplus children under copies of the parent bag, shallowest first.
  std::vector<int> height(t.bags.size(), 1);
  for (int node : rooted_post_order(t)) {
    using Item = std::pair<int, int>;  // (height, node)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int c : t.children[node]) heap.push({height[c], c});
    while (heap.size() > 2) {
      const auto a = heap.top();
      heap.pop();
      const auto b = heap.top();
      heap.pop();
      const int copy = static_cast<int>(t.bags.size());
      t.bags.push_back(t.bags[node]);
      t.children.push_back({a.second, b.second});
      height.push_back(std::max(a.first, b.first) + 1);
      heap.push({height.back(), copy});
    }
    t.children[node].clear();
    int h = 0;
    while (!heap.empty()) {
      h = std::max(h, heap.top().first);
      t.children[node].push_back(heap.top().second);
      heap.pop();
    }
    std::sort(t.children[node].begin(), t.children[node].end());
    height[node] = h + 1;
  }
  // A node with a single child gets an empty sibling leaf.
  const int before_pad = static_cast<int>(t.bags.size());
  for (int node = 0; node < before_pad; ++node) {
    if (t.children[node].size() != 1) continue;
    t.children[node].push_back(static_cast<int>(t.bags.size()));
    t.bags.emplace_back();
    t.children.emplace_back();
  }
  const int empty_root = static_cast<int>(t.bags.size());
  t.bags.emplace_back();
  t.children.push_back({t.root});

  TreeDecomposition td;
  const int m = static_cast<int>(t.bags.size());
  td.clusters = std::move(t.bags);
  td.children = std::move(t.children);
  td.root = empty_root;
  td.parent.assign(static_cast<size_t>(m), -1);
  for (int node = 0; node < m; ++node)
    for (int c : td.children[node]) td.parent[c] = node;

  // Iterative post-order from the root.
  std::vector<std::pair<int, size_t>> stack{{td.root, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < td.children[node].size()) {
      const int c = td.children[node][next++];
      stack.push_back({c, 0});
    } else {
      td.post_order.push_back(node);
      stack.pop_back();
    }
  }
  td.node_height.assign(static_cast<size_t>(m), 1);
  for (int node : td.post_order)
    for (int c : td.children[node]) td.node_height[node] = std::max(td.node_height[node], td.node_height[c] + 1);
  td.height = td.node_height[td.children[td.root][0]];

  td.width = 0;
  for (const auto& c : td.clusters) td.width = std::max(td.width, static_cast<int>(c.size()) - 1);
  td.top.assign(static_cast<size_t>(n), -1);
  for (int node : td.post_order)
    for (int v : td.own(node)) {
      td.top[v] = node;
      td.elimination_order.push_back(v);
    }
  return td;
}

void check_axioms(const std::vector<IndexSet>& bags, const std::vector<std::vector<int>>& adj, int n,
                  const GraphEdges& graph) {
  const int m = static_cast<int>(bags.size());
  // Bag tree connected.
  std::vector<int> seen(static_cast<size_t>(m), 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  for (size_t q = 0; q < queue.size(); ++q)
    for (int u : adj[queue[q]])
      if (!seen[u]) {
        seen[u] = 1;
        queue.push_back(u);
      }
  if (static_cast<int>(queue.size()) != m) invalid("bag tree is disconnected");

  for (const auto& bag : bags)
    for (int v : bag)
      if (v < 0 || v >= n) invalid("bag vertex " + std::to_string(v + 1) + " out of range");

  for (auto [u, v] : graph) {
    const bool covered =
        std::any_of(bags.begin(), bags.end(), [&](const IndexSet& b) { return contains(b, u) && contains(b, v); });
    if (!covered) invalid("edge " + std::to_string(u + 1) + "-" + std::to_string(v + 1) + " is in no bag");
  }
  // Running intersection: bags holding v induce a connected subtree.
  for (int v = 0; v < n; ++v) {
    std::vector<int> holding;
    for (int i = 0; i < m; ++i)
      if (contains(bags[i], v)) holding.push_back(i);
    if (holding.empty()) invalid("vertex " + std::to_string(v + 1) + " is in no bag");
    std::vector<int> mark(static_cast<size_t>(m), 0);
    std::vector<int> q{holding[0]};
    mark[holding[0]] = 1;
    for (size_t k = 0; k < q.size(); ++k)
      for (int u : adj[q[k]])
        if (!mark[u] && contains(bags[u], v)) {
          mark[u] = 1;
          q.push_back(u);
        }
    if (q.size() != holding.size())
      invalid("bags containing vertex " + std::to_string(v + 1) + " are not connected");
  }
}

}  // namespace

RawDecomposition parse_decomposition(std::istream& in) {
  RawDecomposition raw;
  std::string line;
  int lineno = 0;
  int declared_bags = -1;
  std::vector<int> filled;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    if (tok == "s") {
      std::string kind;
      if (declared_bags >= 0) parse_fail(lineno, "duplicate header");
      if (!(ls >> kind >> declared_bags >> raw.declared_bag_size >> raw.n) || kind != "td")
        parse_fail(lineno, "expected 's td m width+1 n'");
      if (declared_bags < 1 || raw.n < 1 || raw.declared_bag_size < 0) parse_fail(lineno, "bad header values");
      raw.bags.assign(static_cast<size_t>(declared_bags), {});
      filled.assign(static_cast<size_t>(declared_bags), 0);
      continue;
    }
    if (declared_bags < 0) parse_fail(lineno, "content before the header");
    if (tok == "b") {
      int id;
      if (!(ls >> id)) parse_fail(lineno, "missing bag id");
      if (id < 1 || id > declared_bags) parse_fail(lineno, "bag id out of range");
      if (filled[id - 1]) parse_fail(lineno, "bag " + std::to_string(id) + " given twice");
      filled[id - 1] = 1;
      std::vector<int> verts;
      int v;
      while (ls >> v) {
        if (v < 1 || v > raw.n) parse_fail(lineno, "vertex out of range");
        verts.push_back(v - 1);
      }
      if (!ls.eof()) parse_fail(lineno, "malformed vertex list");
      const size_t count = verts.size();
      raw.bags[id - 1] = make_index_set(std::move(verts));
      if (raw.bags[id - 1].size() != count) parse_fail(lineno, "repeated vertex in bag");
      continue;
    }
    std::istringstream es(line);
    int a, b;
    std::string extra;
    if (!(es >> a >> b) || (es >> extra)) parse_fail(lineno, "expected a bag edge 'i j'");
    if (a < 1 || b < 1 || a > declared_bags || b > declared_bags || a == b) parse_fail(lineno, "bad bag edge");
    raw.edges.emplace_back(a - 1, b - 1);
  }
  if (declared_bags < 0) parse_fail(lineno, "missing header");
  for (int i = 0; i < declared_bags; ++i)
    if (!filled[i]) throw Error(ErrorCode::ParseError, "bag " + std::to_string(i + 1) + " is missing");
  return raw;
}

TreeDecomposition normalize(const RawDecomposition& raw, int n, const GraphEdges& graph) {
  if (raw.n != n)
    throw Error(ErrorCode::WidthMismatch,
                "header declares " + std::to_string(raw.n) + " vertices, model has " + std::to_string(n));
  const int m = static_cast<int>(raw.bags.size());
  if (m < 1) invalid("no bags");
  int max_bag = 0;
  for (const auto& b : raw.bags) max_bag = std::max(max_bag, static_cast<int>(b.size()));
  if (max_bag != raw.declared_bag_size)
    throw Error(ErrorCode::WidthMismatch, "header declares bag size " + std::to_string(raw.declared_bag_size) +
                                              ", largest bag has " + std::to_string(max_bag));
  if (static_cast<int>(raw.edges.size()) != m - 1) invalid("bag graph must have m-1 edges");

  const auto adj = adjacency(m, raw.edges);
  check_axioms(raw.bags, adj, n, graph);

  Rooted t;
  t.bags = raw.bags;
  t.root = center_of(adj);
  t.children.resize(static_cast<size_t>(m));
  std::vector<int> seen(static_cast<size_t>(m), 0);
  std::vector<int> queue{t.root};
  seen[t.root] = 1;
  for (size_t q = 0; q < queue.size(); ++q)
    for (int u : adj[queue[q]])
      if (!seen[u]) {
        seen[u] = 1;
        t.children[queue[q]].push_back(u);
        queue.push_back(u);
      }
  TreeDecomposition td = finish(std::move(t), n);
  validate(td, n, graph);
  return td;
}

void validate(const TreeDecomposition& td, int n, const GraphEdges& graph) {
  const int m = td.size();
  if (td.root < 0 || td.root >= m) invalid("missing root");
  if (!td.clusters[td.root].empty()) invalid("root cluster is not empty");
  if (td.children[td.root].size() != 1) invalid("root cluster is not a leaf");
  for (int node = 0; node < m; ++node) {
    if (node == td.root) continue;
    const size_t c = td.children[node].size();
    if (c != 0 && c != 2) invalid("internal cluster without degree 3");
  }
  std::vector<std::pair<int, int>> edges;
  for (int node = 0; node < m; ++node)
    if (td.parent[node] >= 0) edges.emplace_back(node, td.parent[node]);
  check_axioms(td.clusters, adjacency(m, edges), n, graph);
  if (static_cast<int>(td.elimination_order.size()) != n) invalid("elimination order does not list every vertex");
}

TreeDecomposition parse_and_normalize(std::istream& in, int n, const GraphEdges& graph) {
  return normalize(parse_decomposition(in), n, graph);
}

namespace {

class TreeBalancer {
 public:
  TreeBalancer(int n, const GraphEdges& edges) : adj_(adjacency(n, edges)), in_c_(static_cast<size_t>(n), 0) {}

  // Decomposes the connected set `c` whose outside neighbours are `b`; returns the subtree root.
  int build(const IndexSet& c, const IndexSet& b) {
    if (b.size() > 2) throw Error(ErrorCode::InvariantViolation, "boundary larger than two");
    const int node = static_cast<int>(out_.bags.size());
    out_.bags.emplace_back();
    out_.children.emplace_back();
    if (c.size() + b.size() <= 4) {
      out_.bags[node] = set_union(c, b);
      return node;
    }
    mark(c, 1);
    const int s = centroid(c);
    IndexSet x{s};
    if (b.size() == 2) {
      const int u1 = attachment(b[0]);
      const int u2 = attachment(b[1]);
      x = make_index_set({s, median(u1, u2, s)});
    }
    out_.bags[node] = set_union(b, x);
    const IndexSet bag = out_.bags[node];
    mark(x, 0);
    std::vector<IndexSet> parts;
    for (int v : c) {
      if (!in_c_[v]) continue;
      parts.push_back(collect(v));
    }
    mark(c, 0);
    for (const auto& part : parts) {
      IndexSet boundary;
      for (int v : part)
        for (int u : adj_[v])
          if (contains(bag, u)) boundary.push_back(u);
      const int child = build(part, make_index_set(std::move(boundary)));
      out_.children[node].push_back(child);
    }
    return node;
  }

  Rooted take(int root) {
    out_.root = root;
    return std::move(out_);
  }

 private:
  void mark(const IndexSet& s, char value) {
    for (int v : s) in_c_[v] = value;
  }

  // Component of the marked vertices containing v; unmarks it.
  IndexSet collect(int v) {
    std::vector<int> comp{v};
    in_c_[v] = 0;
    for (size_t k = 0; k < comp.size(); ++k)
      for (int u : adj_[comp[k]])
        if (in_c_[u]) {
          in_c_[u] = 0;
          comp.push_back(u);
        }
    return make_index_set(std::move(comp));
  }

  // Neighbour of the outside vertex `b` inside the marked set (unique in a tree).
  int attachment(int b) const {
    for (int u : adj_[b])
      if (in_c_[u]) return u;
    throw Error(ErrorCode::InvariantViolation, "boundary vertex not attached");
  }

  // BFS parents within the marked set, rooted at `root`.
  std::vector<int> parents_from(int root) const {
    std::vector<int> par(adj_.size(), -2);
    par[root] = -1;
    std::vector<int> q{root};
    for (size_t k = 0; k < q.size(); ++k)
      for (int u : adj_[q[k]])
        if (in_c_[u] && par[u] == -2) {
          par[u] = q[k];
          q.push_back(u);
        }
    return par;
  }

  int centroid(const IndexSet& c) const {
    const int root = c[0];
    const auto par = parents_from(root);
    // Subtree sizes in reverse BFS order.
    std::vector<int> order{root};
    for (size_t k = 0; k < order.size(); ++k)
      for (int u : adj_[order[k]])
        if (in_c_[u] && par[u] == order[k]) order.push_back(u);
    std::vector<int> size(adj_.size(), 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if (par[*it] >= 0) size[par[*it]] += size[*it];
    const int total = static_cast<int>(c.size());
    int best = -1, best_score = total + 1;
    for (int v : c) {
      int worst = total - size[v];
      for (int u : adj_[v])
        if (in_c_[u] && par[u] == v) worst = std::max(worst, size[u]);
      if (worst < best_score || (worst == best_score && v < best)) {
        best = v;
        best_score = worst;
      }
    }
    return best;
  }

  // The vertex common to the three pairwise paths between u1, u2 and s.
  int median(int u1, int u2, int s) const {
    const auto par = parents_from(s);
    std::vector<char> on_path(adj_.size(), 0);
    for (int v = u1; v >= 0; v = par[v]) on_path[v] = 1;
    int v = u2;
    while (!on_path[v]) v = par[v];
    return v;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<char> in_c_;
  Rooted out_;
};

}  // namespace

TreeDecomposition balance_for_tree(int n, const GraphEdges& edges) {
  if (n < 1) throw Error(ErrorCode::InfeasibleParameters, "empty graph");
  if (static_cast<int>(edges.size()) != n - 1) throw Error(ErrorCode::NotATree, "a tree on n vertices has n-1 edges");
  for (auto [u, v] : edges)
    if (u < 0 || v < 0 || u >= n || v >= n || u == v) throw Error(ErrorCode::NotATree, "bad edge");
  const auto adj = adjacency(n, edges);
  std::vector<int> seen(static_cast<size_t>(n), 0);
  std::vector<int> q{0};
  seen[0] = 1;
  for (size_t k = 0; k < q.size(); ++k)
    for (int u : adj[q[k]])
      if (!seen[u]) {
        seen[u] = 1;
        q.push_back(u);
      }
  if (static_cast<int>(q.size()) != n) throw Error(ErrorCode::NotATree, "graph is disconnected");

  TreeBalancer balancer(n, edges);
  std::vector<int> all(static_cast<size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const int root = balancer.build(all, {});
  TreeDecomposition td = finish(balancer.take(root), n);
  validate(td, n, edges);
  return td;
}

}  // namespace gmrfsel
