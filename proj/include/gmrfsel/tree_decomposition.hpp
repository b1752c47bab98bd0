#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "gmrfsel/linalg.hpp"

namespace gmrfsel {

using GraphEdges = std::vector<std::pair<int, int>>;

// A decomposition as read from a file: bags and undirected bag edges, 0-based.
struct RawDecomposition {
  int n = 0;               // vertex count from the header
  int declared_bag_size = 0;  // width + 1 from the header
  std::vector<IndexSet> bags;
  std::vector<std::pair<int, int>> edges;
};

// Rooted, normalized decomposition. The root is an empty cluster with exactly
// one child; every other internal node has exactly two children.
struct TreeDecomposition {
  std::vector<IndexSet> clusters;
  std::vector<int> parent;  // -1 at the root
  std::vector<std::vector<int>> children;
  int root = -1;
  int width = 0;
  int height = 0;  // message height of the edge into the root; leaves have height 1
  std::vector<int> node_height;
  std::vector<int> elimination_order;
  std::vector<int> top;  // per vertex, the cluster nearest the root that contains it
  std::vector<int> post_order;  // children before parents, root last

  int size() const { return static_cast<int>(clusters.size()); }
  // Separator with the parent cluster (empty at the root).
  IndexSet separator(int node) const;
  // Vertices whose top cluster is `node`.
  IndexSet own(int node) const;
  // Union of clusters in the subtree below `node`.
  IndexSet subtree_vertices(int node) const;
};

// Reads the text format: `s td m w+1 n`, bag lines `b i v...`, edge lines `i j`.
RawDecomposition parse_decomposition(std::istream& in);

// Checks the axioms against the graph and brings the decomposition to normal form.
TreeDecomposition normalize(const RawDecomposition& raw, int n, const GraphEdges& graph);

// Throws InvalidDecomposition if `td` misses an edge, breaks running
// intersection, or is not in normal form.
void validate(const TreeDecomposition& td, int n, const GraphEdges& graph);

// Shallow decomposition of a tree with bags of at most four vertices.
TreeDecomposition balance_for_tree(int n, const GraphEdges& edges);

TreeDecomposition parse_and_normalize(std::istream& in, int n, const GraphEdges& graph);

}  // namespace gmrfsel
