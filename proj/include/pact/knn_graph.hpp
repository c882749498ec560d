#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pact/index.hpp"

namespace pact {

struct GraphNeighbor {
  ArtifactId id;
  double similarity = 0.0;
};

struct KnnEdge {
  std::uint32_t u = 0;  // u < v, positions in the node list
  std::uint32_t v = 0;
  double similarity = 0.0;

  friend bool operator==(const KnnEdge&, const KnnEdge&) = default;
};

// Undirected union-of-top-k graph over the rows of an index.
class KnnGraph {
 public:
  KnnGraph() = default;
  KnnGraph(std::size_t k, std::vector<ArtifactId> nodes, std::vector<std::string> types,
           std::vector<KnnEdge> edges);

  std::size_t k() const { return k_; }
  std::size_t nodeCount() const { return nodes_.size(); }
  const std::vector<ArtifactId>& nodes() const { return nodes_; }
  const std::vector<KnnEdge>& edges() const { return edges_; }
  std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
  std::optional<std::size_t> find(const ArtifactId& id) const;
  const std::string& type(std::size_t node) const { return types_[node]; }

  // Sorted by similarity descending, then id. Throws UnknownNode.
  std::vector<GraphNeighbor> neighbors(const ArtifactId& id,
                                       const std::optional<std::set<std::string>>& types = {}) const;

 private:
  std::size_t k_ = 0;
  std::vector<ArtifactId> nodes_;
  std::vector<std::string> types_;
  std::vector<KnnEdge> edges_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency_;
  std::unordered_map<std::string, std::size_t> position_;
};

// Edge {u, v} iff v is in u's top-k or u is in v's. Throws KTooLarge.
KnnGraph buildKnnGraph(const VectorIndex& index, std::size_t k);

struct Subgraph {
  std::vector<ArtifactId> nodes;  // breadth-first discovery order
  std::vector<std::pair<ArtifactId, ArtifactId>> edges;
};

// Breadth-first closure of `seeds` to `hops` hops, with the induced edges.
Subgraph expand(const KnnGraph& graph, const std::vector<ArtifactId>& seeds, std::size_t hops);

// JSONL: header {"k":k,"n":n} then {"u","v","s"} per edge.
void saveKnnGraph(const KnnGraph& graph, const std::filesystem::path& path);
// Node order and types come from the index the graph was built over.
KnnGraph loadKnnGraph(const std::filesystem::path& path, const VectorIndex& index);

}  // namespace pact
