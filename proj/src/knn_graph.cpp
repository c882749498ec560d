#include "pact/knn_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "json.hpp"
#include "pact/error.hpp"
#include "pact/kernels.hpp"

namespace pact {

KnnGraph::KnnGraph(std::size_t k, std::vector<ArtifactId> nodes, std::vector<std::string> types,
                   std::vector<KnnEdge> edges)
    : k_(k), nodes_(std::move(nodes)), types_(std::move(types)), edges_(std::move(edges)) {
  adjacency_.resize(nodes_.size());
  for (const auto& e : edges_) {
    adjacency_[e.u].emplace_back(e.v, e.similarity);
    adjacency_[e.v].emplace_back(e.u, e.similarity);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) position_.emplace(nodes_[i].value, i);
}

std::optional<std::size_t> KnnGraph::find(const ArtifactId& id) const {
  auto it = position_.find(id.value);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

std::vector<GraphNeighbor> KnnGraph::neighbors(const ArtifactId& id,
                                               const std::optional<std::set<std::string>>& types) const {
  const auto node = find(id);
  if (!node) throw Error(ErrorKind::UnknownNode, "'" + id.value + "' is not in the graph");
  std::vector<GraphNeighbor> out;
  for (const auto& [other, s] : adjacency_[*node]) {
    if (types && !types->contains(types_[other])) continue;
    out.push_back({nodes_[other], s});
  }
  std::sort(out.begin(), out.end(), [](const GraphNeighbor& a, const GraphNeighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  return out;
}

KnnGraph buildKnnGraph(const VectorIndex& index, std::size_t k) {
  const std::size_t n = index.size();
  if (k < 1) throw Error(ErrorKind::InvalidConfig, "k must be >= 1");
  if (k >= n) {
    throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " needs more than " +
                                          std::to_string(n) + " nodes");
  }
  if (!index.hasExact()) throw Error(ErrorKind::InvalidConfig, "KNN graph needs exact vectors");

  const auto top = kernels::active::topKNeighbors(index.vectors(), index.dim(), k, index.idRank());
  std::vector<KnnEdge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& s : top[u]) {
      const auto a = static_cast<std::uint32_t>(std::min<std::size_t>(u, s.row));
      const auto b = static_cast<std::uint32_t>(std::max<std::size_t>(u, s.row));
      edges.push_back({a, b, s.score});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const KnnEdge& x, const KnnEdge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const KnnEdge& x, const KnnEdge& y) { return x.u == y.u && x.v == y.v; }),
              edges.end());

  std::vector<ArtifactId> nodes;
  std::vector<std::string> types;
  for (std::size_t r = 0; r < n; ++r) {
    nodes.push_back(index.id(r));
    types.push_back(index.type(r));
  }
  return KnnGraph(k, std::move(nodes), std::move(types), std::move(edges));
}

Subgraph expand(const KnnGraph& graph, const std::vector<ArtifactId>& seeds, std::size_t hops) {
  std::vector<int> depth(graph.nodeCount(), -1);
  std::deque<std::size_t> frontier;
  Subgraph out;
  for (const auto& s : seeds) {
    const auto node = graph.find(s);
    if (!node) throw Error(ErrorKind::UnknownNode, "seed '" + s.value + "' is not in the graph");
    if (depth[*node] >= 0) continue;
    depth[*node] = 0;
    frontier.push_back(*node);
    out.nodes.push_back(s);
  }
  while (!frontier.empty()) {
    const std::size_t cur = frontier.front();
    frontier.pop_front();
    if (static_cast<std::size_t>(depth[cur]) == hops) continue;
    for (const auto& nb : graph.neighbors(graph.nodes()[cur])) {
      const std::size_t next = *graph.find(nb.id);
      if (depth[next] >= 0) continue;
      depth[next] = depth[cur] + 1;
      frontier.push_back(next);
      out.nodes.push_back(nb.id);
    }
  }
  for (const auto& e : graph.edges()) {
    if (depth[e.u] >= 0 && depth[e.v] >= 0) out.edges.emplace_back(graph.nodes()[e.u], graph.nodes()[e.v]);
  }
  return out;
}

void saveKnnGraph(const KnnGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write graph '" + path.string() + "'");
  out << nlohmann::json{{"k", graph.k()}, {"n", graph.nodeCount()}}.dump() << '\n';
  for (const auto& e : graph.edges()) {
    nlohmann::json line = {{"u", graph.nodes()[e.u].value},
                           {"v", graph.nodes()[e.v].value},
                           {"s", e.similarity}};
    out << line.dump() << '\n';
  }
}

KnnGraph loadKnnGraph(const std::filesystem::path& path, const VectorIndex& index) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open graph '" + path.string() + "'");
  std::string line;
  std::size_t lineNo = 0;
  std::size_t k = 0, n = 0;
  bool header = false;
  std::vector<KnnEdge> edges;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!header) {
        k = obj.at("k").get<std::size_t>();
        n = obj.at("n").get<std::size_t>();
        header = true;
        continue;
      }
      const ArtifactId u(obj.at("u").get<std::string>());
      const ArtifactId v(obj.at("v").get<std::string>());
      const auto pu = index.find(u), pv = index.find(v);
      if (!pu || !pv) {
        throw Error(ErrorKind::UnknownNode, "line " + std::to_string(lineNo) + ": edge endpoint not in index");
      }
      edges.push_back({static_cast<std::uint32_t>(std::min(*pu, *pv)),
                       static_cast<std::uint32_t>(std::max(*pu, *pv)), obj.at("s").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  if (!header) throw Error(ErrorKind::ParseError, "graph file has no header line");
  if (n != index.size()) {
    throw Error(ErrorKind::IncompatibleIndex, "graph has " + std::to_string(n) + " nodes, index " +
                                                  std::to_string(index.size()));
  }
  std::sort(edges.begin(), edges.end(), [](const KnnEdge& x, const KnnEdge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  std::vector<ArtifactId> nodes;
  std::vector<std::string> types;
  for (std::size_t r = 0; r < n; ++r) {
    nodes.push_back(index.id(r));
    types.push_back(index.type(r));
  }
  return KnnGraph(k, std::move(nodes), std::move(types), std::move(edges));
}

}  // namespace pact
