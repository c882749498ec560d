#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pact/index.hpp"
#include "pact/knn_graph.hpp"

namespace pact {

struct SearchRequest {
  std::string query;
  std::size_t k = 10;
  std::optional<std::set<std::string>> types;
  std::size_t enrichHops = 0;
  bool rerank = true;
  // Normalize the query after the adapter; pair with a cosine-built index.
  bool cosine = false;
};

enum class Provenance { Direct, GraphEdge };

struct ResultHit {
  ArtifactId id;
  std::string type;
  std::string text;
  Provenance provenance = Provenance::Direct;
  std::optional<double> score;     // direct hits only
  std::optional<ArtifactId> from;  // graph hits: the direct hit they were reached from
};

struct SearchResult {
  std::vector<ResultHit> hits;
  double latencyMs = 0.0;

  nlohmann::json toJson() const;
  std::string pretty() const;
};

// Encode, rank, then optionally append KNN-graph neighbours of every direct
// hit. Graph hits are listed after direct hits, grouped by source hit, and
// never repeat an id.
SearchResult search(const SearchRequest& request, const VectorIndex& index,
                    const AdapterPair& adapters, const BaseEncoder& encoder,
                    const KnnGraph* graph = nullptr);

}  // namespace pact
