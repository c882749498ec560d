#include "pact/search.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "pact/error.hpp"

namespace pact {

nlohmann::json SearchResult::toJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : hits) {
    nlohmann::json j = {{"id", h.id.value},
                        {"type", h.type},
                        {"text", h.text},
                        {"provenance", h.provenance == Provenance::Direct ? "direct" : "graph-edge"}};
    j["score"] = h.score ? nlohmann::json(*h.score) : nlohmann::json(nullptr);
    if (h.from) j["from"] = h.from->value;
    arr.push_back(std::move(j));
  }
  return {{"hits", arr}, {"latency_ms", latencyMs}};
}

std::string SearchResult::pretty() const {
  std::ostringstream os;
  std::size_t rank = 0;
  for (const auto& h : hits) {
    char score[32] = "-";
    if (h.score) std::snprintf(score, sizeof score, "%.4f", *h.score);
    os << ++rank << ". [" << h.type << "] " << h.id.value << "  " << score;
    if (h.from) os << "  (via " << h.from->value << ")";
    os << "\n    " << h.text << "\n";
  }
  os << "(" << hits.size() << " hits, " << latencyMs << " ms)\n";
  return os.str();
}

SearchResult search(const SearchRequest& request, const VectorIndex& index,
                    const AdapterPair& adapters, const BaseEncoder& encoder, const KnnGraph* graph) {
  const auto start = std::chrono::steady_clock::now();
  if (request.query.empty()) throw Error(ErrorKind::EmptyText, "empty query");
  if (request.enrichHops > 0 && graph == nullptr) {
    throw Error(ErrorKind::GraphRequired, "graph enrichment requested without a KNN graph");
  }
  EmbeddingVector q = encodeQuery(request.query, encoder, adapters);
  if (request.cosine) normalize(q);

  SearchOptions opts;
  opts.k = request.k;
  opts.types = request.types;
  opts.rerank = request.rerank;
  const auto direct = searchTopK(index, q, opts);

  SearchResult result;
  std::unordered_set<std::string> seen;
  for (const auto& h : direct) {
    seen.insert(h.id.value);
    result.hits.push_back({h.id, index.type(h.row), index.text(h.row), Provenance::Direct, h.score, {}});
  }
  if (request.enrichHops > 0) {
    for (const auto& h : direct) {
      const auto reached = expand(*graph, {h.id}, request.enrichHops);
      for (const auto& id : reached.nodes) {
        if (!seen.insert(id.value).second) continue;
        const std::size_t row = *index.find(id);
        result.hits.push_back({id, index.type(row), index.text(row), Provenance::GraphEdge, {}, h.id});
      }
    }
  }
  result.latencyMs =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace pact
