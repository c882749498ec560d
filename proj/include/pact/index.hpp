#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pact/artifact.hpp"
#include "pact/embedder.hpp"

namespace pact {

// Product-quantization codebook: m subspaces of D/m dims, ksub centroids each.
struct PqCodebook {
  std::size_t m = 0;
  std::size_t ksub = 0;
  std::size_t subDim = 0;
  std::vector<double> centroids;    // m x ksub x subDim
  std::vector<std::uint8_t> codes;  // n x m

  std::span<const double> centroid(std::size_t subspace, std::size_t c) const {
    return {centroids.data() + (subspace * ksub + c) * subDim, subDim};
  }
  EmbeddingVector decode(std::size_t row) const;
  // Per-subspace inner products of the query with every centroid (m x ksub).
  std::vector<double> lookupTable(std::span<const double> query) const;

  friend bool operator==(const PqCodebook&, const PqCodebook&) = default;
};

struct IndexHeader {
  std::size_t dim = 0;
  std::string encoder;  // BaseEncoder::describe()
  std::uint64_t encoderSeed = 0;
  std::uint64_t adapterChecksum = 0;

  friend bool operator==(const IndexHeader&, const IndexHeader&) = default;
};

struct SearchHit {
  ArtifactId id;
  std::size_t row = 0;
  double score = 0.0;
};

struct SearchOptions {
  std::size_t k = 10;
  std::optional<std::set<std::string>> types;
  // PQ mode: rescore the best 4k table-lookup candidates with exact vectors.
  bool rerank = true;
};

class VectorIndex {
 public:
  VectorIndex() = default;
  // Rows of `vectors` (row-major, n x header.dim) follow ids/types/texts.
  VectorIndex(IndexHeader header, std::vector<ArtifactId> ids, std::vector<std::string> types,
              std::vector<std::string> texts, std::vector<double> vectors);

  const IndexHeader& header() const { return header_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return header_.dim; }
  bool empty() const { return ids_.empty(); }

  const ArtifactId& id(std::size_t row) const { return ids_[row]; }
  const std::string& type(std::size_t row) const { return types_[row]; }
  const std::string& text(std::size_t row) const { return texts_[row]; }
  std::optional<std::size_t> find(const ArtifactId& id) const;

  bool hasExact() const { return !vectors_.empty(); }
  std::span<const double> vectors() const { return vectors_; }
  std::span<const double> vector(std::size_t row) const { return {vectors_.data() + row * dim(), dim()}; }
  // Position of each row in ascending-id order; ties in score break on this.
  std::span<const std::uint32_t> idRank() const { return idRank_; }

  bool isPq() const { return pq_.has_value(); }
  const PqCodebook& pq() const { return *pq_; }
  void setPq(PqCodebook codebook) { pq_ = std::move(codebook); }
  // Keeps codes only; rerank becomes unavailable.
  void dropExact();

  friend bool operator==(const VectorIndex&, const VectorIndex&) = default;

 private:
  IndexHeader header_;
  std::vector<ArtifactId> ids_;
  std::vector<std::string> types_;
  std::vector<std::string> texts_;
  std::vector<double> vectors_;
  std::vector<std::uint32_t> idRank_;
  std::unordered_map<std::string, std::size_t> position_;
  std::optional<PqCodebook> pq_;
};

// Context embedding of every artifact, in corpus order. `cosine` L2-normalizes
// each stored vector after the adapter.
VectorIndex buildExact(const Corpus& corpus, const BaseEncoder& encoder, const AdapterPair& adapters,
                       bool cosine = false);

// Per-subspace Lloyd k-means with seeded k-means++ init; empty clusters are
// moved to the point farthest from its centroid.
PqCodebook trainPq(const VectorIndex& index, std::size_t m, std::size_t ksub, std::size_t iters,
                   std::uint64_t seed);

// Mean over rows of the squared distance to the decoded vector.
double quantizationError(const VectorIndex& index, const PqCodebook& codebook);

// Exact: top-k by dot product. PQ: asymmetric table lookup, optionally
// reranked. Ties go to the smaller id. Throws EmptyIndex.
std::vector<SearchHit> searchTopK(const VectorIndex& index, std::span<const double> query,
                                  const SearchOptions& options);

void saveIndex(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex loadIndex(const std::filesystem::path& path);

// Non-empty when the index was built with different adapters.
std::optional<std::string> adapterMismatch(const VectorIndex& index, const AdapterPair& adapters);

}  // namespace pact
