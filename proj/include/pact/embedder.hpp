#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pact/artifact.hpp"

namespace pact {

using EmbeddingVector = std::vector<double>;

// Square row-major matrix.
struct Matrix {
  std::size_t dim = 0;
  std::vector<double> values;

  static Matrix identity(std::size_t dim);
  static Matrix zeros(std::size_t dim);

  double& operator()(std::size_t r, std::size_t c) { return values[r * dim + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * dim + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }

  EmbeddingVector apply(std::span<const double> x) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct FeatureHashConfig {
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  std::vector<int> wordNgrams{1};
  std::vector<int> charNgrams{3};

  friend bool operator==(const FeatureHashConfig&, const FeatureHashConfig&) = default;
};

// Lowercased maximal runs of alphanumeric characters. Bytes >= 0x80 count as
// alphanumeric so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// Deterministic text -> vector map. Either feature hashing with sign hashing
// or a lookup table of vectors computed elsewhere. Char n-grams are taken
// over "<word>" so word boundaries count.
class BaseEncoder {
 public:
  enum class Kind { FeatureHash, Precomputed };

  static BaseEncoder featureHash(FeatureHashConfig config);
  static BaseEncoder precomputed(std::size_t dim, std::map<std::string, EmbeddingVector> table);
  // JSONL lines {"id": key, "vector": [...]}.
  static BaseEncoder loadPrecomputed(const std::filesystem::path& path);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const FeatureHashConfig& hashConfig() const { return hash_; }

  // Hashing: tokenizes `text`. Precomputed: `text` is the table key.
  EmbeddingVector encodeText(std::string_view text) const;
  // Hashing: composed text. Precomputed: looked up by artifact id.
  EmbeddingVector encodeArtifact(const Artifact& artifact) const;

  // Compact text form ("hash:dim=256;seed=0;word=1;char=3" or "precomputed:dim=...").
  std::string describe() const;
  static BaseEncoder fromDescription(const std::string& description);

 private:
  Kind kind_ = Kind::FeatureHash;
  std::size_t dim_ = 0;
  FeatureHashConfig hash_;
  std::map<std::string, EmbeddingVector> table_;
};

EmbeddingVector encodeBase(std::string_view text, const BaseEncoder& encoder);

struct AdapterPair {
  Matrix query;
  Matrix context;

  static AdapterPair identity(std::size_t dim);
  std::size_t dim() const { return query.dim; }
  // FNV-1a over the little-endian bytes of both matrices.
  std::uint64_t checksum() const;

  friend bool operator==(const AdapterPair&, const AdapterPair&) = default;
};

// contextMatrix * encodeBase(composed text); no renormalization.
EmbeddingVector encodeContext(const Artifact& artifact, const BaseEncoder& encoder,
                              const AdapterPair& adapters);
EmbeddingVector encodeQuery(std::string_view query, const BaseEncoder& encoder,
                            const AdapterPair& adapters);

// Raw dot product. Throws DimMismatch.
double similarity(std::span<const double> a, std::span<const double> b);

void normalize(EmbeddingVector& v);

// "PACTADPT", u32 version, u32 D, query then context as row-major f64.
void saveAdapters(const AdapterPair& adapters, const std::filesystem::path& path);
AdapterPair loadAdapters(const std::filesystem::path& path);

}  // namespace pact
