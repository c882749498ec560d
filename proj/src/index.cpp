#include "pact/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "pact/error.hpp"
#include "pact/kernels.hpp"
#include "pact/rng.hpp"

namespace pact {

namespace {

constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint32_t kModeExact = 0;
constexpr std::uint32_t kModePq = 1;

}  // namespace

EmbeddingVector PqCodebook::decode(std::size_t row) const {
  EmbeddingVector out;
  out.reserve(m * subDim);
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = centroid(j, codes[row * m + j]);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<double> PqCodebook::lookupTable(std::span<const double> query) const {
  std::vector<double> table(m * ksub);
  for (std::size_t j = 0; j < m; ++j) {
    const auto sub = query.subspan(j * subDim, subDim);
    for (std::size_t c = 0; c < ksub; ++c) table[j * ksub + c] = kernels::dot(sub, centroid(j, c));
  }
  return table;
}

VectorIndex::VectorIndex(IndexHeader header, std::vector<ArtifactId> ids,
                         std::vector<std::string> types, std::vector<std::string> texts,
                         std::vector<double> vectors)
    : header_(std::move(header)),
      ids_(std::move(ids)),
      types_(std::move(types)),
      texts_(std::move(texts)),
      vectors_(std::move(vectors)) {
  if (types_.size() != ids_.size() || texts_.size() != ids_.size()) {
    throw Error(ErrorKind::InvalidConfig, "index columns have different lengths");
  }
  if (!vectors_.empty() && vectors_.size() != ids_.size() * header_.dim) {
    throw Error(ErrorKind::DimMismatch, "index vectors do not match n x D");
  }
  std::vector<std::uint32_t> order(ids_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids_[a] < ids_[b]; });
  idRank_.resize(ids_.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r > 0 && ids_[order[r]] == ids_[order[r - 1]]) {
      throw Error(ErrorKind::InvalidArtifact, "duplicate id '" + ids_[order[r]].value + "' in index");
    }
    idRank_[order[r]] = static_cast<std::uint32_t>(r);
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) position_.emplace(ids_[i].value, i);
}

std::optional<std::size_t> VectorIndex::find(const ArtifactId& id) const {
  auto it = position_.find(id.value);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

void VectorIndex::dropExact() {
  if (!pq_) throw Error(ErrorKind::InvalidConfig, "cannot drop exact vectors without a PQ codebook");
  vectors_.clear();
  vectors_.shrink_to_fit();
}

VectorIndex buildExact(const Corpus& corpus, const BaseEncoder& encoder, const AdapterPair& adapters,
                       bool cosine) {
  if (corpus.artifacts.empty()) throw Error(ErrorKind::EmptyInput, "cannot index an empty corpus");
  if (adapters.dim() != encoder.dim()) {
    throw Error(ErrorKind::DimMismatch, "adapters are " + std::to_string(adapters.dim()) +
                                            "-dimensional, encoder " + std::to_string(encoder.dim()));
  }
  const std::size_t d = encoder.dim();
  std::vector<ArtifactId> ids;
  std::vector<std::string> types, texts;
  std::vector<double> vectors;
  vectors.reserve(corpus.artifacts.size() * d);
  for (const auto& a : corpus.artifacts) {
    EmbeddingVector v;
    try {
      v = encodeContext(a, encoder, adapters);
      if (cosine) normalize(v);
    } catch (const Error& e) {
      throw Error(e.kind(), "artifact '" + a.id.value + "': " + e.detail());
    }
    ids.push_back(a.id);
    types.push_back(a.type);
    texts.push_back(a.composedText);
    vectors.insert(vectors.end(), v.begin(), v.end());
  }
  IndexHeader header{d, encoder.describe(), encoder.hashConfig().seed, adapters.checksum()};
  return VectorIndex(std::move(header), std::move(ids), std::move(types), std::move(texts),
                     std::move(vectors));
}

namespace {

// k-means on one subspace; returns ksub x subDim centroids.
std::vector<double> kmeans(const std::vector<double>& points, std::size_t n, std::size_t dim,
                           std::size_t ksub, std::size_t iters, Rng& rng) {
  std::vector<double> centroids(ksub * dim);
  auto copyPoint = [&](std::size_t c, std::size_t p) {
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(p * dim), dim,
                centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };
  auto dist2 = [&](std::size_t p, std::size_t c) {
    double s = 0.0;
    for (std::size_t t = 0; t < dim; ++t) {
      const double diff = points[p * dim + t] - centroids[c * dim + t];
      s += diff * diff;
    }
    return s;
  };

  // k-means++ seeding.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  copyPoint(0, rng.below(n));
  for (std::size_t c = 1; c < ksub; ++c) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      nearest[p] = std::min(nearest[p], dist2(p, c - 1));
      total += nearest[p];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = n;
      for (std::size_t p = 0; p < n; ++p) {
        acc += nearest[p];
        if (acc > target && nearest[p] > 0.0) {
          chosen = p;
          break;
        }
      }
      if (chosen == n) {
        // Rounding ran past the end; take the last point with positive weight.
        for (std::size_t p = n; p-- > 0;) {
          if (nearest[p] > 0.0) {
            chosen = p;
            break;
          }
        }
      }
    }
    copyPoint(c, chosen);
  }

  std::vector<std::uint32_t> assign(n);
  std::vector<double> d2(n);
  std::vector<double> sums(ksub * dim);
  std::vector<std::size_t> counts(ksub);
  for (std::size_t it = 0; it < iters; ++it) {
    kernels::active::assignNearest(points, dim, centroids, assign, d2);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      ++counts[assign[p]];
      for (std::size_t t = 0; t < dim; ++t) sums[assign[p] * dim + t] += points[p * dim + t];
    }
    for (std::size_t c = 0; c < ksub; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < dim; ++t) {
        centroids[c * dim + t] = sums[c * dim + t] / static_cast<double>(counts[c]);
      }
    }
    for (std::size_t c = 0; c < ksub; ++c) {
      if (counts[c] != 0) continue;
      const auto far = static_cast<std::size_t>(
          std::distance(d2.begin(), std::max_element(d2.begin(), d2.end())));
      copyPoint(c, far);
      d2[far] = 0.0;
    }
  }
  return centroids;
}

}  // namespace

PqCodebook trainPq(const VectorIndex& index, std::size_t m, std::size_t ksub, std::size_t iters,
                   std::uint64_t seed) {
  const std::size_t d = index.dim();
  const std::size_t n = index.size();
  if (m == 0 || d % m != 0) {
    throw Error(ErrorKind::BadSubspaceCount,
                std::to_string(m) + " subspaces do not divide dimension " + std::to_string(d));
  }
  if (ksub == 0 || ksub > 256) throw Error(ErrorKind::InvalidConfig, "ksub must be in [1, 256]");
  if (n < ksub) {
    throw Error(ErrorKind::TooFewVectors,
                std::to_string(n) + " vectors cannot train " + std::to_string(ksub) + " centroids");
  }
  if (!index.hasExact()) throw Error(ErrorKind::InvalidConfig, "PQ training needs exact vectors");

  PqCodebook cb;
  cb.m = m;
  cb.ksub = ksub;
  cb.subDim = d / m;
  cb.centroids.resize(m * ksub * cb.subDim);
  cb.codes.resize(n * m);

  const auto all = index.vectors();
  std::vector<double> sub(n * cb.subDim);
  std::vector<std::uint32_t> assign(n);
  std::vector<double> d2(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t p = 0; p < n; ++p) {
      std::copy_n(all.begin() + static_cast<std::ptrdiff_t>(p * d + j * cb.subDim), cb.subDim,
                  sub.begin() + static_cast<std::ptrdiff_t>(p * cb.subDim));
    }
    Rng rng(mixSeed(seed, j));
    const auto cent = kmeans(sub, n, cb.subDim, ksub, iters, rng);
    std::copy(cent.begin(), cent.end(),
              cb.centroids.begin() + static_cast<std::ptrdiff_t>(j * ksub * cb.subDim));
    kernels::active::assignNearest(sub, cb.subDim, cent, assign, d2);
    for (std::size_t p = 0; p < n; ++p) cb.codes[p * m + j] = static_cast<std::uint8_t>(assign[p]);
  }
  return cb;
}

double quantizationError(const VectorIndex& index, const PqCodebook& codebook) {
  if (index.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto x = index.vector(r);
    const auto y = codebook.decode(r);
    for (std::size_t t = 0; t < x.size(); ++t) total += (x[t] - y[t]) * (x[t] - y[t]);
  }
  return total / static_cast<double>(index.size());
}

std::vector<SearchHit> searchTopK(const VectorIndex& index, std::span<const double> query,
                                  const SearchOptions& options) {
  if (index.empty()) throw Error(ErrorKind::EmptyIndex, "search on an empty index");
  if (options.k < 1) throw Error(ErrorKind::InvalidConfig, "k must be >= 1");
  if (query.size() != index.dim()) {
    throw Error(ErrorKind::DimMismatch, "query is " + std::to_string(query.size()) +
                                            "-dimensional, index " + std::to_string(index.dim()));
  }
  const std::size_t n = index.size();
  std::vector<double> scores(n);
  const bool pq = index.isPq();
  if (pq) {
    const auto& cb = index.pq();
    kernels::active::adcScore(cb.codes, cb.m, cb.ksub, cb.lookupTable(query), scores);
  } else {
    kernels::active::scoreAll(index.vectors(), index.dim(), query, scores);
  }

  std::vector<kernels::Scored> cand;
  cand.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (options.types && !options.types->contains(index.type(i))) continue;
    cand.push_back({static_cast<std::uint32_t>(i), scores[i]});
  }

  std::vector<kernels::Scored> top;
  if (pq && options.rerank) {
    if (!index.hasExact()) {
      throw Error(ErrorKind::InvalidConfig, "rerank needs exact vectors, which were dropped");
    }
    auto shortlist = kernels::selectTopK(std::move(cand), 4 * options.k, index.idRank());
    for (auto& s : shortlist) s.score = kernels::dot(index.vector(s.row), query);
    top = kernels::selectTopK(std::move(shortlist), options.k, index.idRank());
  } else {
    top = kernels::selectTopK(std::move(cand), options.k, index.idRank());
  }

  std::vector<SearchHit> hits;
  hits.reserve(top.size());
  for (const auto& s : top) hits.push_back({index.id(s.row), s.row, s.score});
  return hits;
}

void saveIndex(const VectorIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write index '" + path.string() + "'");
  const auto& h = index.header();
  out.write("PACTIDX1", 8);
  detail::writeU32(out, kIndexVersion);
  detail::writeU32(out, static_cast<std::uint32_t>(h.dim));
  detail::writeU64(out, index.size());
  detail::writeU32(out, index.isPq() ? kModePq : kModeExact);
  detail::writeU32(out, index.isPq() ? static_cast<std::uint32_t>(index.pq().m) : 0);
  detail::writeU32(out, index.isPq() ? static_cast<std::uint32_t>(index.pq().ksub) : 0);
  detail::writeU64(out, h.encoderSeed);
  detail::writeU64(out, h.adapterChecksum);
  detail::writeU32(out, index.hasExact() ? 1 : 0);
  detail::writeString(out, h.encoder);
  for (std::size_t r = 0; r < index.size(); ++r) {
    detail::writeString(out, index.id(r).value);
    detail::writeString(out, index.type(r));
    detail::writeString(out, index.text(r));
  }
  for (double x : index.vectors()) detail::writeF64(out, x);
  if (index.isPq()) {
    const auto& cb = index.pq();
    for (double x : cb.centroids) detail::writeF64(out, x);
    out.write(reinterpret_cast<const char*>(cb.codes.data()),
              static_cast<std::streamsize>(cb.codes.size()));
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing index '" + path.string() + "'");
}

VectorIndex loadIndex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open index '" + path.string() + "'");
  detail::expectMagic(in, "PACTIDX1");
  const std::uint32_t version = detail::readU32(in);
  if (version != kIndexVersion) {
    throw Error(ErrorKind::IncompatibleIndex, "index version " + std::to_string(version) +
                                                  " is not supported");
  }
  IndexHeader h;
  h.dim = detail::readU32(in);
  const std::uint64_t n = detail::readU64(in);
  const std::uint32_t mode = detail::readU32(in);
  const std::size_t m = detail::readU32(in);
  const std::size_t ksub = detail::readU32(in);
  h.encoderSeed = detail::readU64(in);
  h.adapterChecksum = detail::readU64(in);
  const bool hasExact = detail::readU32(in) != 0;
  h.encoder = detail::readString(in);
  if (mode != kModeExact && mode != kModePq) throw Error(ErrorKind::IncompatibleIndex, "unknown index mode");

  std::vector<ArtifactId> ids;
  std::vector<std::string> types, texts;
  for (std::uint64_t r = 0; r < n; ++r) {
    ids.emplace_back(detail::readString(in));
    types.push_back(detail::readString(in));
    texts.push_back(detail::readString(in));
  }
  std::vector<double> vectors;
  if (hasExact) {
    vectors.resize(n * h.dim);
    for (double& x : vectors) x = detail::readF64(in);
  }
  std::optional<PqCodebook> cb;
  if (mode == kModePq) {
    if (m == 0 || h.dim % m != 0) throw Error(ErrorKind::IncompatibleIndex, "bad PQ subspace count");
    cb.emplace();
    cb->m = m;
    cb->ksub = ksub;
    cb->subDim = h.dim / m;
    cb->centroids.resize(m * ksub * cb->subDim);
    for (double& x : cb->centroids) x = detail::readF64(in);
    cb->codes.resize(n * m);
    detail::readExact(in, reinterpret_cast<char*>(cb->codes.data()), cb->codes.size());
  }
  VectorIndex index(std::move(h), std::move(ids), std::move(types), std::move(texts), std::move(vectors));
  if (cb) index.setPq(std::move(*cb));
  return index;
}

std::optional<std::string> adapterMismatch(const VectorIndex& index, const AdapterPair& adapters) {
  if (index.header().adapterChecksum == adapters.checksum()) return std::nullopt;
  return "index was built with adapters of checksum " + std::to_string(index.header().adapterChecksum) +
         " but the supplied adapters have checksum " + std::to_string(adapters.checksum());
}

}  // namespace pact
