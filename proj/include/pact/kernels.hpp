#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// variant with identical results: parallelism is only ever across independent
// outputs, and every individual sum is accumulated sequentially in index
// order, so the two produce bitwise-equal values.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pact::kernels {

// Sequential left-to-right dot product. All scores in the library go through
// this so that oracles can reproduce them bit for bit.
double dot(std::span<const double> a, std::span<const double> b);

// Ranking order used everywhere: higher score first, then lower id rank.
struct Scored {
  std::uint32_t row;
  double score;
};
bool ranksBefore(const Scored& a, const Scored& b, std::span<const std::uint32_t> idRank);

// Top-k of `candidates` under ranksBefore, best first.
std::vector<Scored> selectTopK(std::vector<Scored> candidates, std::size_t k,
                               std::span<const std::uint32_t> idRank);

namespace serial {

// out[i] = rows[i] . query for row-major rows (n x dim).
void scoreAll(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);
// out[i] = sum_j table[j * ksub + codes[i * m + j]].
void adcScore(std::span<const std::uint8_t> codes, std::size_t m, std::size_t ksub,
              std::span<const double> table, std::span<double> out);
// Nearest centroid by squared L2, lowest centroid index on ties.
void assignNearest(std::span<const double> points, std::size_t dim,
                   std::span<const double> centroids, std::span<std::uint32_t> assignment,
                   std::span<double> distance2);
// out = M x for a row-major square M.
void matVec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);
// Per row, the k other rows with the highest dot product, best first.
std::vector<std::vector<Scored>> topKNeighbors(std::span<const double> rows, std::size_t dim,
                                               std::size_t k,
                                               std::span<const std::uint32_t> idRank);

}  // namespace serial

// Same contracts as serial::, parallel over independent outputs.
namespace omp {

void scoreAll(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);
void adcScore(std::span<const std::uint8_t> codes, std::size_t m, std::size_t ksub,
              std::span<const double> table, std::span<double> out);
void assignNearest(std::span<const double> points, std::size_t dim,
                   std::span<const double> centroids, std::span<std::uint32_t> assignment,
                   std::span<double> distance2);
void matVec(std::span<const double> matrix, std::span<const double> x, std::span<double> out);
std::vector<std::vector<Scored>> topKNeighbors(std::span<const double> rows, std::size_t dim,
                                               std::size_t k,
                                               std::span<const std::uint32_t> idRank);

}  // namespace omp

// Kernels used by the library; the OpenMP variants when built with OpenMP.
#ifdef PACT_HAVE_OPENMP
namespace active = omp;
#else
namespace active = serial;
#endif

}  // namespace pact::kernels
