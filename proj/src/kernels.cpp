#include "pact/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#ifdef PACT_HAVE_OPENMP
#include <omp.h>
#endif

namespace pact::kernels {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool ranksBefore(const Scored& a, const Scored& b, std::span<const std::uint32_t> idRank) {
  if (a.score != b.score) return a.score > b.score;
  return idRank[a.row] < idRank[b.row];
}

std::vector<Scored> selectTopK(std::vector<Scored> candidates, std::size_t k,
                               std::span<const std::uint32_t> idRank) {
  const auto cmp = [idRank](const Scored& a, const Scored& b) { return ranksBefore(a, b, idRank); };
  if (k < candidates.size()) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), cmp);
    candidates.resize(k);
  } else {
    std::sort(candidates.begin(), candidates.end(), cmp);
  }
  return candidates;
}

namespace {

inline double rowScore(std::span<const double> rows, std::size_t dim, std::size_t i,
                       std::span<const double> query) {
  return dot(rows.subspan(i * dim, dim), query);
}

inline double adcRow(std::span<const std::uint8_t> codes, std::size_t m, std::size_t ksub,
                     std::span<const double> table, std::size_t i) {
  const std::uint8_t* c = codes.data() + i * m;
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += table[j * ksub + c[j]];
  return s;
}

inline void nearestOne(std::span<const double> points, std::size_t dim,
                       std::span<const double> centroids, std::size_t i, std::uint32_t& best,
                       double& bestD) {
  const std::size_t k = centroids.size() / dim;
  const double* p = points.data() + i * dim;
  best = 0;
  bestD = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double* q = centroids.data() + c * dim;
    double d = 0.0;
    for (std::size_t t = 0; t < dim; ++t) {
      const double diff = p[t] - q[t];
      d += diff * diff;
    }
    if (d < bestD) {
      bestD = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
}

std::vector<Scored> neighborsOfRow(std::span<const double> rows, std::size_t dim, std::size_t n,
                                   std::size_t i, std::size_t k,
                                   std::span<const std::uint32_t> idRank) {
  std::vector<Scored> cand;
  cand.reserve(n - 1);
  const auto self = rows.subspan(i * dim, dim);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    cand.push_back({static_cast<std::uint32_t>(j), rowScore(rows, dim, j, self)});
  }
  return selectTopK(std::move(cand), k, idRank);
}

}  // namespace

namespace serial {

void scoreAll(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rowScore(rows, dim, i, query);
}

void adcScore(std::span<const std::uint8_t> codes, std::size_t m, std::size_t ksub,
              std::span<const double> table, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = adcRow(codes, m, ksub, table, i);
}

void assignNearest(std::span<const double> points, std::size_t dim,
                   std::span<const double> centroids, std::span<std::uint32_t> assignment,
                   std::span<double> distance2) {
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    nearestOne(points, dim, centroids, i, assignment[i], distance2[i]);
  }
}

void matVec(std::span<const double> matrix, std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot(matrix.subspan(r * d, d), x);
}

std::vector<std::vector<Scored>> topKNeighbors(std::span<const double> rows, std::size_t dim,
                                               std::size_t k,
                                               std::span<const std::uint32_t> idRank) {
  const std::size_t n = rows.size() / dim;
  std::vector<std::vector<Scored>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = neighborsOfRow(rows, dim, n, i, k, idRank);
  return out;
}

}  // namespace serial

namespace omp {

void scoreAll(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = rowScore(rows, dim, static_cast<std::size_t>(i), query);
  }
}

void adcScore(std::span<const std::uint8_t> codes, std::size_t m, std::size_t ksub,
              std::span<const double> table, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = adcRow(codes, m, ksub, table, static_cast<std::size_t>(i));
  }
}

void assignNearest(std::span<const double> points, std::size_t dim,
                   std::span<const double> centroids, std::span<std::uint32_t> assignment,
                   std::span<double> distance2) {
  const auto n = static_cast<std::ptrdiff_t>(assignment.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    nearestOne(points, dim, centroids, u, assignment[u], distance2[u]);
  }
}

void matVec(std::span<const double> matrix, std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto u = static_cast<std::size_t>(r);
    out[u] = dot(matrix.subspan(u * d, d), x);
  }
}

std::vector<std::vector<Scored>> topKNeighbors(std::span<const double> rows, std::size_t dim,
                                               std::size_t k,
                                               std::span<const std::uint32_t> idRank) {
  const std::size_t n = rows.size() / dim;
  std::vector<std::vector<Scored>> out(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = neighborsOfRow(rows, dim, n, u, k, idRank);
  }
  return out;
}

}  // namespace omp

}  // namespace pact::kernels
