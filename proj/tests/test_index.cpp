#include <algorithm>
#include <cmath>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "pact/error.hpp"
#include "pact/index.hpp"
#include "pact/kernels.hpp"

using namespace pact;

namespace {

// Full sort of all dot products with the id tie-break.
std::vector<std::pair<std::string, double>> bruteForce(const VectorIndex& index, const std::vector<double>& q,
                                                       std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t r = 0; r < index.size(); ++r) {
    double s = 0.0;
    const auto v = index.vector(r);
    for (std::size_t t = 0; t < v.size(); ++t) s += v[t] * q[t];
    all.emplace_back(index.id(r).value, s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

ErrorKind kindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("exact search equals brute force") {
  Rng rng(1);
  const std::size_t dim = 16;
  auto index = test::indexFromRows(test::gaussianRows(rng, 2000, dim), dim, &rng);
  for (int q = 0; q < 50; ++q) {
    const auto query = test::gaussianRows(rng, 1, dim);
    const std::size_t k = 1 + rng.below(30);
    const auto hits = searchTopK(index, query, {k, std::nullopt, true});
    const auto oracle = bruteForce(index, query, k);
    REQUIRE(hits.size() == oracle.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].id.value == oracle[i].first);
      CHECK(hits[i].score == oracle[i].second);
    }
  }
}

TEST_CASE("ties break on ascending id and results never increase") {
  Rng rng(2);
  std::vector<double> rows;
  for (int i = 0; i < 50; ++i) {
    const double v = static_cast<double>(rng.below(3));
    rows.insert(rows.end(), {v, 1.0});
  }
  const auto index = test::indexFromRows(rows, 2, &rng);
  const std::vector<double> q{1.0, 0.0};
  const auto hits = searchTopK(index, q, {50, std::nullopt, true});
  for (std::size_t i = 1; i < hits.size(); ++i) {
    CHECK(hits[i - 1].score >= hits[i].score);
    if (hits[i - 1].score == hits[i].score) CHECK(hits[i - 1].id < hits[i].id);
  }
}

TEST_CASE("single entry, type filter and argument errors") {
  const auto one = test::indexFromRows({1.0, 2.0}, 2);
  const std::vector<double> q{0.5, 0.5};
  CHECK(searchTopK(one, q, {10, std::nullopt, true}).size() == 1);

  Rng rng(3);
  std::vector<std::string> types;
  for (int i = 0; i < 100; ++i) types.push_back(i % 3 == 0 ? "oncall_team" : "code_path");
  const auto idx = test::indexFromRows(test::gaussianRows(rng, 100, 4), 4, nullptr, types);
  const std::vector<double> q4{1, 0, 0, 0};
  SearchOptions opts{10, std::set<std::string>{"oncall_team"}, true};
  for (const auto& h : searchTopK(idx, q4, opts)) CHECK(idx.type(h.row) == "oncall_team");

  CHECK(kindOf([&] { searchTopK(VectorIndex{}, q4, {}); }) == ErrorKind::EmptyIndex);
  CHECK(kindOf([&] { searchTopK(idx, q, {}); }) == ErrorKind::DimMismatch);
  CHECK(kindOf([&] { searchTopK(idx, q4, {0, std::nullopt, true}); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("trainPq exact fits and argument errors") {
  Rng rng(4);
  SUBCASE("n = ksub distinct vectors with m = 1") {
    auto idx = test::indexFromRows(test::gaussianRows(rng, 16, 4), 4);
    const auto cb = trainPq(idx, 1, 16, 10, 1);
    CHECK(quantizationError(idx, cb) == doctest::Approx(0.0).epsilon(1e-24));
  }
  SUBCASE("identical vectors") {
    std::vector<double> rows;
    for (int i = 0; i < 40; ++i) rows.insert(rows.end(), {0.3, -0.2, 0.9, 0.1});
    auto idx = test::indexFromRows(rows, 4);
    const auto cb = trainPq(idx, 2, 8, 10, 1);
    CHECK(quantizationError(idx, cb) == 0.0);
  }
  SUBCASE("errors") {
    auto idx = test::indexFromRows(test::gaussianRows(rng, 20, 6), 6);
    CHECK(kindOf([&] { trainPq(idx, 4, 8, 5, 1); }) == ErrorKind::BadSubspaceCount);
    CHECK(kindOf([&] { trainPq(idx, 3, 32, 5, 1); }) == ErrorKind::TooFewVectors);
  }
}

TEST_CASE("PQ quantization error and ADC scores match independent oracles") {
  Rng rng(5);
  const std::size_t n = 1000, dim = 16, m = 4, ksub = 32;
  auto idx = test::indexFromRows(test::gaussianRows(rng, n, dim), dim);
  const auto cb = trainPq(idx, m, ksub, 15, 9);
  const std::size_t sub = dim / m;

  // Naive nearest-centroid assignment, then average squared error.
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = idx.vector(r);
    for (std::size_t j = 0; j < m; ++j) {
      double best = INFINITY;
      std::size_t bestC = 0;
      for (std::size_t c = 0; c < ksub; ++c) {
        double d2 = 0.0;
        for (std::size_t t = 0; t < sub; ++t) {
          const double diff = x[j * sub + t] - cb.centroids[(j * ksub + c) * sub + t];
          d2 += diff * diff;
        }
        if (d2 < best) {
          best = d2;
          bestC = c;
        }
      }
      CHECK(cb.codes[r * m + j] == bestC);
      total += best;
    }
  }
  CHECK(quantizationError(idx, cb) == doctest::Approx(total / n).epsilon(1e-12));

  idx.setPq(cb);
  const auto q = test::gaussianRows(rng, 1, dim);
  const auto hits = searchTopK(idx, q, {n, std::nullopt, false});
  for (const auto& h : hits) {
    const auto decoded = cb.decode(h.row);
    double s = 0.0;
    for (std::size_t t = 0; t < dim; ++t) s += decoded[t] * q[t];
    CHECK(std::abs(h.score - s) < 1e-9);
  }
}

TEST_CASE("index file round trip") {
  Rng rng(6);
  test::TempDir dir;
  auto idx = test::indexFromRows(test::gaussianRows(rng, 300, 8), 8, &rng);
  saveIndex(idx, dir / "exact.bin");
  CHECK(loadIndex(dir / "exact.bin") == idx);
  CHECK(test::readFile(dir / "exact.bin").substr(0, 8) == "PACTIDX1");

  idx.setPq(trainPq(idx, 4, 16, 5, 2));
  saveIndex(idx, dir / "pq.bin");
  const auto back = loadIndex(dir / "pq.bin");
  CHECK(back == idx);
  CHECK(back.pq() == idx.pq());

  idx.dropExact();
  saveIndex(idx, dir / "codes.bin");
  const auto codesOnly = loadIndex(dir / "codes.bin");
  CHECK_FALSE(codesOnly.hasExact());
  const auto q = test::gaussianRows(rng, 1, 8);
  CHECK(searchTopK(codesOnly, q, {5, std::nullopt, false}).size() == 5);
  CHECK(kindOf([&] { searchTopK(codesOnly, q, {5, std::nullopt, true}); }) == ErrorKind::InvalidConfig);

  std::ofstream(dir / "bad.bin") << "NOTANIDXxxxxxxxxxxxx";
  CHECK(kindOf([&] { loadIndex(dir / "bad.bin"); }) == ErrorKind::IncompatibleIndex);
  const auto full = test::readFile(dir / "exact.bin");
  std::ofstream(dir / "short.bin", std::ios::binary) << full.substr(0, full.size() / 2);
  CHECK(kindOf([&] { loadIndex(dir / "short.bin"); }) == ErrorKind::IncompatibleIndex);
  auto wrongVersion = full;
  wrongVersion[8] = 9;
  std::ofstream(dir / "v9.bin", std::ios::binary) << wrongVersion;
  CHECK(kindOf([&] { loadIndex(dir / "v9.bin"); }) == ErrorKind::IncompatibleIndex);
}

TEST_CASE("buildExact records adapter checksum and warns on mismatch") {
  Corpus c = test::corpusFromText(
      R"({"types":["t"],"version":1}
{"id":"a","type":"t","fields":[["n","alpha beta"]]}
{"id":"b","type":"t","fields":[["n","gamma delta"]]}
)");
  const auto enc = BaseEncoder::featureHash({32, 0, {1}, {3}});
  const auto ap = AdapterPair::identity(32);
  const auto idx = buildExact(c, enc, ap);
  CHECK(idx.size() == 2);
  CHECK(idx.header().adapterChecksum == ap.checksum());
  CHECK(idx.header().encoder == enc.describe());
  CHECK_FALSE(adapterMismatch(idx, ap).has_value());
  AdapterPair other = ap;
  other.context(0, 1) = 0.5;
  CHECK(adapterMismatch(idx, other).has_value());
  const auto v = idx.vector(*idx.find(ArtifactId("b")));
  CHECK(std::vector<double>(v.begin(), v.end()) == encodeBase("gamma delta", enc));

  const auto cos = buildExact(c, enc, {Matrix::identity(32), Matrix::zeros(32)}, false);
  for (double x : cos.vectors()) CHECK(x == 0.0);
}
