#include <cmath>
#include <fstream>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "pact/error.hpp"
#include "pact/knn_graph.hpp"

using namespace pact;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edgeSet(const KnnGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : g.edges()) out.insert({e.u, e.v});
  return out;
}

}  // namespace

TEST_CASE("knn graph is the union of top-k lists") {
  Rng rng(11);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.between(5, 120));
    const std::size_t k = static_cast<std::size_t>(rng.between(1, std::min<std::int64_t>(8, n - 1)));
    const std::size_t dim = static_cast<std::size_t>(rng.between(2, 12));
    const auto index = test::indexFromRows(test::gaussianRows(rng, n, dim), dim, &rng);
    const auto g = buildKnnGraph(index, k);
    CHECK(edgeSet(g) == test::knnUnionOracle(index, k));
    for (std::size_t u = 0; u < n; ++u) {
      CHECK(g.degree(u) >= k);
      const auto nbs = g.neighbors(index.id(u));
      for (std::size_t i = 0; i < nbs.size(); ++i) {
        CHECK(nbs[i].id != index.id(u));
        const auto back = g.neighbors(nbs[i].id);
        CHECK(std::any_of(back.begin(), back.end(), [&](const auto& b) { return b.id == index.id(u); }));
        if (i > 0) CHECK(nbs[i - 1].similarity >= nbs[i].similarity);
      }
    }
    for (const auto& e : g.edges()) CHECK(e.u < e.v);
  }
}

TEST_CASE("duplicate vectors link by id order") {
  std::vector<double> rows;
  for (int i = 0; i < 6; ++i) rows.insert(rows.end(), {1.0, 0.0});
  const auto index = test::indexFromRows(rows, 2);
  const auto g = buildKnnGraph(index, 1);
  // Every row's nearest tie goes to the smallest other id.
  CHECK(edgeSet(g) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
}

TEST_CASE("knn graph argument errors") {
  Rng rng(12);
  auto index = test::indexFromRows(test::gaussianRows(rng, 5, 3), 3);
  CHECK_THROWS_WITH_AS(buildKnnGraph(index, 5), doctest::Contains("KTooLarge"), Error);
  CHECK_THROWS_AS(buildKnnGraph(index, 0), Error);
  index.setPq(trainPq(index, 1, 2, 3, 1));
  index.dropExact();
  CHECK_THROWS_AS(buildKnnGraph(index, 2), Error);
}

TEST_CASE("expand walks hops breadth first") {
  // Unit vectors at widening angle gaps: with k = 1 the graph is the path 0-1-2-3-4.
  std::vector<double> embedded;
  for (double t : {0.0, 0.1, 0.3, 0.6, 1.0}) embedded.insert(embedded.end(), {std::cos(t), std::sin(t)});
  const auto index = test::indexFromRows(embedded, 2);
  const auto g = buildKnnGraph(index, 1);
  REQUIRE(edgeSet(g) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});

  const auto zero = expand(g, {ArtifactId("r00002")}, 0);
  CHECK(zero.nodes == std::vector<ArtifactId>{ArtifactId("r00002")});
  CHECK(zero.edges.empty());

  const auto one = expand(g, {ArtifactId("r00002")}, 1);
  CHECK(one.nodes.size() == 3);
  CHECK(one.edges.size() == 2);

  const auto two = expand(g, {ArtifactId("r00000")}, 2);
  CHECK(two.nodes == std::vector<ArtifactId>{ArtifactId("r00000"), ArtifactId("r00001"), ArtifactId("r00002")});

  const auto all = expand(g, {ArtifactId("r00000"), ArtifactId("r00004")}, 10);
  CHECK(all.nodes.size() == 5);
  CHECK(all.edges.size() == 4);
  CHECK_THROWS_AS(expand(g, {ArtifactId("missing")}, 1), Error);
}

TEST_CASE("knn graph file round trip") {
  Rng rng(13);
  test::TempDir dir;
  const auto index = test::indexFromRows(test::gaussianRows(rng, 60, 5), 5, &rng);
  const auto g = buildKnnGraph(index, 4);
  saveKnnGraph(g, dir / "g.jsonl");
  const auto back = loadKnnGraph(dir / "g.jsonl", index);
  CHECK(back.k() == g.k());
  CHECK(back.edges() == g.edges());
  saveKnnGraph(back, dir / "g2.jsonl");
  CHECK(test::readFile(dir / "g.jsonl") == test::readFile(dir / "g2.jsonl"));

  const auto small = test::indexFromRows(test::gaussianRows(rng, 10, 5), 5);
  CHECK_THROWS_AS(loadKnnGraph(dir / "g.jsonl", small), Error);
  std::ofstream(dir / "bad.jsonl") << "not json\n";
  CHECK_THROWS_AS(loadKnnGraph(dir / "bad.jsonl", index), Error);
}
