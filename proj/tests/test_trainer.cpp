#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "pact/error.hpp"
#include "pact/synthetic.hpp"
#include "pact/trainer.hpp"

using namespace pact;

namespace {

// One file type and one team type; files f0..f{nf-1}, teams t0..t{nt-1}.
Corpus filesAndTeams(std::size_t nf, std::size_t nt) {
  Corpus c;
  c.types = {"file", "team"};
  c.textTemplate = TextTemplate({{"file", {"path"}}, {"team", {"name"}}});
  for (std::size_t i = 0; i < nf; ++i) {
    c.addArtifact({ArtifactId("f" + std::to_string(i)), "file", {{"path", "file " + std::to_string(i)}}, {}});
  }
  for (std::size_t i = 0; i < nt; ++i) {
    c.addArtifact({ArtifactId("t" + std::to_string(i)), "team", {{"name", "team " + std::to_string(i)}}, {}});
  }
  return c;
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double x : m.values) s += x * x;
  return std::sqrt(s);
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

TEST_CASE("infoNceLoss closed forms") {
  const std::vector<double> equal(4, 0.7);
  CHECK(infoNceLoss(0.7, equal) == doctest::Approx(1.6094379124341003).epsilon(1e-14));
  // -log(e^10 / (e^10 + e^-10)), evaluated at 40 digits elsewhere.
  const std::vector<double> one{-10.0};
  CHECK(infoNceLoss(10.0, one) == doctest::Approx(2.061153620314380703e-9).epsilon(1e-12));
  const std::vector<double> huge{-700.0, 700.0};
  CHECK(std::isfinite(infoNceLoss(700.0, huge)));
  CHECK(infoNceLoss(700.0, huge) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("infoNceLoss rejects non-finite scores") {
  const std::vector<double> neg{0.0};
  CHECK(kindOf([&] { infoNceLoss(NAN, neg); }) == ErrorKind::NonFiniteScore);
  const std::vector<double> bad{INFINITY};
  CHECK(kindOf([&] { infoNceLoss(0.0, bad); }) == ErrorKind::NonFiniteScore);
}

TEST_CASE("infoNceLoss properties on random scores") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const double pos = 5 * rng.gaussian();
    std::vector<double> neg(1 + rng.below(8));
    for (auto& s : neg) s = 5 * rng.gaussian();
    const double loss = infoNceLoss(pos, neg);
    CHECK(loss >= 0.0);
    const double c = 50 * rng.gaussian();
    std::vector<double> shifted = neg;
    for (auto& s : shifted) s += c;
    CHECK(infoNceLoss(pos + c, shifted) == doctest::Approx(loss).epsilon(1e-9));
    CHECK(infoNceLoss(pos + 1.0, neg) < loss);
  }
}

TEST_CASE("lossGradient matches central differences") {
  Rng rng(99);
  constexpr std::size_t d = 8, k = 4;
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::string, EmbeddingVector> table;
    for (const char* id : {"q", "p", "n0", "n1", "n2", "n3"}) {
      EmbeddingVector v(d);
      for (auto& x : v) x = 0.5 * rng.gaussian();
      table[id] = v;
    }
    const auto enc = BaseEncoder::precomputed(d, table);
    Corpus c;
    c.types = {"x", "y"};
    c.textTemplate = TextTemplate({{"x", {"n"}}, {"y", {"n"}}});
    c.addArtifact({ArtifactId("q"), "x", {{"n", "q"}}, {}});
    for (const char* id : {"p", "n0", "n1", "n2", "n3"}) c.addArtifact({ArtifactId(id), "y", {{"n", id}}, {}});
    TrainingExample ex{ArtifactId("q"), ArtifactId("p"), {}, 1.0, false};
    for (std::size_t j = 0; j < k; ++j) ex.negatives.emplace_back("n" + std::to_string(j));

    AdapterPair ap = AdapterPair::identity(d);
    for (auto& x : ap.query.values) x += 0.5 * rng.gaussian();
    for (auto& x : ap.context.values) x += 0.5 * rng.gaussian();

    const auto g = lossGradient(ex, c, enc, ap);
    constexpr double h = 1e-5;
    Matrix fdQ = Matrix::zeros(d), fdC = Matrix::zeros(d);
    for (std::size_t i = 0; i < d * d; ++i) {
      for (int which = 0; which < 2; ++which) {
        AdapterPair plus = ap, minus = ap;
        (which ? plus.context : plus.query).values[i] += h;
        (which ? minus.context : minus.query).values[i] -= h;
        const double fd = (lossGradient(ex, c, enc, plus).loss - lossGradient(ex, c, enc, minus).loss) / (2 * h);
        (which ? fdC : fdQ).values[i] = fd;
      }
    }
    Matrix diffQ = fdQ, diffC = fdC;
    for (std::size_t i = 0; i < d * d; ++i) {
      diffQ.values[i] -= g.dQuery.values[i];
      diffC.values[i] -= g.dContext.values[i];
    }
    const double num = std::hypot(frobenius(diffQ), frobenius(diffC));
    const double den = std::hypot(frobenius(g.dQuery), frobenius(g.dContext));
    CHECK(num / den < 1e-5);
  }
}

TEST_CASE("lossGradient at zero adapters matches the uniform-softmax closed form (D=2, k=1)") {
  // All scores are 0, so p = (1/2, 1/2), g = (-1/2, 1/2); dL/dQ = (sum g_j C b_j) a^T = 0
  // because C = 0; dL/dC = (Q a)(sum g_j b_j)^T = 0 because Q = 0. With Q = I and C = 0
  // instead, dL/dC = a (g_0 b+ + g_1 b-)^T.
  const auto enc = BaseEncoder::precomputed(2, {{"q", {1.0, 2.0}}, {"p", {3.0, -1.0}}, {"n", {0.5, 4.0}}});
  Corpus c;
  c.types = {"x", "y"};
  c.textTemplate = TextTemplate({{"x", {"n"}}, {"y", {"n"}}});
  c.addArtifact({ArtifactId("q"), "x", {{"n", "q"}}, {}});
  c.addArtifact({ArtifactId("p"), "y", {{"n", "p"}}, {}});
  c.addArtifact({ArtifactId("n"), "y", {{"n", "n"}}, {}});
  const TrainingExample ex{ArtifactId("q"), ArtifactId("p"), {ArtifactId("n")}, 1.0, false};

  const auto zero = lossGradient(ex, c, enc, {Matrix::zeros(2), Matrix::zeros(2)});
  CHECK(zero.loss == doctest::Approx(std::log(2.0)));
  for (double x : zero.dQuery.values) CHECK(x == 0.0);
  for (double x : zero.dContext.values) CHECK(x == 0.0);

  const auto half = lossGradient(ex, c, enc, {Matrix::identity(2), Matrix::zeros(2)});
  // w = -1/2 (3,-1) + 1/2 (0.5,4) = (-1.25, 2.5); dC = a w^T with a = (1,2).
  const std::vector<double> expected{-1.25, 2.5, -2.5, 5.0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(half.dContext.values[i] == doctest::Approx(expected[i]));
}

TEST_CASE("buildExamples forced negatives and flags") {
  SUBCASE("one edge, five teams, four negatives") {
    Corpus c = filesAndTeams(1, 5);
    c.addEdge({ArtifactId("f0"), ArtifactId("t0"), "owned_by"});
    TrainConfig cfg;
    const auto ex = buildExamples(c, c.links, cfg, 1);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].positive == ArtifactId("t0"));
    const std::set<ArtifactId> neg(ex[0].negatives.begin(), ex[0].negatives.end());
    CHECK(neg == std::set<ArtifactId>{ArtifactId("t1"), ArtifactId("t2"), ArtifactId("t3"), ArtifactId("t4")});
  }
  SUBCASE("too few candidates") {
    Corpus c = filesAndTeams(1, 4);
    c.addEdge({ArtifactId("f0"), ArtifactId("t0"), "owned_by"});
    try {
      buildExamples(c, c.links, TrainConfig{}, 1);
      FAIL("expected NotEnoughNegatives");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotEnoughNegatives);
      CHECK(e.detail().find("f0") != std::string::npos);
    }
  }
  SUBCASE("two-hop flag") {
    Corpus c = filesAndTeams(6, 6);
    c.addEdge({ArtifactId("f0"), ArtifactId("f1"), "calls"});
    c.addEdge({ArtifactId("f1"), ArtifactId("t0"), "owned_by"});
    TrainConfig cfg;
    cfg.includeTwoHop = false;
    CHECK(buildExamples(c, c.links, cfg, 1).size() == 2);
    cfg.includeTwoHop = true;
    const auto ex = buildExamples(c, c.links, cfg, 1);
    REQUIRE(ex.size() == 3);
    CHECK(ex[2].query == ArtifactId("f0"));
    CHECK(ex[2].positive == ArtifactId("t0"));
    CHECK(ex[2].twoHop);
  }
}

TEST_CASE("buildExamples invariants on the synthetic corpus") {
  SyntheticSpec spec;
  spec.seed = 3;
  const auto data = generateSynthetic(spec);
  const Corpus& c = data.corpus;
  TrainConfig cfg;
  const auto ex = buildExamples(c, c.links, cfg, 17);
  CHECK(ex.size() == c.links.edgeCount() + twoHopPairs(c.links).size());
  for (const auto& e : ex) {
    CHECK(e.negatives.size() == cfg.negativesPerPositive);
    std::set<ArtifactId> distinct(e.negatives.begin(), e.negatives.end());
    CHECK(distinct.size() == e.negatives.size());
    for (const auto& n : e.negatives) {
      CHECK(c.at(n).type == c.at(e.positive).type);
      CHECK(n != e.positive);
      CHECK_FALSE(c.links.linkedEitherWay(e.query, n));
    }
  }
  const auto again = buildExamples(c, c.links, cfg, 17);
  REQUIRE(again.size() == ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) CHECK(again[i].negatives == ex[i].negatives);
}

TEST_CASE("splitEdges is a disjoint, exhaustive, seeded 5:1 partition") {
  SyntheticSpec spec;
  const auto data = generateSynthetic(spec);
  const auto& g = data.corpus.links;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto split = splitEdges(g, SplitRatio{}, seed);
    CHECK(split.train.edgeCount() + split.test.size() == g.edgeCount());
    CHECK(std::abs(static_cast<double>(split.test.size()) - g.edgeCount() / 6.0) <= 1.0);
    std::set<std::tuple<std::string, std::string, std::string>> all, parts;
    for (const auto& e : g.edges()) all.insert({e.src.value, e.dst.value, e.relation});
    for (const auto& e : split.train.edges()) parts.insert({e.src.value, e.dst.value, e.relation});
    for (const auto& e : split.test) CHECK(parts.insert({e.src.value, e.dst.value, e.relation}).second);
    CHECK(parts == all);
    CHECK(splitEdges(g, SplitRatio{}, seed).test == split.test);
  }
  CHECK(SplitRatio::parse("5:1").train == 5);
  CHECK_THROWS_AS(SplitRatio::parse("5:0"), Error);
  CHECK_THROWS_AS(SplitRatio::parse("x"), Error);
}

TEST_CASE("train: zero epochs keeps identity, runs are bitwise reproducible") {
  SyntheticSpec spec;
  spec.codePaths = 60;
  spec.teams = 10;
  spec.products = 12;
  spec.benchmarkQuestions = 5;
  const auto data = generateSynthetic(spec);
  FeatureHashConfig hc;
  hc.dim = 64;
  const auto enc = BaseEncoder::featureHash(hc);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto none = train(data.corpus, data.corpus.links, cfg, enc);
  CHECK(none.adapters == AdapterPair::identity(64));
  CHECK(none.report.epochs.empty());

  cfg.epochs = 3;
  const auto a = train(data.corpus, data.corpus.links, cfg, enc);
  const auto b = train(data.corpus, data.corpus.links, cfg, enc);
  CHECK(a.adapters == b.adapters);
  CHECK(a.report.epochs.size() == 3);

  SUBCASE("freeze_context keeps the context adapter at identity") {
    cfg.freezeContext = true;
    const auto frozen = train(data.corpus, data.corpus.links, cfg, enc);
    CHECK(frozen.adapters.context == Matrix::identity(64));
    CHECK(frozen.adapters.query != Matrix::identity(64));
  }
  SUBCASE("tied adapters stay equal") {
    cfg.tied = true;
    const auto tied = train(data.corpus, data.corpus.links, cfg, enc);
    CHECK(tied.adapters.context == tied.adapters.query);
  }
}

TEST_CASE("train on the default synthetic corpus lowers the loss every epoch") {
  const auto data = generateSynthetic(SyntheticSpec{});
  const auto enc = BaseEncoder::featureHash(FeatureHashConfig{});
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto result = train(data.corpus, data.corpus.links, cfg, enc);
  const auto& epochs = result.report.epochs;
  REQUIRE(epochs.size() == 20);
  CHECK(epochs.back().meanLoss < result.report.initialMeanLoss);
  for (std::size_t i = 1; i < epochs.size(); ++i) CHECK(epochs[i].meanLoss <= epochs[i - 1].meanLoss);
  const auto js = result.report.toJson();
  CHECK(js.at("epochs").size() == 20);
  CHECK(js.at("examples").get<std::size_t>() == result.report.examples);
  CHECK(js.at("config").at("negatives_per_positive") == 4);
}

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  cfg.negativesPerPositive = 0;
  CHECK(kindOf([&] { cfg.validate(); }) == ErrorKind::InvalidConfig);
  cfg = TrainConfig{};
  cfg.learningRate = 0.0;
  CHECK(kindOf([&] { cfg.validate(); }) == ErrorKind::InvalidConfig);
}
