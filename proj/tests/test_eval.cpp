#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "pact/error.hpp"
#include "pact/eval.hpp"
#include "pact/synthetic.hpp"

using namespace pact;

namespace {

KeywordBenchmark bench(std::vector<std::vector<std::string>> keywords) {
  KeywordBenchmark b;
  for (auto& k : keywords) b.items.push_back({"q", std::move(k)});
  return b;
}

SyntheticSpec smallSpec(std::uint64_t seed = 7) {
  SyntheticSpec s;
  s.seed = seed;
  s.codePaths = 90;
  s.teams = 15;
  s.products = 20;
  s.catalogNodes = 60;
  s.catalogFamilies = 10;
  s.projects = 20;
  s.benchmarkQuestions = 5;
  s.guardDocuments = 60;
  s.guardQueries = 20;
  return s;
}

}  // namespace

TEST_CASE("recallAtK examples and monotonicity") {
  CHECK(recallAtK({1, 1, 1}, 1) == 1.0);
  CHECK(recallAtK({1, 7, 3}, 5) == 2.0 / 3.0);
  CHECK(recallAtK({0, 0}, 10) == 0.0);
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> ranks(1 + rng.below(30));
    for (auto& r : ranks) r = rng.below(15);
    double prev = 0.0;
    for (std::size_t k = 1; k <= 15; ++k) {
      const double now = recallAtK(ranks, k);
      CHECK(now >= prev);
      const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](auto r) { return r >= 1 && r <= k; });
      CHECK(now == static_cast<double>(hits) / static_cast<double>(ranks.size()));
      prev = now;
    }
  }
}

TEST_CASE("ndcg closed form") {
  CHECK(ndcgAtK(1, 10) == 1.0);
  CHECK(ndcgAtK(3, 10) == 0.5);
  CHECK(ndcgAtK(10, 10) == doctest::Approx(1.0 / std::log2(11.0)));
  CHECK(ndcgAtK(11, 10) == 0.0);
  CHECK(ndcgAtK(0, 10) == 0.0);
}

TEST_CASE("match rate examples") {
  auto b = bench({{"alpha", "beta"}, {"x", "y", "z"}});
  auto r = matchRates(b, {"ALPHA only", "x y z"});
  CHECK(r.average == 0.75);
  CHECK(r.global == 0.8);
  CHECK(r.matchedPerItem == std::vector<std::size_t>{1, 3});
  r = matchRates(b, {"", "nothing"});
  CHECK(r.average == 0.0);
  CHECK(r.global == 0.0);
  r = matchRates(b, {"alphabeta", "xyz"});
  CHECK(r.average == 1.0);
  CHECK(r.global == 1.0);
  CHECK_THROWS_WITH_AS(matchRates(b, {"one"}), doctest::Contains("BenchShapeMismatch"), Error);
}

TEST_CASE("match rate properties") {
  Rng rng(22);
  const std::vector<std::string> words{"ab", "cd", "ef", "gh", "ij", "kl"};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const bool sameCount = rng.bernoulli(0.5);
    const std::size_t fixed = 1 + rng.below(4);
    std::vector<std::vector<std::string>> kw(n);
    std::vector<std::string> answers(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = sameCount ? fixed : 1 + rng.below(4);
      for (std::size_t j = 0; j < c; ++j) kw[i].push_back(rng.pick(words));
      for (int j = 0; j < 3; ++j) answers[i] += rng.pick(words) + " ";
    }
    const auto r = matchRates(bench(kw), answers);
    CHECK(r.average >= 0.0);
    CHECK(r.average <= 1.0);
    CHECK(r.global >= 0.0);
    CHECK(r.global <= 1.0);
    if (sameCount) CHECK(r.average == doctest::Approx(r.global).epsilon(1e-15));
  }
}

TEST_CASE("keyword benchmark file lowercases keywords") {
  test::TempDir dir;
  std::ofstream(dir / "b.jsonl") << R"({"question":"Q?","keywords":["Alpha","BETA"]})" << "\n";
  const auto b = KeywordBenchmark::load(dir / "b.jsonl");
  REQUIRE(b.items.size() == 1);
  CHECK(b.items[0].keywords == std::vector<std::string>{"alpha", "beta"});
  std::ofstream(dir / "bad.jsonl") << R"({"question":"Q?","keywords":[]})" << "\n";
  CHECK_THROWS_AS(KeywordBenchmark::load(dir / "bad.jsonl"), Error);
}

TEST_CASE("synthetic generation is deterministic and consistent") {
  const auto a = generateSynthetic(smallSpec());
  const auto b = generateSynthetic(smallSpec());
  test::TempDir da, db;
  writeSynthetic(a, da.path());
  writeSynthetic(b, db.path());
  for (const char* f : {"corpus.jsonl", "benchmark.jsonl", "nodes.jsonl", "projects.jsonl", "guard_corpus.jsonl",
                        "guard_queries.jsonl"}) {
    CHECK(test::readFile(da / f) == test::readFile(db / f));
    CHECK_FALSE(test::readFile(da / f).empty());
  }
  const auto other = generateSynthetic(smallSpec(8));
  CHECK(other.corpus.artifacts[0].composedText != a.corpus.artifacts[0].composedText);

  CHECK(a.corpus.ofType("code_path").size() == 90);
  CHECK(a.benchmark.items.size() == 5);
  CHECK(a.catalog.size() == 60);
  CHECK(a.projects.size() == 20);
  for (const auto& p : a.projects) CHECK(a.catalog.find(p.truth) != nullptr);
  for (const auto& q : a.guardQueries) CHECK(a.guardCorpus.find(q.relevant).has_value());
  for (const auto& e : a.corpus.links.edges()) {
    CHECK((e.relation == "owned_by" || e.relation == "supports"));
  }
  // Guard vocabulary never overlaps the main corpus.
  std::set<std::string> mainTokens;
  for (const auto& art : a.corpus.artifacts) {
    for (const auto& t : tokenize(art.composedText)) mainTokens.insert(t);
  }
  std::size_t shared = 0, guardTokens = 0;
  for (const auto& art : a.guardCorpus.artifacts) {
    for (const auto& t : tokenize(art.composedText)) {
      ++guardTokens;
      shared += mainTokens.contains(t);
    }
  }
  CHECK(guardTokens > 0);
  CHECK(static_cast<double>(shared) / static_cast<double>(guardTokens) < 0.5);

  auto bad = smallSpec();
  bad.teams = 3;
  CHECK_THROWS_WITH_AS(generateSynthetic(bad), doctest::Contains("SpecInfeasible"), Error);
  bad = smallSpec();
  bad.noiseRate = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("experiment 1 rows agree with a recount of their ranks") {
  const auto data = generateSynthetic(smallSpec());
  const auto enc = BaseEncoder::featureHash({64, 0, {1}, {3}});
  Experiment1Config cfg;
  cfg.train.epochs = 2;
  const auto rep = runExperiment1(data.corpus, enc, cfg);
  CHECK(rep.queries > 0);
  REQUIRE(rep.rows.size() == 3);
  for (const auto& row : rep.rows) {
    CHECK(row.ranks.size() == rep.queries);
    CHECK(row.at1 == recallAtK(row.ranks, 1));
    CHECK(row.at5 == recallAtK(row.ranks, 5));
    CHECK(row.at10 == recallAtK(row.ranks, 10));
    CHECK(row.at1 <= row.at5);
    CHECK(row.at5 <= row.at10);
  }
  CHECK(rep.row("heuristic").model == "heuristic");
  CHECK(rep.training.epochs.size() == 2);
  const auto js = rep.toJson();
  CHECK(js["metrics"].contains("fine_tuned"));
  CHECK(rep.csv().rfind("model,k,recall\n", 0) == 0);

  const auto again = runExperiment1(data.corpus, enc, cfg, AdapterPair::identity(64));
  CHECK(again.row("fine_tuned").ranks == again.row("identity").ranks);
}

TEST_CASE("generalization guard with identical adapters is a tie") {
  const auto data = generateSynthetic(smallSpec());
  const auto enc = BaseEncoder::featureHash({64, 0, {1}, {3}});
  const auto rep = runGeneralizationGuard(data.guardCorpus, data.guardQueries, enc, AdapterPair::identity(64));
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].ndcg10 == rep.rows[1].ndcg10);
  CHECK(rep.identityRanks == rep.tunedRanks);
  double ndcg = 0.0;
  for (auto r : rep.identityRanks) ndcg += ndcgAtK(r, 10);
  CHECK(rep.rows[0].ndcg10 == doctest::Approx(ndcg / static_cast<double>(rep.identityRanks.size())));
  CHECK(rep.rows[0].avgRelevantTop5 == recallAtK(rep.identityRanks, 5));
}

TEST_CASE("experiment 3 base agent answers without evidence") {
  const auto data = generateSynthetic(smallSpec());
  const auto enc = BaseEncoder::featureHash({64, 0, {1}, {3}});
  const auto ap = AdapterPair::identity(64);
  const auto index = buildExact(data.corpus, enc, ap);
  const auto rep = runExperiment3(data.benchmark, index, ap, enc);
  CHECK(rep.base.answers.size() == 5);
  for (const auto& t : rep.base.transcripts) CHECK(t.toolCalls() == 0);
  CHECK(rep.withPact.rates.average >= rep.base.rates.average);
  const auto recount = matchRates(data.benchmark, rep.withPact.answers);
  CHECK(recount.average == rep.withPact.rates.average);
  const auto js = rep.toJson();
  CHECK(js["metrics"].contains("base"));
  CHECK(js["metrics"].contains("base_pact"));
  CHECK(js["raw"].size() == 10);
}
