#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "pact/error.hpp"
#include "pact/search.hpp"

using namespace pact;

namespace {

const char* kCorpus = R"({"types":["code_path","oncall_team"],"version":1}
{"id":"src/billing/invoice.py","type":"code_path","fields":[["summary","billing invoice totals"]]}
{"id":"src/billing/refund.py","type":"code_path","fields":[["summary","billing refund flow"]]}
{"id":"src/auth/login.py","type":"code_path","fields":[["summary","auth login session"]]}
{"id":"src/auth/token.py","type":"code_path","fields":[["summary","auth token refresh"]]}
{"id":"payments-oncall","type":"oncall_team","fields":[["charter","payments billing invoices refunds"]]}
{"id":"identity-oncall","type":"oncall_team","fields":[["charter","identity auth login tokens"]]}
)";

SearchRequest request(std::string query, std::size_t k) {
  SearchRequest r;
  r.query = std::move(query);
  r.k = k;
  return r;
}

struct Fixture {
  Corpus corpus = test::corpusFromText(kCorpus);
  BaseEncoder enc = BaseEncoder::featureHash({64, 0, {1}, {3}});
  AdapterPair adapters = AdapterPair::identity(64);
  VectorIndex index = buildExact(corpus, enc, adapters);
};

}  // namespace

TEST_CASE("search ranks by the adapted query") {
  Fixture f;
  const auto r = search(request("billing invoice", 3), f.index, f.adapters, f.enc);
  REQUIRE(r.hits.size() == 3);
  CHECK(r.hits[0].id.value == "src/billing/invoice.py");
  for (const auto& h : r.hits) {
    CHECK(h.provenance == Provenance::Direct);
    CHECK(h.score.has_value());
    CHECK_FALSE(h.from.has_value());
  }
  const auto q = encodeQuery("billing invoice", f.enc, f.adapters);
  const auto direct = searchTopK(f.index, q, {3, std::nullopt, true});
  for (std::size_t i = 0; i < 3; ++i) CHECK(*r.hits[i].score == direct[i].score);
  CHECK(r.latencyMs >= 0.0);
}

TEST_CASE("type filter and k larger than the index") {
  Fixture f;
  auto req = request("auth", 50);
  req.types = std::set<std::string>{"oncall_team"};
  const auto r = search(req, f.index, f.adapters, f.enc);
  CHECK(r.hits.size() == 2);
  for (const auto& h : r.hits) CHECK(h.type == "oncall_team");
  CHECK(search(request("auth", 50), f.index, f.adapters, f.enc).hits.size() == 6);
}

TEST_CASE("graph enrichment appends unseen neighbours after direct hits") {
  Fixture f;
  const auto g = buildKnnGraph(f.index, 1);
  auto req = request("refund", 1);
  req.enrichHops = 1;
  const auto r = search(req, f.index, f.adapters, f.enc, &g);
  REQUIRE_FALSE(r.hits.empty());
  CHECK(r.hits[0].provenance == Provenance::Direct);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < r.hits.size(); ++i) {
    CHECK(ids.insert(r.hits[i].id.value).second);
    if (i == 0) continue;
    CHECK(r.hits[i].provenance == Provenance::GraphEdge);
    CHECK_FALSE(r.hits[i].score.has_value());
    CHECK(*r.hits[i].from == r.hits[0].id);
    const auto nbs = g.neighbors(r.hits[0].id);
    CHECK(std::any_of(nbs.begin(), nbs.end(), [&](const auto& n) { return n.id == r.hits[i].id; }));
  }
  CHECK(r.hits.size() == 1 + g.degree(*g.find(r.hits[0].id)));

  const auto js = r.toJson();
  CHECK(js["hits"][0]["provenance"] == "direct");
  CHECK(js["hits"][1]["provenance"] == "graph-edge");
  CHECK(js["hits"][1]["score"].is_null());
  CHECK(js.contains("latency_ms"));
  CHECK(r.pretty().find("(via ") != std::string::npos);
}

TEST_CASE("search errors") {
  Fixture f;
  auto req = request("auth", 3);
  req.enrichHops = 1;
  CHECK_THROWS_WITH_AS(search(req, f.index, f.adapters, f.enc), doctest::Contains("GraphRequired"), Error);
  CHECK_THROWS_WITH_AS(search(request("", 3), f.index, f.adapters, f.enc), doctest::Contains("EmptyText"), Error);
  CHECK_THROWS_AS(search(request("auth", 3), VectorIndex{}, f.adapters, f.enc), Error);
}

TEST_CASE("cosine search scores are bounded") {
  Fixture f;
  const auto cos = buildExact(f.corpus, f.enc, f.adapters, true);
  auto req = request("auth login", 6);
  req.cosine = true;
  for (const auto& h : search(req, cos, f.adapters, f.enc).hits) {
    CHECK(*h.score <= 1.0 + 1e-12);
    CHECK(*h.score >= -1.0 - 1e-12);
  }
}
