#include "pact/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pact/error.hpp"
#include "pact/kernels.hpp"

namespace pact {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <typename F>
void forEachJsonLine(const std::filesystem::path& path, const char* what, F&& f) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, std::string("cannot open ") + what + " '" + path.string() + "'");
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

std::ofstream openOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

// Rank of `truth` among `candidates` by score, ties on ascending id.
std::size_t rankAmong(const std::vector<std::pair<double, const ArtifactId*>>& scored, const ArtifactId& truth) {
  double truthScore = 0.0;
  bool found = false;
  for (const auto& [s, id] : scored) {
    if (*id == truth) {
      truthScore = s;
      found = true;
    }
  }
  if (!found) return 0;
  std::size_t rank = 1;
  for (const auto& [s, id] : scored) {
    if (s > truthScore || (s == truthScore && *id < truth)) ++rank;
  }
  return rank;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

RecallRow makeRow(std::string model, std::vector<std::size_t> ranks) {
  RecallRow row{std::move(model), recallAtK(ranks, 1), recallAtK(ranks, 5), recallAtK(ranks, 10), std::move(ranks)};
  return row;
}

}  // namespace

double recallAtK(const std::vector<std::size_t>& truthRanks, std::size_t k) {
  if (truthRanks.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto r : truthRanks) hits += (r >= 1 && r <= k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truthRanks.size());
}

double ndcgAtK(std::size_t truthRank, std::size_t k) {
  if (truthRank == 0 || truthRank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(truthRank) + 1.0);
}

KeywordBenchmark KeywordBenchmark::load(const std::filesystem::path& path) {
  KeywordBenchmark bench;
  forEachJsonLine(path, "benchmark", [&](const nlohmann::json& j) {
    KeywordItem item{j.at("question").get<std::string>(), {}};
    for (const auto& k : j.at("keywords")) item.keywords.push_back(lower(k.get<std::string>()));
    if (item.keywords.empty()) {
      throw Error(ErrorKind::ParseError, "benchmark item without keywords: " + item.question);
    }
    bench.items.push_back(std::move(item));
  });
  return bench;
}

void KeywordBenchmark::save(const std::filesystem::path& path) const {
  auto out = openOut(path);
  for (const auto& item : items) {
    out << nlohmann::json{{"question", item.question}, {"keywords", item.keywords}}.dump() << '\n';
  }
}

MatchRates matchRates(const KeywordBenchmark& bench, const std::vector<std::string>& answers) {
  if (answers.size() != bench.items.size()) {
    throw Error(ErrorKind::BenchShapeMismatch, std::to_string(answers.size()) + " answers for " +
                                                   std::to_string(bench.items.size()) + " questions");
  }
  MatchRates rates;
  std::size_t matchedTotal = 0, keywordTotal = 0;
  double rateSum = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const std::string answer = lower(answers[i]);
    const auto& keywords = bench.items[i].keywords;
    std::size_t matched = 0;
    for (const auto& k : keywords) matched += answer.find(lower(k)) != std::string::npos ? 1 : 0;
    rates.matchedPerItem.push_back(matched);
    matchedTotal += matched;
    keywordTotal += keywords.size();
    if (!keywords.empty()) rateSum += static_cast<double>(matched) / static_cast<double>(keywords.size());
  }
  if (!answers.empty()) rates.average = rateSum / static_cast<double>(answers.size());
  if (keywordTotal > 0) rates.global = static_cast<double>(matchedTotal) / static_cast<double>(keywordTotal);
  return rates;
}

const RecallRow& Experiment1Report::row(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return r;
  }
  throw Error(ErrorKind::InvalidConfig, "no row for model '" + model + "'");
}

nlohmann::json Experiment1Report::toJson() const {
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& r : rows) {
    metrics[r.model] = {{"recall_at_1", r.at1}, {"recall_at_5", r.at5}, {"recall_at_10", r.at10}};
    for (std::size_t q = 0; q < r.ranks.size(); ++q) {
      raw.push_back({{"model", r.model}, {"query", q}, {"truth_rank", r.ranks[q]}});
    }
  }
  return {{"queries", queries}, {"metrics", metrics}, {"raw", raw}, {"training", training.toJson()}};
}

std::string Experiment1Report::csv() const {
  std::ostringstream os;
  os << "model,k,recall\n";
  for (const auto& r : rows) {
    os << r.model << ",1," << r.at1 << "\n" << r.model << ",5," << r.at5 << "\n" << r.model << ",10," << r.at10 << "\n";
  }
  return os.str();
}

Experiment1Report runExperiment1(const Corpus& corpus, const BaseEncoder& encoder, const Experiment1Config& cfg,
                                 const std::optional<AdapterPair>& adapters) {
  cfg.train.validate();
  const EdgeSplit split = splitEdges(corpus.links, cfg.train.split, cfg.train.seed);
  std::vector<LinkEdge> queries;
  for (const auto& e : split.test) {
    if (e.relation == cfg.relation) queries.push_back(e);
  }
  if (queries.empty()) {
    throw Error(ErrorKind::EmptyInput, "no held-out edges with relation '" + cfg.relation + "'");
  }

  Experiment1Report report;
  report.queries = queries.size();
  if (adapters) {
    report.adapters = *adapters;
  } else {
    auto trained = train(corpus, split.train, cfg.train, encoder);
    report.adapters = std::move(trained.adapters);
    report.training = std::move(trained.report);
  }

  std::vector<EmbeddingVector> base(corpus.artifacts.size());
  for (std::size_t i = 0; i < corpus.artifacts.size(); ++i) base[i] = encoder.encodeArtifact(corpus.artifacts[i]);

  auto denseRanks = [&](const AdapterPair& ap) {
    std::vector<std::size_t> ranks;
    for (const auto& e : queries) {
      const auto q = ap.query.apply(base[*corpus.find(e.src)]);
      const std::string& targetType = corpus.at(e.dst).type;
      std::vector<std::pair<double, const ArtifactId*>> scored;
      for (auto i : corpus.ofType(targetType)) {
        const auto c = ap.context.apply(base[i]);
        scored.emplace_back(kernels::dot(q, c), &corpus.artifacts[i].id);
      }
      ranks.push_back(rankAmong(scored, e.dst));
    }
    return ranks;
  };

  std::vector<std::size_t> heuristic;
  for (const auto& e : queries) {
    const auto srcTokens = tokenize(corpus.at(e.src).name());
    const std::set<std::string> src(srcTokens.begin(), srcTokens.end());
    std::vector<std::pair<double, const ArtifactId*>> scored;
    for (auto i : corpus.ofType(corpus.at(e.dst).type)) {
      const auto toks = tokenize(corpus.artifacts[i].name());
      const double s = jaccard(src, {toks.begin(), toks.end()});
      if (s > 0.0) scored.emplace_back(s, &corpus.artifacts[i].id);
    }
    heuristic.push_back(rankAmong(scored, e.dst));
  }

  report.rows.push_back(makeRow("heuristic", std::move(heuristic)));
  report.rows.push_back(makeRow("identity", denseRanks(AdapterPair::identity(encoder.dim()))));
  report.rows.push_back(makeRow("fine_tuned", denseRanks(report.adapters)));
  return report;
}

std::vector<GuardQuery> loadGuardQueries(const std::filesystem::path& path) {
  std::vector<GuardQuery> out;
  forEachJsonLine(path, "guard queries", [&](const nlohmann::json& j) {
    out.push_back({j.at("query").get<std::string>(), ArtifactId(j.at("relevant").get<std::string>())});
  });
  return out;
}

void saveGuardQueries(const std::vector<GuardQuery>& queries, const std::filesystem::path& path) {
  auto out = openOut(path);
  for (const auto& q : queries) out << nlohmann::json{{"query", q.query}, {"relevant", q.relevant.value}}.dump() << '\n';
}

nlohmann::json GuardReport::toJson() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& r : rows) metrics[r.model] = {{"ndcg_at_10", r.ndcg10}, {"avg_relevant_top5", r.avgRelevantTop5}};
  nlohmann::json raw = nlohmann::json::array();
  for (std::size_t q = 0; q < identityRanks.size(); ++q) {
    raw.push_back({{"query", q}, {"identity_rank", identityRanks[q]}, {"fine_tuned_rank", tunedRanks[q]}});
  }
  return {{"metrics", metrics}, {"raw", raw}};
}

GuardReport runGeneralizationGuard(const Corpus& guardCorpus, const std::vector<GuardQuery>& queries,
                                   const BaseEncoder& encoder, const AdapterPair& tuned) {
  if (queries.empty()) throw Error(ErrorKind::EmptyInput, "no guard queries");
  constexpr std::size_t kDepth = 10;
  auto evaluate = [&](const std::string& model, const AdapterPair& ap, std::vector<std::size_t>& ranks) {
    const VectorIndex index = buildExact(guardCorpus, encoder, ap);
    SearchOptions opts;
    opts.k = kDepth;
    double ndcg = 0.0, top5 = 0.0;
    for (const auto& q : queries) {
      const auto hits = searchTopK(index, encodeQuery(q.query, encoder, ap), opts);
      std::size_t rank = 0;
      for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].id == q.relevant) rank = i + 1;
      }
      ranks.push_back(rank);
      ndcg += ndcgAtK(rank, kDepth);
      top5 += (rank >= 1 && rank <= 5) ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(queries.size());
    return GuardRow{model, ndcg / n, top5 / n};
  };
  GuardReport report;
  report.rows.push_back(evaluate("identity", AdapterPair::identity(encoder.dim()), report.identityRanks));
  report.rows.push_back(evaluate("fine_tuned", tuned, report.tunedRanks));
  return report;
}

nlohmann::json Experiment3Report::toJson() const {
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json raw = nlohmann::json::array();
  for (const AgentRun* run : {&base, &withPact}) {
    metrics[run->label] = {{"average_match_rate", run->rates.average}, {"global_match_rate", run->rates.global}};
    for (std::size_t q = 0; q < run->answers.size(); ++q) {
      raw.push_back({{"agent", run->label},
                     {"query", q},
                     {"answer", run->answers[q]},
                     {"matched", run->rates.matchedPerItem[q]},
                     {"tool_calls", run->transcripts[q].toolCalls()}});
    }
  }
  return {{"metrics", metrics}, {"raw", raw}};
}

Experiment3Report runExperiment3(const KeywordBenchmark& bench, const VectorIndex& index,
                                 const AdapterPair& adapters, const BaseEncoder& encoder, const KnnGraph* graph,
                                 const AgentOptions& options) {
  if (bench.items.empty()) throw Error(ErrorKind::EmptyInput, "benchmark has no questions");
  auto run = [&](const std::string& label, const ToolRegistry& tools) {
    AgentRun out;
    out.label = label;
    RulePolicy policy(defaultAgentVocabulary());
    for (const auto& item : bench.items) {
      out.transcripts.push_back(runAgent(item.question, policy, tools, options));
      out.answers.push_back(out.transcripts.back().finalAnswer);
    }
    out.rates = matchRates(bench, out.answers);
    return out;
  };
  Experiment3Report report;
  report.base = run("base", ToolRegistry{});
  ToolRegistry tools;
  tools.add(pactTool(index, adapters, encoder, graph));
  report.withPact = run("base_pact", tools);
  return report;
}

}  // namespace pact
