// pact: command-line front end for the artifact search pipeline.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pact/agent.hpp"
#include "pact/completion.hpp"
#include "pact/error.hpp"
#include "pact/eval.hpp"
#include "pact/fetcher.hpp"
#include "pact/index.hpp"
#include "pact/knn_graph.hpp"
#include "pact/search.hpp"
#include "pact/synthetic.hpp"
#include "pact/trainer.hpp"

namespace {

using namespace pact;

struct Common {
  std::string config;
  std::uint64_t seed = 7;
  bool quiet = false;
  bool jsonErrors = false;
};

Common common;

void info(const std::string& msg) {
  if (!common.quiet) std::cerr << msg << "\n";
}

void writeText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
}

void writeJson(const std::string& path, const nlohmann::json& j) { writeText(path, j.dump(2) + "\n"); }

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void addCommon(CLI::App* sub) {
  sub->add_option("--config", common.config, "settings file of 'key = value' lines; flags on the command line win");
  sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
  sub->add_flag("--quiet", common.quiet, "suppress progress messages");
  sub->add_flag("--json-errors", common.jsonErrors, "report errors as JSON on standard error");
}

struct EncoderOptions {
  std::size_t dim = 256;
  std::uint64_t encoderSeed = 0;
  std::string vectors;

  void add(CLI::App* sub) {
    sub->add_option("--dim", dim, "feature-hashing dimension")->capture_default_str();
    sub->add_option("--encoder-seed", encoderSeed, "feature-hashing seed")->capture_default_str();
    sub->add_option("--vectors", vectors, "precomputed base vectors, JSONL {id, vector}; replaces hashing");
  }

  BaseEncoder make() const {
    if (!vectors.empty()) return BaseEncoder::loadPrecomputed(vectors);
    FeatureHashConfig cfg;
    cfg.dim = dim;
    cfg.seed = encoderSeed;
    return BaseEncoder::featureHash(cfg);
  }
};

struct TrainOptions {
  TrainConfig cfg;
  std::string split = "5:1";
  bool noTwoHop = false;
  bool noInBatch = false;

  void add(CLI::App* sub) {
    sub->add_option("--negatives", cfg.negativesPerPositive, "hard negatives per positive")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    sub->add_option("--lr", cfg.learningRate, "learning rate")->capture_default_str();
    sub->add_option("--batch", cfg.batchSize, "mini-batch size")->capture_default_str();
    sub->add_option("--split", split, "train:test edge split")->capture_default_str();
    sub->add_option("--two-hop-weight", cfg.twoHopWeight, "sample weight of 2-hop examples")->capture_default_str();
    sub->add_flag("--no-two-hop", noTwoHop, "skip 2-hop positives");
    sub->add_flag("--no-in-batch", noInBatch, "skip in-batch negatives");
    sub->add_flag("--freeze-context", cfg.freezeContext, "keep the context adapter at identity");
    sub->add_flag("--tied", cfg.tied, "share one matrix between query and context");
  }

  TrainConfig make() const {
    TrainConfig out = cfg;
    out.seed = common.seed;
    out.split = SplitRatio::parse(split);
    out.includeTwoHop = !noTwoHop;
    out.inBatchNegatives = !noInBatch;
    out.validate();
    return out;
  }
};

AdapterPair adaptersOrIdentity(const std::string& path, std::size_t dim) {
  if (path.empty()) return AdapterPair::identity(dim);
  auto ap = loadAdapters(path);
  if (ap.dim() != dim) {
    throw Error(ErrorKind::DimMismatch, "adapters are " + std::to_string(ap.dim()) + "-dimensional, encoder is " +
                                            std::to_string(dim));
  }
  return ap;
}

// Everything a query needs, reconstructed from an index file.
struct SearchContext {
  VectorIndex index;
  BaseEncoder encoder;
  AdapterPair adapters;
  std::optional<KnnGraph> graph;

  static SearchContext load(const std::string& indexPath, const std::string& adaptersPath,
                            const std::string& vectorsPath, const std::string& graphPath) {
    SearchContext ctx;
    ctx.index = loadIndex(indexPath);
    if (!vectorsPath.empty()) {
      ctx.encoder = BaseEncoder::loadPrecomputed(vectorsPath);
    } else {
      ctx.encoder = BaseEncoder::fromDescription(ctx.index.header().encoder);
      if (ctx.encoder.kind() == BaseEncoder::Kind::Precomputed) {
        throw Error(ErrorKind::InvalidConfig, "index uses precomputed vectors; pass --vectors");
      }
    }
    if (ctx.encoder.dim() != ctx.index.dim()) {
      throw Error(ErrorKind::DimMismatch, "encoder and index dimensions differ");
    }
    ctx.adapters = adaptersOrIdentity(adaptersPath, ctx.index.dim());
    if (auto warning = adapterMismatch(ctx.index, ctx.adapters)) info("warning: " + *warning);
    if (!graphPath.empty()) ctx.graph = loadKnnGraph(graphPath, ctx.index);
    return ctx;
  }

  const KnnGraph* graphPtr() const { return graph ? &*graph : nullptr; }
};

// Fills options of `sub` that were not given on the command line from the
// config file. Keys name long options without the dashes; '_' and '-' are
// interchangeable; keys the subcommand does not know are ignored.
void applyConfig(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, "config line " + std::to_string(lineNo) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string out;
  SyntheticSpec spec;
};

int runGen(GenArgs& a) {
  a.spec.seed = common.seed;
  const auto data = generateSynthetic(a.spec);
  writeSynthetic(data, a.out);
  info("wrote " + std::to_string(data.corpus.artifacts.size()) + " artifacts, " +
       std::to_string(data.corpus.links.edgeCount()) + " edges to " + a.out);
  return 0;
}

struct IngestArgs {
  std::string corpus;
  std::string templatePath;
  std::string out;
};

int runIngest(IngestArgs& a) {
  Corpus corpus = loadCorpus(a.corpus);
  if (!a.templatePath.empty()) {
    std::ifstream in(a.templatePath);
    if (!in) throw Error(ErrorKind::Io, "cannot open template '" + a.templatePath + "'");
    try {
      corpus.applyTemplate(TextTemplate(nlohmann::json::parse(in).get<std::map<std::string, std::vector<std::string>>>()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("template: ") + e.what());
    }
  }
  nlohmann::json summary{{"artifacts", corpus.artifacts.size()}, {"edges", corpus.links.edgeCount()}};
  for (const auto& t : corpus.types) summary["types"][t] = corpus.ofType(t).size();
  summary["two_hop_pairs"] = twoHopPairs(corpus.links).size();
  if (!a.out.empty()) writeCorpus(corpus, a.out);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string report;
  bool allEdges = false;
  EncoderOptions enc;
  TrainOptions train;
};

int runTrain(TrainArgs& a) {
  const Corpus corpus = loadCorpus(a.corpus);
  const auto encoder = a.enc.make();
  const auto cfg = a.train.make();
  const LinkGraph graph = a.allEdges ? corpus.links : splitEdges(corpus.links, cfg.split, cfg.seed).train;
  const auto result = train(corpus, graph, cfg, encoder);
  saveAdapters(result.adapters, a.out);
  if (!a.report.empty()) writeJson(a.report, result.report.toJson());
  info("trained on " + std::to_string(result.report.examples) + " examples; mean loss " +
       std::to_string(result.report.initialMeanLoss) + " -> " +
       std::to_string(result.report.epochs.empty() ? result.report.initialMeanLoss
                                                   : result.report.epochs.back().meanLoss));
  return 0;
}

struct BuildIndexArgs {
  std::string corpus;
  std::string adapters;
  std::string out;
  bool pq = false;
  std::size_t m = 8;
  std::size_t ksub = 256;
  std::size_t iters = 25;
  bool dropExact = false;
  bool cosine = false;
  EncoderOptions enc;
};

int runBuildIndex(BuildIndexArgs& a) {
  const Corpus corpus = loadCorpus(a.corpus);
  const auto encoder = a.enc.make();
  const auto adapters = adaptersOrIdentity(a.adapters, encoder.dim());
  VectorIndex index = buildExact(corpus, encoder, adapters, a.cosine);
  if (a.pq) {
    index.setPq(trainPq(index, a.m, a.ksub, a.iters, common.seed));
    info("pq quantization error " + std::to_string(quantizationError(index, index.pq())));
    if (a.dropExact) index.dropExact();
  } else if (a.dropExact) {
    throw Error(ErrorKind::InvalidConfig, "--drop-exact needs --pq");
  }
  saveIndex(index, a.out);
  info("indexed " + std::to_string(index.size()) + " artifacts");
  return 0;
}

struct KnnArgs {
  std::string index;
  std::string out;
  std::size_t k = 10;
};

int runKnn(KnnArgs& a) {
  const auto index = loadIndex(a.index);
  const auto graph = buildKnnGraph(index, a.k);
  saveKnnGraph(graph, a.out);
  info("graph with " + std::to_string(graph.edges().size()) + " edges");
  return 0;
}

struct SearchArgs {
  std::string index;
  std::string graph;
  std::string adapters;
  std::string vectors;
  std::string types;
  std::string query;
  std::size_t k = 10;
  std::size_t hops = 0;
  bool noRerank = false;
  bool cosine = false;
  bool pretty = false;
};

int runSearch(SearchArgs& a) {
  const auto ctx = SearchContext::load(a.index, a.adapters, a.vectors, a.graph);
  SearchRequest req;
  req.query = a.query;
  req.k = a.k;
  req.enrichHops = a.hops;
  req.rerank = !a.noRerank;
  req.cosine = a.cosine;
  if (!a.types.empty()) {
    const auto list = splitList(a.types);
    req.types = std::set<std::string>(list.begin(), list.end());
  }
  const auto result = search(req, ctx.index, ctx.adapters, ctx.encoder, ctx.graphPtr());
  std::cout << (a.pretty ? result.pretty() : result.toJson().dump(2) + "\n");
  return 0;
}

struct EvalRecallArgs {
  std::string corpus;
  std::string adapters;
  std::string adaptersOut;
  std::string relation = "owned_by";
  std::string report;
  std::string csv;
  std::string guardCorpus;
  std::string guardQueries;
  EncoderOptions enc;
  TrainOptions train;
};

int runEvalRecall(EvalRecallArgs& a) {
  const Corpus corpus = loadCorpus(a.corpus);
  const auto encoder = a.enc.make();
  Experiment1Config cfg;
  cfg.train = a.train.make();
  cfg.relation = a.relation;
  std::optional<AdapterPair> given;
  if (!a.adapters.empty()) given = adaptersOrIdentity(a.adapters, encoder.dim());
  const auto report = runExperiment1(corpus, encoder, cfg, given);
  if (!a.adaptersOut.empty()) saveAdapters(report.adapters, a.adaptersOut);

  nlohmann::json out = report.toJson();
  if (!a.guardCorpus.empty() || !a.guardQueries.empty()) {
    if (a.guardCorpus.empty() || a.guardQueries.empty()) {
      throw Error(ErrorKind::InvalidConfig, "--guard-corpus and --guard-queries go together");
    }
    const auto guard =
        runGeneralizationGuard(loadCorpus(a.guardCorpus), loadGuardQueries(a.guardQueries), encoder, report.adapters);
    out["guard"] = guard.toJson();
  }
  if (!a.report.empty()) writeJson(a.report, out);
  if (!a.csv.empty()) writeText(a.csv, report.csv());
  if (!common.quiet) {
    for (const auto& r : report.rows) {
      std::printf("%-10s recall@1 %.3f  @5 %.3f  @10 %.3f\n", r.model.c_str(), r.at1, r.at5, r.at10);
    }
  }
  return 0;
}

std::unique_ptr<CompletionClient> remoteClient(const std::string& endpoint) {
  if (endpoint.empty()) throw Error(ErrorKind::InvalidConfig, "remote backend needs --endpoint");
  return makeHttpCompletionClient(endpoint);
}

struct EvalFetcherArgs {
  std::string catalog;
  std::string projects;
  std::string methods = "llm,knn,hybrid";
  std::string ranker = "lexical";
  std::string script;
  std::string endpoint;
  std::string adapters;
  std::string report;
  std::optional<std::uint64_t> shuffleSeed;
  EncoderOptions enc;
};

int runEvalFetcher(EvalFetcherArgs& a) {
  const auto catalog = NodeCatalog::load(a.catalog);
  const auto projects = loadProjects(a.projects);
  const auto encoder = a.enc.make();
  const auto adapters = adaptersOrIdentity(a.adapters, encoder.dim());
  const auto catalogIndex = buildExact(catalog.asCorpus(), encoder, adapters);

  std::vector<FetchMethod> methods;
  for (const auto& m : splitList(a.methods)) methods.push_back(parseFetchMethod(m));

  std::unique_ptr<CompletionClient> client;
  std::unique_ptr<Ranker> ranker;
  if (a.ranker == "lexical") {
    ranker = std::make_unique<LexicalRanker>();
  } else if (a.ranker == "scripted") {
    if (a.script.empty()) throw Error(ErrorKind::InvalidConfig, "scripted ranker needs --script");
    ranker = std::make_unique<ScriptedRanker>(ScriptedRanker::load(a.script));
  } else if (a.ranker == "remote") {
    client = remoteClient(a.endpoint);
    ranker = std::make_unique<CompletionRanker>(*client);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown ranker '" + a.ranker + "' (lexical, scripted, remote)");
  }

  const FetchEvalContext ctx{catalog, catalogIndex, adapters, encoder, *ranker, a.shuffleSeed};
  const auto report = evaluateFetchers(projects, methods, ctx);
  if (!a.report.empty()) writeJson(a.report, report.toJson());
  if (!common.quiet) {
    for (const auto& m : report.methods) {
      std::printf("%-7s T1 %.3f  T5 %.3f  T20 %.3f  latency %.2f ms  ranker calls %zu\n",
                  fetchMethodName(m.method).c_str(), m.rateAt1, m.rateAt5, m.rateAt20, m.meanLatencyMs,
                  m.rankerCalls);
    }
  }
  return 0;
}

struct EvalAgentArgs {
  std::string benchmark;
  std::string index;
  std::string graph;
  std::string adapters;
  std::string vectors;
  std::string report;
  AgentOptions options;
};

int runEvalAgent(EvalAgentArgs& a) {
  const auto bench = KeywordBenchmark::load(a.benchmark);
  const auto ctx = SearchContext::load(a.index, a.adapters, a.vectors, a.graph);
  const auto report = runExperiment3(bench, ctx.index, ctx.adapters, ctx.encoder, ctx.graphPtr(), a.options);
  if (!a.report.empty()) writeJson(a.report, report.toJson());
  if (!common.quiet) {
    for (const AgentRun* run : {&report.base, &report.withPact}) {
      std::printf("%-10s average match %.3f  global match %.3f\n", run->label.c_str(), run->rates.average,
                  run->rates.global);
    }
  }
  return 0;
}

struct AgentRunArgs {
  std::string index;
  std::string graph;
  std::string adapters;
  std::string vectors;
  std::string policy = "rule";
  std::string endpoint;
  std::string question;
  std::string transcript;
  AgentOptions options;
};

int runAgentRun(AgentRunArgs& a) {
  const auto ctx = SearchContext::load(a.index, a.adapters, a.vectors, a.graph);
  ToolRegistry tools;
  tools.add(pactTool(ctx.index, ctx.adapters, ctx.encoder, ctx.graphPtr()));

  std::unique_ptr<CompletionClient> client;
  std::unique_ptr<Policy> policy;
  if (a.policy == "rule") {
    policy = std::make_unique<RulePolicy>(defaultAgentVocabulary());
  } else if (a.policy.rfind("scripted:", 0) == 0) {
    policy = std::make_unique<ScriptedPolicy>(ScriptedPolicy::load(a.policy.substr(9)));
  } else if (a.policy == "remote") {
    client = remoteClient(a.endpoint);
    policy = std::make_unique<CompletionPolicy>(*client);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown policy '" + a.policy + "' (rule, scripted:FILE, remote)");
  }

  const auto transcript = runAgent(a.question, *policy, tools, a.options);
  if (a.transcript.empty()) {
    std::cout << transcript.toJson().dump(2) << "\n";
  } else {
    writeJson(a.transcript, transcript.toJson());
    info(transcript.finalAnswer.empty() ? "stopped without an answer" : transcript.finalAnswer);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pact: typed-artifact embedding, search and evaluation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenArgs gen;
  auto* genCmd = app.add_subcommand("gen-synthetic", "generate the synthetic corpus, catalog and benchmarks");
  addCommon(genCmd);
  genCmd->add_option("-o,--out", gen.out, "output directory")->required();
  genCmd->add_option("--code-paths", gen.spec.codePaths, "code_path artifacts")->capture_default_str();
  genCmd->add_option("--teams", gen.spec.teams, "oncall_team artifacts")->capture_default_str();
  genCmd->add_option("--products", gen.spec.products, "product artifacts")->capture_default_str();
  genCmd->add_option("--noise", gen.spec.noiseRate, "link-noise rate")->capture_default_str();
  genCmd->add_option("--non-lexical", gen.spec.nonLexicalRate, "share of links without shared words")
      ->capture_default_str();
  genCmd->add_option("--catalog-nodes", gen.spec.catalogNodes, "product-node catalog size")->capture_default_str();
  genCmd->add_option("--projects", gen.spec.projects, "classification projects")->capture_default_str();
  genCmd->add_option("--questions", gen.spec.benchmarkQuestions, "keyword benchmark questions")
      ->capture_default_str();

  IngestArgs ingest;
  auto* ingestCmd = app.add_subcommand("ingest", "validate a corpus and optionally rewrite it with a template");
  addCommon(ingestCmd);
  ingestCmd->add_option("--corpus", ingest.corpus, "corpus JSONL")->required();
  ingestCmd->add_option("--template", ingest.templatePath, "JSON object mapping type to field order");
  ingestCmd->add_option("-o,--out", ingest.out, "rewritten corpus JSONL");

  TrainArgs tr;
  auto* trainCmd = app.add_subcommand("train", "fine-tune the query/context adapters on the training split");
  addCommon(trainCmd);
  trainCmd->add_option("--corpus", tr.corpus, "corpus JSONL")->required();
  trainCmd->add_option("-o,--out", tr.out, "adapter file")->required();
  trainCmd->add_option("--report", tr.report, "training report JSON");
  trainCmd->add_flag("--all-edges", tr.allEdges, "train on every edge instead of the training split");
  tr.enc.add(trainCmd);
  tr.train.add(trainCmd);

  BuildIndexArgs bi;
  auto* indexCmd = app.add_subcommand("build-index", "embed a corpus into an exact or PQ index");
  addCommon(indexCmd);
  indexCmd->add_option("--corpus", bi.corpus, "corpus JSONL")->required();
  indexCmd->add_option("--adapters", bi.adapters, "adapter file (identity when omitted)");
  indexCmd->add_option("-o,--out", bi.out, "index file")->required();
  indexCmd->add_flag("--pq", bi.pq, "train a product-quantization codebook");
  indexCmd->add_option("--m", bi.m, "PQ subspaces")->capture_default_str();
  indexCmd->add_option("--ksub", bi.ksub, "centroids per subspace")->capture_default_str();
  indexCmd->add_option("--iters", bi.iters, "k-means iterations")->capture_default_str();
  indexCmd->add_flag("--drop-exact", bi.dropExact, "store PQ codes only");
  indexCmd->add_flag("--cosine", bi.cosine, "L2-normalize stored vectors");
  bi.enc.add(indexCmd);

  KnnArgs knn;
  auto* knnCmd = app.add_subcommand("knn-graph", "build the KNN semantic graph over an index");
  addCommon(knnCmd);
  knnCmd->add_option("--index", knn.index, "index file")->required();
  knnCmd->add_option("-k,--k", knn.k, "neighbours per node")->capture_default_str();
  knnCmd->add_option("-o,--out", knn.out, "graph JSONL")->required();

  SearchArgs sr;
  auto* searchCmd = app.add_subcommand("search", "query an index");
  addCommon(searchCmd);
  searchCmd->add_option("--index", sr.index, "index file")->required();
  searchCmd->add_option("--graph", sr.graph, "KNN graph for enrichment");
  searchCmd->add_option("--adapters", sr.adapters, "adapter file (identity when omitted)");
  searchCmd->add_option("--vectors", sr.vectors, "precomputed vectors when the index uses them");
  searchCmd->add_option("-k,--k", sr.k, "results")->capture_default_str();
  searchCmd->add_option("--types", sr.types, "comma-separated artifact types");
  searchCmd->add_option("--hops", sr.hops, "graph enrichment hops")->capture_default_str();
  searchCmd->add_flag("--no-rerank", sr.noRerank, "PQ: skip exact rescoring");
  searchCmd->add_flag("--cosine", sr.cosine, "normalize the query (pair with a --cosine index)");
  searchCmd->add_flag("--pretty", sr.pretty, "human-readable table instead of JSON");
  searchCmd->add_option("query", sr.query, "query text")->required();

  EvalRecallArgs er;
  auto* recallCmd = app.add_subcommand("eval-recall", "recall@{1,5,10} on held-out links (heuristic, identity, tuned)");
  addCommon(recallCmd);
  recallCmd->add_option("--corpus", er.corpus, "corpus JSONL")->required();
  recallCmd->add_option("--adapters", er.adapters, "evaluate these adapters instead of training");
  recallCmd->add_option("--adapters-out", er.adaptersOut, "save the evaluated adapters");
  recallCmd->add_option("--relation", er.relation, "held-out relation to score")->capture_default_str();
  recallCmd->add_option("--report", er.report, "report JSON");
  recallCmd->add_option("--csv", er.csv, "plot-ready CSV");
  recallCmd->add_option("--guard-corpus", er.guardCorpus, "held-out task corpus for the generalization check");
  recallCmd->add_option("--guard-queries", er.guardQueries, "held-out task queries JSONL {query, relevant}");
  er.enc.add(recallCmd);
  er.train.add(recallCmd);

  EvalFetcherArgs ef;
  auto* fetchCmd = app.add_subcommand("eval-fetcher", "compare product-node classification methods");
  addCommon(fetchCmd);
  fetchCmd->add_option("--catalog", ef.catalog, "node catalog JSONL")->required();
  fetchCmd->add_option("--projects", ef.projects, "projects JSONL")->required();
  fetchCmd->add_option("--methods", ef.methods, "comma-separated: llm, knn, hybrid")->capture_default_str();
  fetchCmd->add_option("--ranker", ef.ranker, "lexical | scripted | remote")->capture_default_str();
  fetchCmd->add_option("--script", ef.script, "scripted ranker replies, JSON array of id arrays");
  fetchCmd->add_option("--endpoint", ef.endpoint, "completion endpoint URL for the remote ranker");
  fetchCmd->add_option("--adapters", ef.adapters, "adapter file (identity when omitted)");
  fetchCmd->add_option("--shuffle-seed", ef.shuffleSeed, "shuffle the catalog before batching");
  fetchCmd->add_option("--report", ef.report, "report JSON");
  ef.enc.add(fetchCmd);

  EvalAgentArgs ea;
  auto* evalAgentCmd = app.add_subcommand("eval-agent", "keyword match rates of the rule agent with and without search");
  addCommon(evalAgentCmd);
  evalAgentCmd->add_option("--benchmark", ea.benchmark, "benchmark JSONL")->required();
  evalAgentCmd->add_option("--index", ea.index, "index file")->required();
  evalAgentCmd->add_option("--graph", ea.graph, "KNN graph for enrichment");
  evalAgentCmd->add_option("--adapters", ea.adapters, "adapter file (identity when omitted)");
  evalAgentCmd->add_option("--vectors", ea.vectors, "precomputed vectors when the index uses them");
  evalAgentCmd->add_option("--max-steps", ea.options.maxSteps, "step limit per question")->capture_default_str();
  evalAgentCmd->add_option("--observation-budget", ea.options.observationBudget, "characters kept per observation")
      ->capture_default_str();
  evalAgentCmd->add_option("--report", ea.report, "report JSON");

  AgentRunArgs ar;
  auto* agentCmd = app.add_subcommand("agent-run", "answer one question with the search agent");
  addCommon(agentCmd);
  agentCmd->add_option("--index", ar.index, "index file")->required();
  agentCmd->add_option("--graph", ar.graph, "KNN graph for enrichment");
  agentCmd->add_option("--adapters", ar.adapters, "adapter file (identity when omitted)");
  agentCmd->add_option("--vectors", ar.vectors, "precomputed vectors when the index uses them");
  agentCmd->add_option("--policy", ar.policy, "rule | scripted:FILE | remote")->capture_default_str();
  agentCmd->add_option("--endpoint", ar.endpoint, "completion endpoint URL for the remote policy");
  agentCmd->add_option("--question", ar.question, "question text")->required();
  agentCmd->add_option("--max-steps", ar.options.maxSteps, "step limit")->capture_default_str();
  agentCmd->add_option("--observation-budget", ar.options.observationBudget, "characters kept per observation")
      ->capture_default_str();
  agentCmd->add_option("--transcript", ar.transcript, "transcript JSON (standard output when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return 2;
  }

  try {
    if (!common.config.empty()) applyConfig(app.get_subcommands().front(), common.config);
    if (genCmd->parsed()) return runGen(gen);
    if (ingestCmd->parsed()) return runIngest(ingest);
    if (trainCmd->parsed()) return runTrain(tr);
    if (indexCmd->parsed()) return runBuildIndex(bi);
    if (knnCmd->parsed()) return runKnn(knn);
    if (searchCmd->parsed()) return runSearch(sr);
    if (recallCmd->parsed()) return runEvalRecall(er);
    if (fetchCmd->parsed()) return runEvalFetcher(ef);
    if (evalAgentCmd->parsed()) return runEvalAgent(ea);
    if (agentCmd->parsed()) return runAgentRun(ar);
  } catch (const std::exception& e) {
    std::string kind = "Error";
    std::string message = e.what();
    if (const auto* pe = dynamic_cast<const Error*>(&e)) {
      kind = std::string(errorKindName(pe->kind()));
      message = pe->detail();
    }
    if (common.jsonErrors) {
      std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    } else {
      std::cerr << "pact: " << kind << ": " << message << "\n";
    }
    return 1;
  }
  return 2;
}
