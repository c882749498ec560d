#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pact/agent.hpp"
#include "pact/trainer.hpp"

namespace pact {

// 1-based ranks, 0 meaning "not retrieved".
double recallAtK(const std::vector<std::size_t>& truthRanks, std::size_t k);
// Single relevant item at 1-based rank r: 1/log2(r+1) when r <= k, else 0.
double ndcgAtK(std::size_t truthRank, std::size_t k);

struct KeywordItem {
  std::string question;
  std::vector<std::string> keywords;  // lowercase
};

struct KeywordBenchmark {
  std::vector<KeywordItem> items;

  // JSONL {"question","keywords":[...]}; keywords are lowercased on load.
  static KeywordBenchmark load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct MatchRates {
  double average = 0.0;
  double global = 0.0;
  std::vector<std::size_t> matchedPerItem;
};

// Case-insensitive substring matching. Throws BenchShapeMismatch.
MatchRates matchRates(const KeywordBenchmark& bench, const std::vector<std::string>& answers);

struct Experiment1Config {
  TrainConfig train;
  std::string relation = "owned_by";
};

struct RecallRow {
  std::string model;
  double at1 = 0, at5 = 0, at10 = 0;
  std::vector<std::size_t> ranks;
};

struct Experiment1Report {
  std::size_t queries = 0;
  std::vector<RecallRow> rows;  // heuristic, identity, fine-tuned
  TrainReport training;
  AdapterPair adapters;

  const RecallRow& row(const std::string& model) const;
  nlohmann::json toJson() const;
  std::string csv() const;
};

// Splits edges, trains on the training part (unless `adapters` is given) and
// scores held-out edges of `relation` by ranking every artifact of the target
// type for the source artifact.
Experiment1Report runExperiment1(const Corpus& corpus, const BaseEncoder& encoder, const Experiment1Config& cfg,
                                 const std::optional<AdapterPair>& adapters = std::nullopt);

struct GuardQuery {
  std::string query;
  ArtifactId relevant;
};

std::vector<GuardQuery> loadGuardQueries(const std::filesystem::path& path);
void saveGuardQueries(const std::vector<GuardQuery>& queries, const std::filesystem::path& path);

struct GuardRow {
  std::string model;
  double ndcg10 = 0.0;
  double avgRelevantTop5 = 0.0;
};

struct GuardReport {
  std::vector<GuardRow> rows;  // identity, fine-tuned
  std::vector<std::size_t> identityRanks, tunedRanks;

  nlohmann::json toJson() const;
};

GuardReport runGeneralizationGuard(const Corpus& guardCorpus, const std::vector<GuardQuery>& queries,
                                   const BaseEncoder& encoder, const AdapterPair& tuned);

struct AgentRun {
  std::string label;
  MatchRates rates;
  std::vector<std::string> answers;
  std::vector<Transcript> transcripts;
};

struct Experiment3Report {
  AgentRun base;
  AgentRun withPact;

  nlohmann::json toJson() const;
};

// Rule-policy agent without any tool, then with the PACT search tool.
Experiment3Report runExperiment3(const KeywordBenchmark& bench, const VectorIndex& index,
                                 const AdapterPair& adapters, const BaseEncoder& encoder,
                                 const KnnGraph* graph = nullptr, const AgentOptions& options = {});

}  // namespace pact
