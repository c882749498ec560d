#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pact/artifact.hpp"
#include "pact/embedder.hpp"

namespace pact {

struct SplitRatio {
  unsigned train = 5;
  unsigned test = 1;

  // "5:1"; both parts positive integers.
  static SplitRatio parse(const std::string& text);
  std::string str() const { return std::to_string(train) + ":" + std::to_string(test); }
};

struct TrainConfig {
  std::size_t negativesPerPositive = 4;
  std::size_t epochs = 5;
  double learningRate = 0.5;
  std::size_t batchSize = 32;
  std::uint64_t seed = 7;
  bool includeTwoHop = true;
  bool inBatchNegatives = true;
  SplitRatio split;
  double twoHopWeight = 1.0;
  bool freezeContext = false;
  // One shared matrix for query and context.
  bool tied = false;

  void validate() const;
  nlohmann::json toJson() const;
};

struct TrainingExample {
  ArtifactId query;
  ArtifactId positive;
  std::vector<ArtifactId> negatives;
  double weight = 1.0;
  bool twoHop = false;
};

struct EdgeSplit {
  LinkGraph train;
  std::vector<LinkEdge> test;
};

// Seeded partition of the edge list; test size is round(n * test / (train + test)).
EdgeSplit splitEdges(const LinkGraph& graph, SplitRatio ratio, std::uint64_t seed);

// One example per direct edge, then one per 2-hop pair when enabled.
// Negatives share the positive's type and are not linked to the query.
std::vector<TrainingExample> buildExamples(const Corpus& corpus, const LinkGraph& graph,
                                           const TrainConfig& config, std::uint64_t seed);

// -log(exp(s+) / (exp(s+) + sum_j exp(s-_j))), evaluated via log-sum-exp.
double infoNceLoss(double positive, std::span<const double> negatives);

struct LossGradient {
  double loss = 0.0;
  Matrix dQuery;
  Matrix dContext;
};

// Exact gradient of the example's loss with respect to both adapter matrices.
LossGradient lossGradient(const TrainingExample& example, const Corpus& corpus,
                          const BaseEncoder& encoder, const AdapterPair& adapters);

struct EpochStats {
  std::size_t epoch = 0;
  double meanLoss = 0.0;
};

struct TrainReport {
  double initialMeanLoss = 0.0;
  std::vector<EpochStats> epochs;
  std::size_t examples = 0;
  TrainConfig config;

  nlohmann::json toJson() const;
};

struct TrainResult {
  AdapterPair adapters;
  TrainReport report;
};

// Mini-batch gradient descent from identity adapters on `graph`'s edges.
TrainResult train(const Corpus& corpus, const LinkGraph& graph, const TrainConfig& config,
                  const BaseEncoder& encoder);

}  // namespace pact
