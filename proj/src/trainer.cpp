#include "pact/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "pact/error.hpp"
#include "pact/kernels.hpp"
#include "pact/rng.hpp"

namespace pact {

SplitRatio SplitRatio::parse(const std::string& text) {
  const auto colon = text.find(':');
  SplitRatio r;
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    std::size_t used = 0;
    const long a = std::stol(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("trailing");
    const std::string rhs = text.substr(colon + 1);
    const long b = std::stol(rhs, &used);
    if (used != rhs.size()) throw std::invalid_argument("trailing");
    if (a <= 0 || b <= 0) throw std::invalid_argument("non-positive");
    r.train = static_cast<unsigned>(a);
    r.test = static_cast<unsigned>(b);
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidConfig, "split ratio must look like 5:1, got '" + text + "'");
  }
  return r;
}

void TrainConfig::validate() const {
  if (negativesPerPositive < 1) throw Error(ErrorKind::InvalidConfig, "negatives_per_positive must be >= 1");
  if (!(learningRate > 0.0) || !std::isfinite(learningRate)) {
    throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
  }
  if (batchSize < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (split.train == 0 || split.test == 0) throw Error(ErrorKind::InvalidConfig, "bad split ratio");
  if (!(twoHopWeight >= 0.0)) throw Error(ErrorKind::InvalidConfig, "two_hop_weight must be >= 0");
}

nlohmann::json TrainConfig::toJson() const {
  return {{"negatives_per_positive", negativesPerPositive},
          {"epochs", epochs},
          {"learning_rate", learningRate},
          {"batch_size", batchSize},
          {"seed", seed},
          {"include_two_hop", includeTwoHop},
          {"in_batch_negatives", inBatchNegatives},
          {"train_test_split_ratio", split.str()},
          {"two_hop_weight", twoHopWeight},
          {"freeze_context", freezeContext},
          {"tied", tied}};
}

nlohmann::json TrainReport::toJson() const {
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : epochs) ep.push_back({{"epoch", e.epoch}, {"mean_loss", e.meanLoss}});
  return {{"epochs", ep},
          {"examples", examples},
          {"initial_mean_loss", initialMeanLoss},
          {"config", config.toJson()}};
}

EdgeSplit splitEdges(const LinkGraph& graph, SplitRatio ratio, std::uint64_t seed) {
  const auto& edges = graph.edges();
  const std::size_t n = edges.size();
  const auto testCount = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * ratio.test / static_cast<double>(ratio.train + ratio.test)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mixSeed(seed, 0x5b117));
  rng.shuffle(order);
  std::vector<bool> isTest(n, false);
  for (std::size_t i = 0; i < testCount; ++i) isTest[order[i]] = true;

  EdgeSplit out;
  for (std::size_t i = 0; i < n; ++i) {
    if (isTest[i]) {
      out.test.push_back(edges[i]);
    } else {
      out.train.addEdge(edges[i]);
    }
  }
  return out;
}

namespace {

using PairSet = std::set<std::pair<ArtifactId, ArtifactId>>;

}  // namespace

std::vector<TrainingExample> buildExamples(const Corpus& corpus, const LinkGraph& graph,
                                           const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::pair<ArtifactId, ArtifactId>> positives;
  std::vector<bool> twoHop;
  for (const auto& e : graph.edges()) {
    positives.emplace_back(e.src, e.dst);
    twoHop.push_back(false);
  }
  PairSet twoHopSet;
  if (config.includeTwoHop) {
    for (auto& p : twoHopPairs(graph)) {
      twoHopSet.insert(p);
      positives.push_back(std::move(p));
      twoHop.push_back(true);
    }
  }

  Rng rng(seed);
  std::vector<TrainingExample> out;
  out.reserve(positives.size());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& [query, positive] = positives[i];
    const std::string& type = corpus.at(positive).type;
    std::vector<std::size_t> candidates;
    for (std::size_t idx : corpus.ofType(type)) {
      const ArtifactId& x = corpus.artifacts[idx].id;
      if (x == positive || x == query) continue;
      if (graph.linkedEitherWay(query, x)) continue;
      if (twoHopSet.contains({query, x}) || twoHopSet.contains({x, query})) continue;
      candidates.push_back(idx);
    }
    if (candidates.size() < config.negativesPerPositive) {
      throw Error(ErrorKind::NotEnoughNegatives,
                  "edge " + query.value + " -> " + positive.value + " has " +
                      std::to_string(candidates.size()) + " eligible '" + type + "' negatives, needs " +
                      std::to_string(config.negativesPerPositive));
    }
    TrainingExample ex;
    ex.query = query;
    ex.positive = positive;
    ex.twoHop = twoHop[i];
    ex.weight = twoHop[i] ? config.twoHopWeight : 1.0;
    for (std::size_t pick : rng.sampleIndices(candidates.size(), config.negativesPerPositive)) {
      ex.negatives.push_back(corpus.artifacts[candidates[pick]].id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

struct Contrast {
  double loss = 0.0;
  std::vector<double> grad;  // dLoss/ds_j: p_j - [j == 0]
};

void requireFinite(double s) {
  if (!std::isfinite(s)) throw Error(ErrorKind::NonFiniteScore, "score is not finite");
}

// scores[0] is the positive.
Contrast contrast(std::span<const double> scores) {
  for (double s : scores) requireFinite(s);
  std::size_t argmax = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[argmax]) argmax = j;
  }
  const double m = scores[argmax];
  Contrast c;
  c.grad.resize(scores.size());
  double rest = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    c.grad[j] = std::exp(scores[j] - m);
    if (j != argmax) rest += c.grad[j];
  }
  const double total = 1.0 + rest;
  for (double& g : c.grad) g /= total;
  c.grad[0] -= 1.0;
  c.loss = (m - scores[0]) + std::log1p(rest);
  return c;
}

}  // namespace

double infoNceLoss(double positive, std::span<const double> negatives) {
  if (negatives.empty()) throw Error(ErrorKind::InvalidConfig, "infoNceLoss needs at least one negative");
  std::vector<double> scores;
  scores.reserve(negatives.size() + 1);
  scores.push_back(positive);
  scores.insert(scores.end(), negatives.begin(), negatives.end());
  return contrast(scores).loss;
}

LossGradient lossGradient(const TrainingExample& example, const Corpus& corpus,
                          const BaseEncoder& encoder, const AdapterPair& adapters) {
  const std::size_t d = adapters.dim();
  const EmbeddingVector a = encoder.encodeArtifact(corpus.at(example.query));
  const EmbeddingVector q = adapters.query.apply(a);

  std::vector<EmbeddingVector> bases;
  bases.push_back(encoder.encodeArtifact(corpus.at(example.positive)));
  for (const auto& n : example.negatives) bases.push_back(encoder.encodeArtifact(corpus.at(n)));

  std::vector<EmbeddingVector> contexts;
  std::vector<double> scores;
  for (const auto& b : bases) {
    contexts.push_back(adapters.context.apply(b));
    scores.push_back(similarity(q, contexts.back()));
  }
  const Contrast c = contrast(scores);

  // dL/dQ = (sum_j g_j c_j) a^T and dL/dC = q (sum_j g_j b_j)^T.
  EmbeddingVector u(d, 0.0), w(d, 0.0);
  for (std::size_t j = 0; j < bases.size(); ++j) {
    for (std::size_t t = 0; t < d; ++t) {
      u[t] += c.grad[j] * contexts[j][t];
      w[t] += c.grad[j] * bases[j][t];
    }
  }
  LossGradient out{c.loss * example.weight, Matrix::zeros(d), Matrix::zeros(d)};
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t col = 0; col < d; ++col) {
      out.dQuery(r, col) = example.weight * u[r] * a[col];
      out.dContext(r, col) = example.weight * q[r] * w[col];
    }
  }
  return out;
}

namespace {

struct PositionalExample {
  std::size_t query;
  std::size_t positive;
  std::vector<std::size_t> negatives;
  double weight;
};

// Rank-1 factors of one example's gradient plus its loss.
struct ExampleTerms {
  double loss = 0.0;
  EmbeddingVector u;  // sum_j g_j c_j
  EmbeddingVector q;  // Q a
  EmbeddingVector w;  // sum_j g_j b_j
};

class Trainer {
 public:
  Trainer(const Corpus& corpus, const LinkGraph& graph, const TrainConfig& config,
          const BaseEncoder& encoder)
      : corpus_(corpus), config_(config), dim_(encoder.dim()) {
    base_.resize(corpus.artifacts.size());
    for (std::size_t i = 0; i < corpus.artifacts.size(); ++i) {
      try {
        base_[i] = encoder.encodeArtifact(corpus.artifacts[i]);
      } catch (const Error& e) {
        throw Error(e.kind(), "artifact '" + corpus.artifacts[i].id.value + "': " + e.detail());
      }
    }
    const auto examples = buildExamples(corpus, graph, config, mixSeed(config.seed, 1));
    for (const auto& ex : examples) {
      PositionalExample p{*corpus.find(ex.query), *corpus.find(ex.positive), {}, ex.weight};
      for (const auto& n : ex.negatives) p.negatives.push_back(*corpus.find(n));
      examples_.push_back(std::move(p));
    }
    const std::size_t n = corpus.artifacts.size();
    auto mark = [&](const ArtifactId& x, const ArtifactId& y) {
      const std::size_t i = *corpus.find(x), j = *corpus.find(y);
      linked_.insert(i * n + j);
      linked_.insert(j * n + i);
    };
    for (const auto& e : graph.edges()) mark(e.src, e.dst);
    if (config.includeTwoHop) {
      for (const auto& [x, y] : twoHopPairs(graph)) mark(x, y);
    }
  }

  std::size_t exampleCount() const { return examples_.size(); }

  TrainResult run() {
    AdapterPair adapters = AdapterPair::identity(dim_);
    TrainReport report;
    report.config = config_;
    report.examples = examples_.size();
    if (examples_.empty()) return {adapters, report};

    report.initialMeanLoss = epoch(adapters, epochOrder(1), false);
    for (std::size_t e = 1; e <= config_.epochs; ++e) {
      const double mean = epoch(adapters, epochOrder(e), true);
      if (!std::isfinite(mean)) {
        throw Error(ErrorKind::TrainingDiverged, "mean loss is not finite in epoch " + std::to_string(e));
      }
      report.epochs.push_back({e, mean});
    }
    return {adapters, report};
  }

 private:
  std::vector<std::size_t> epochOrder(std::size_t epoch) const {
    std::vector<std::size_t> order(examples_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mixSeed(config_.seed, 1000 + epoch));
    rng.shuffle(order);
    return order;
  }

  // Weighted mean loss over the epoch, measured before each batch's update.
  double epoch(AdapterPair& adapters, const std::vector<std::size_t>& order, bool update) {
    double lossSum = 0.0, weightSum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config_.batchSize) {
      const std::size_t end = std::min(order.size(), start + config_.batchSize);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      const auto [bl, bw] = batchStep(adapters, batch, update);
      lossSum += bl;
      weightSum += bw;
    }
    return weightSum > 0.0 ? lossSum / weightSum : 0.0;
  }

  std::vector<std::size_t> candidatesFor(const PositionalExample& ex,
                                         std::span<const std::size_t> batch) const {
    std::vector<std::size_t> cands{ex.positive};
    cands.insert(cands.end(), ex.negatives.begin(), ex.negatives.end());
    if (!config_.inBatchNegatives) return cands;
    const std::size_t n = corpus_.artifacts.size();
    const std::string& type = corpus_.artifacts[ex.positive].type;
    for (std::size_t other : batch) {
      const std::size_t x = examples_[other].positive;
      if (corpus_.artifacts[x].type != type || x == ex.query) continue;
      if (linked_.contains(ex.query * n + x)) continue;
      if (std::find(cands.begin(), cands.end(), x) != cands.end()) continue;
      cands.push_back(x);
    }
    return cands;
  }

  std::pair<double, double> batchStep(AdapterPair& adapters, std::span<const std::size_t> batch,
                                      bool update) {
    const std::size_t d = dim_;
    std::vector<std::vector<std::size_t>> cands(batch.size());
    std::vector<std::size_t> contextRows;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      cands[i] = candidatesFor(examples_[batch[i]], batch);
      for (std::size_t x : cands[i]) {
        if (slot.emplace(x, contextRows.size()).second) contextRows.push_back(x);
      }
    }

    std::vector<EmbeddingVector> ctx(contextRows.size(), EmbeddingVector(d));
    const auto nctx = static_cast<std::ptrdiff_t>(contextRows.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < nctx; ++r) {
      const auto u = static_cast<std::size_t>(r);
      kernels::serial::matVec(adapters.context.values, base_[contextRows[u]], ctx[u]);
    }

    std::vector<ExampleTerms> terms(batch.size());
    std::vector<int> failed(batch.size(), 0);
    const auto nb = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < nb; ++bi) {
      const auto i = static_cast<std::size_t>(bi);
      const auto& ex = examples_[batch[i]];
      ExampleTerms& t = terms[i];
      t.q.assign(d, 0.0);
      kernels::serial::matVec(adapters.query.values, base_[ex.query], t.q);
      std::vector<double> scores;
      scores.reserve(cands[i].size());
      for (std::size_t x : cands[i]) scores.push_back(kernels::dot(t.q, ctx[slot.at(x)]));
      Contrast c;
      try {
        c = contrast(scores);
      } catch (const Error&) {
        failed[i] = 1;
        continue;
      }
      t.loss = c.loss;
      t.u.assign(d, 0.0);
      t.w.assign(d, 0.0);
      for (std::size_t j = 0; j < cands[i].size(); ++j) {
        const auto& cj = ctx[slot.at(cands[i][j])];
        const auto& bj = base_[cands[i][j]];
        for (std::size_t k = 0; k < d; ++k) {
          t.u[k] += c.grad[j] * cj[k];
          t.w[k] += c.grad[j] * bj[k];
        }
      }
    }
    if (std::find(failed.begin(), failed.end(), 1) != failed.end()) {
      throw Error(ErrorKind::TrainingDiverged, "non-finite similarity score during training");
    }

    double lossSum = 0.0, weightSum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      lossSum += examples_[batch[i]].weight * terms[i].loss;
      weightSum += examples_[batch[i]].weight;
    }
    if (!update || weightSum == 0.0) return {lossSum, weightSum};

    // Fixed summation order over the batch keeps updates reproducible.
    const double scale = config_.learningRate / weightSum;
    const bool updateContext = !config_.freezeContext || config_.tied;
    Matrix dQ = Matrix::zeros(d), dC = Matrix::zeros(d);
    const auto nd = static_cast<std::ptrdiff_t>(d);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < nd; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& ex = examples_[batch[i]];
        const auto& t = terms[i];
        const double uq = ex.weight * t.u[r];
        const double qc = ex.weight * t.q[r];
        const auto& a = base_[ex.query];
        for (std::size_t col = 0; col < d; ++col) {
          dQ.values[r * d + col] += uq * a[col];
          dC.values[r * d + col] += qc * t.w[col];
        }
      }
    }
    if (config_.tied) {
      for (std::size_t i = 0; i < d * d; ++i) {
        adapters.query.values[i] -= scale * (dQ.values[i] + dC.values[i]);
      }
      adapters.context = adapters.query;
    } else {
      for (std::size_t i = 0; i < d * d; ++i) adapters.query.values[i] -= scale * dQ.values[i];
      if (updateContext) {
        for (std::size_t i = 0; i < d * d; ++i) adapters.context.values[i] -= scale * dC.values[i];
      }
    }
    return {lossSum, weightSum};
  }

  const Corpus& corpus_;
  TrainConfig config_;
  std::size_t dim_;
  std::vector<EmbeddingVector> base_;
  std::vector<PositionalExample> examples_;
  std::unordered_set<std::size_t> linked_;
};

}  // namespace

TrainResult train(const Corpus& corpus, const LinkGraph& graph, const TrainConfig& config,
                  const BaseEncoder& encoder) {
  config.validate();
  Trainer trainer(corpus, graph, config, encoder);
  return trainer.run();
}

}  // namespace pact
