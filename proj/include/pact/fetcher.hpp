#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pact/completion.hpp"
#include "pact/index.hpp"

namespace pact {

inline constexpr const char* kCatalogNodeType = "product_node";

struct CatalogNode {
  ArtifactId id;
  std::string title;
  std::string description;
};

class NodeCatalog {
 public:
  NodeCatalog() = default;
  explicit NodeCatalog(std::vector<CatalogNode> nodes);

  // JSONL lines {"id","title","description"}.
  static NodeCatalog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::vector<CatalogNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const CatalogNode* find(const ArtifactId& id) const;
  // Nodes as artifacts with fields (title, description).
  Corpus asCorpus() const;

 private:
  std::vector<CatalogNode> nodes_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct Project {
  std::string description;
  ArtifactId truth;
};

// JSONL lines {"description","truth"}.
std::vector<Project> loadProjects(const std::filesystem::path& path);
void saveProjects(const std::vector<Project>& projects, const std::filesystem::path& path);

// Picks and orders at most `selectCount` of the candidates for a project.
class Ranker {
 public:
  virtual ~Ranker() = default;
  virtual std::vector<ArtifactId> select(const std::string& project,
                                         std::span<const CatalogNode* const> candidates,
                                         std::size_t selectCount) = 0;
  virtual std::string name() const = 0;
};

// Token-F1 between the project text and "title description"; stable on ties.
class LexicalRanker final : public Ranker {
 public:
  std::vector<ArtifactId> select(const std::string& project, std::span<const CatalogNode* const> candidates,
                                 std::size_t selectCount) override;
  std::string name() const override { return "lexical"; }
};

// Replays pre-recorded responses in order; runs dry with an empty answer.
class ScriptedRanker final : public Ranker {
 public:
  explicit ScriptedRanker(std::vector<std::vector<ArtifactId>> responses)
      : responses_(std::move(responses)) {}
  // JSON array of arrays of ids.
  static ScriptedRanker load(const std::filesystem::path& path);

  std::vector<ArtifactId> select(const std::string& project, std::span<const CatalogNode* const> candidates,
                                 std::size_t selectCount) override;
  std::string name() const override { return "scripted"; }

 private:
  std::vector<std::vector<ArtifactId>> responses_;
  std::size_t next_ = 0;
};

// Numbered-candidate prompt to a completion backend; one retry when the reply
// does not parse into candidate ids, then RankerViolation.
class CompletionRanker final : public Ranker {
 public:
  explicit CompletionRanker(CompletionClient& client) : client_(client) {}

  static std::string buildPrompt(const std::string& project, std::span<const CatalogNode* const> candidates,
                                 std::size_t selectCount);
  // Nullopt when the reply names a non-candidate, repeats an id, or is empty.
  static std::optional<std::vector<ArtifactId>> parseReply(const std::string& reply,
                                                           std::span<const CatalogNode* const> candidates,
                                                           std::size_t selectCount);

  std::vector<ArtifactId> select(const std::string& project, std::span<const CatalogNode* const> candidates,
                                 std::size_t selectCount) override;
  std::string name() const override { return "remote"; }

 private:
  CompletionClient& client_;
};

inline constexpr std::size_t kBatchSize = 40;
inline constexpr std::size_t kKeepPerBatch = 20;
inline constexpr std::size_t kShortlist = 40;

struct Classification {
  std::vector<ArtifactId> ranked;
  std::size_t rankerCalls = 0;
  // Divide-and-conquer only: candidate list entering each round, then the
  // list handed to the final call.
  std::vector<std::vector<ArtifactId>> rounds;
};

// Batches of 40 in catalog order (or shuffled with `shuffleSeed`), keep up to
// 20 per batch, repeat until at most 40 remain, then one ordering call.
Classification classifyLlmOnly(const std::string& project, const NodeCatalog& catalog, Ranker& ranker,
                               std::size_t k, std::optional<std::uint64_t> shuffleSeed = std::nullopt);

Classification classifyKnn(const std::string& project, const VectorIndex& catalogIndex,
                           const AdapterPair& adapters, const BaseEncoder& encoder, std::size_t k);

// KNN shortlist then one ranker call over it.
Classification classifyHybrid(const std::string& project, const VectorIndex& catalogIndex,
                              const NodeCatalog& catalog, Ranker& ranker, const AdapterPair& adapters,
                              const BaseEncoder& encoder, std::size_t k, std::size_t shortlist = kShortlist);

enum class FetchMethod { LlmOnly, Knn, Hybrid };
std::string fetchMethodName(FetchMethod m);
FetchMethod parseFetchMethod(const std::string& name);

struct MethodReport {
  FetchMethod method = FetchMethod::Knn;
  std::size_t hitsAt1 = 0, hitsAt5 = 0, hitsAt20 = 0;
  double rateAt1 = 0, rateAt5 = 0, rateAt20 = 0;
  double meanLatencyMs = 0;
  std::size_t rankerCalls = 0;
  std::vector<std::size_t> truthRank;  // 1-based, 0 when not in the top 20
};

struct FetchRankReport {
  std::size_t queries = 0;
  std::vector<MethodReport> methods;

  const MethodReport& at(FetchMethod m) const;
  nlohmann::json toJson() const;
};

struct FetchEvalContext {
  const NodeCatalog& catalog;
  const VectorIndex& catalogIndex;
  const AdapterPair& adapters;
  const BaseEncoder& encoder;
  Ranker& ranker;
  std::optional<std::uint64_t> shuffleSeed;
};

// T1/T5/T20 hit counts and rates plus mean wall-clock latency per method.
FetchRankReport evaluateFetchers(const std::vector<Project>& projects, const std::vector<FetchMethod>& methods,
                                 const FetchEvalContext& ctx);

// 1-based rank of `truth` in `ranked`, 0 if absent.
std::size_t rankOf(const std::vector<ArtifactId>& ranked, const ArtifactId& truth);

}  // namespace pact
