#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pact/completion.hpp"
#include "pact/knn_graph.hpp"
#include "pact/search.hpp"

namespace pact {

struct ToolSpec {
  std::string name;
  std::string description;
  std::function<std::string(const std::string&)> invoke;
};

class ToolRegistry {
 public:
  // Throws InvalidConfig on a duplicate name.
  void add(ToolSpec tool);
  const ToolSpec* find(const std::string& name) const;
  const std::vector<ToolSpec>& tools() const { return tools_; }
  bool empty() const { return tools_.empty(); }

 private:
  std::vector<ToolSpec> tools_;
};

struct AgentAction {
  std::string tool;
  std::string input;

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

struct AgentStep {
  std::string thought;
  std::optional<AgentAction> action;
  std::optional<std::string> observation;

  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

enum class StopReason { Normal, MaxSteps };

struct Transcript {
  std::vector<AgentStep> steps;
  std::string finalAnswer;
  StopReason stopped = StopReason::Normal;

  std::size_t toolCalls() const;
  nlohmann::json toJson() const;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// What a policy sees on each turn.
struct PolicyContext {
  const std::string& question;
  const std::string& prompt;  // system prompt, question and the scratchpad so far
  const std::vector<AgentStep>& steps;
  const ToolRegistry& tools;
  bool reprompt = false;  // previous output did not parse
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string respond(const PolicyContext& context) = 0;
};

// Replays pre-authored outputs; repeats a bare "Thought:" once exhausted.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}
  // JSON list of strings.
  static ScriptedPolicy load(const std::filesystem::path& path);
  std::string respond(const PolicyContext& context) override;

 private:
  std::vector<std::string> outputs_;
  std::size_t next_ = 0;
};

// Deterministic search-driven policy. Runs of question words outside the
// vocabulary become search terms; identifier-like tokens in the top hit's
// snippet that were not searched yet become follow-up searches; otherwise it
// answers with the distinct snippets it has seen.
class RulePolicy final : public Policy {
 public:
  explicit RulePolicy(std::set<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {}
  std::string respond(const PolicyContext& context) override;

  std::vector<std::string> searchTerms(const std::string& question) const;

 private:
  std::set<std::string> vocabulary_;
};

// Common English question words; a reasonable vocabulary for RulePolicy.
std::set<std::string> defaultAgentVocabulary();

class CompletionPolicy final : public Policy {
 public:
  explicit CompletionPolicy(CompletionClient& client) : client_(client) {}
  std::string respond(const PolicyContext& context) override;

 private:
  CompletionClient& client_;
};

struct ParsedOutput {
  std::string thought;
  std::optional<AgentAction> action;
  std::optional<std::string> finalAnswer;
};

// Strict grammar: "Action: <Tool> [Query: <text>]" or "Final Answer: <text>",
// optionally preceded by "Thought: ...". Nullopt when neither or both appear.
std::optional<ParsedOutput> parsePolicyOutput(const std::string& text);

std::string systemPrompt(const ToolRegistry& tools);
inline constexpr const char* kFormatReminder =
    "Reply with exactly one of:\nAction: <tool name> [Query: <search text>]\nFinal Answer: <answer>";

struct AgentOptions {
  std::size_t maxSteps = 8;
  std::size_t observationBudget = 1000;  // characters kept per observation
};

Transcript runAgent(const std::string& question, Policy& policy, const ToolRegistry& tools,
                    const AgentOptions& options = {});

inline constexpr const char* kPactToolName = "PACT Search Tool";

// Search tool over the index; renders "N. type | id | snippet | score" lines.
ToolSpec pactTool(const VectorIndex& index, const AdapterPair& adapters, const BaseEncoder& encoder,
                  const KnnGraph* graph = nullptr, std::size_t k = 5);

}  // namespace pact
