#include "pact/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pact/error.hpp"

namespace pact {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool startsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Cuts to at most `budget` bytes without splitting a UTF-8 sequence.
std::string truncateUtf8(const std::string& s, std::size_t budget) {
  if (s.size() <= budget) return s;
  std::size_t cut = budget;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

std::optional<AgentAction> parseAction(const std::string& rest) {
  const auto open = rest.find("[Query:");
  if (open == std::string::npos || rest.empty() || rest.back() != ']') return std::nullopt;
  AgentAction action{trim(std::string_view(rest).substr(0, open)),
                     trim(std::string_view(rest).substr(open + 7, rest.size() - open - 8))};
  if (action.tool.empty()) return std::nullopt;
  return action;
}

struct HitLine {
  std::string type;
  std::string id;
  std::string snippet;
};

// Inverse of the tool's rendering: "N. type | id | snippet | score".
std::vector<HitLine> parseHitLines(const std::string& observation) {
  std::vector<HitLine> out;
  std::istringstream in(observation);
  std::string line;
  while (std::getline(in, line)) {
    const auto dot = line.find(". ");
    if (dot == std::string::npos || dot == 0 ||
        !std::all_of(line.begin(), line.begin() + static_cast<long>(dot), ::isdigit)) {
      continue;
    }
    std::vector<std::string> cols;
    std::string_view rest = std::string_view(line).substr(dot + 2);
    for (std::size_t pos; (pos = rest.find(" | ")) != std::string_view::npos;) {
      cols.emplace_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 3);
    }
    cols.emplace_back(rest);
    if (cols.size() < 4) continue;
    std::string snippet = cols[2];
    for (std::size_t i = 3; i + 1 < cols.size(); ++i) snippet += " | " + cols[i];
    out.push_back({cols[0], cols[1], snippet});
  }
  return out;
}

std::string stripPunctuation(const std::string& token) {
  std::size_t b = 0, e = token.size();
  auto isPunct = [](char c) { return std::string_view(".,;:!?()[]{}'\"`").find(c) != std::string_view::npos; };
  while (b < e && isPunct(token[b])) ++b;
  while (e > b && isPunct(token[e - 1])) --e;
  return token.substr(b, e - b);
}

bool identifierLike(const std::string& token) {
  const bool hasJoiner = token.find_first_of("-_/") != std::string::npos;
  const bool hasAlnum = std::any_of(token.begin(), token.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  });
  return hasJoiner && hasAlnum;
}

std::vector<std::string> whitespaceTokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) {
    tok = stripPunctuation(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::string renderScratchpad(const std::vector<AgentStep>& steps) {
  std::string out;
  for (const auto& s : steps) {
    if (!s.thought.empty()) out += "Thought: " + s.thought + "\n";
    if (s.action) out += "Action: " + s.action->tool + " [Query: " + s.action->input + "]\n";
    if (s.observation) out += "Observation: " + *s.observation + "\n";
  }
  return out;
}

}  // namespace

void ToolRegistry::add(ToolSpec tool) {
  if (find(tool.name) != nullptr) {
    throw Error(ErrorKind::InvalidConfig, "tool '" + tool.name + "' registered twice");
  }
  tools_.push_back(std::move(tool));
}

const ToolSpec* ToolRegistry::find(const std::string& name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::size_t Transcript::toolCalls() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const AgentStep& s) { return s.action.has_value(); }));
}

nlohmann::json Transcript::toJson() const {
  nlohmann::json js = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json step{{"thought", s.thought}, {"action", nullptr}, {"observation", nullptr}};
    if (s.action) step["action"] = {{"tool", s.action->tool}, {"input", s.action->input}};
    if (s.observation) step["observation"] = *s.observation;
    js.push_back(std::move(step));
  }
  return {{"steps", js},
          {"final_answer", finalAnswer},
          {"stopped", stopped == StopReason::Normal ? "normal" : "max_steps"}};
}

std::optional<ParsedOutput> parsePolicyOutput(const std::string& text) {
  ParsedOutput out;
  std::istringstream in(text);
  std::string line;
  bool inFinal = false;
  std::string finalText;
  while (std::getline(in, line)) {
    if (inFinal) {
      finalText += "\n" + line;
      continue;
    }
    const std::string t = trim(line);
    if (startsWith(t, "Thought:")) {
      out.thought = trim(std::string_view(t).substr(8));
    } else if (startsWith(t, "Action:")) {
      if (out.action) return std::nullopt;
      out.action = parseAction(trim(std::string_view(t).substr(7)));
      if (!out.action) return std::nullopt;
    } else if (startsWith(t, "Final Answer:")) {
      inFinal = true;
      finalText = std::string(std::string_view(t).substr(13));
    } else if (!t.empty() && out.thought.empty() && !out.action) {
      // Unlabelled leading text counts as the thought.
      out.thought = t;
    }
  }
  if (inFinal) {
    finalText = trim(finalText);
    if (finalText.empty()) return std::nullopt;
    out.finalAnswer = finalText;
  }
  if (out.action.has_value() == out.finalAnswer.has_value()) return std::nullopt;
  return out;
}

std::string systemPrompt(const ToolRegistry& tools) {
  std::string out = "Answer the question by reasoning step by step.\n";
  if (tools.empty()) {
    out += "No tools are available; answer from what you know.\n";
  } else {
    out += "You have access to the following tools:\n";
    for (const auto& t : tools.tools()) out += t.name + ": " + t.description + "\n";
    out += "To use a tool write:\nThought: <reasoning>\nAction: <tool name> [Query: <search text>]\n"
           "You will then receive an Observation with the tool output.\n";
  }
  out += "When you can answer write:\nThought: <reasoning>\nFinal Answer: <answer>\n";
  return out;
}

Transcript runAgent(const std::string& question, Policy& policy, const ToolRegistry& tools,
                    const AgentOptions& options) {
  if (options.maxSteps < 1) throw Error(ErrorKind::InvalidConfig, "max steps must be at least 1");
  Transcript transcript;
  const std::string header = systemPrompt(tools) + "\nQuestion: " + question + "\n";
  while (transcript.steps.size() < options.maxSteps) {
    std::optional<ParsedOutput> parsed;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
      std::string prompt = header + renderScratchpad(transcript.steps);
      if (attempt > 0) prompt += std::string("\n") + kFormatReminder + "\n";
      const PolicyContext ctx{question, prompt, transcript.steps, tools, attempt > 0};
      parsed = parsePolicyOutput(policy.respond(ctx));
    }
    if (!parsed) {
      transcript.stopped = StopReason::MaxSteps;
      return transcript;
    }
    if (parsed->finalAnswer) {
      transcript.steps.push_back({parsed->thought, std::nullopt, std::nullopt});
      transcript.finalAnswer = *parsed->finalAnswer;
      transcript.stopped = StopReason::Normal;
      return transcript;
    }
    std::string observation;
    if (const auto* tool = tools.find(parsed->action->tool)) {
      try {
        observation = tool->invoke(parsed->action->input);
      } catch (const std::exception& e) {
        observation = std::string("Error: ") + e.what();
      }
    } else {
      observation = "Error: unknown tool " + parsed->action->tool;
    }
    transcript.steps.push_back(
        {parsed->thought, parsed->action, truncateUtf8(observation, options.observationBudget)});
  }
  transcript.stopped = StopReason::MaxSteps;
  return transcript;
}

ScriptedPolicy ScriptedPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open policy script '" + path.string() + "'");
  try {
    return ScriptedPolicy(nlohmann::json::parse(in).get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("policy script: ") + e.what());
  }
}

std::string ScriptedPolicy::respond(const PolicyContext&) {
  if (next_ >= outputs_.size()) return "Thought:";
  return outputs_[next_++];
}

std::vector<std::string> RulePolicy::searchTerms(const std::string& question) const {
  std::vector<std::string> terms;
  std::string run;
  for (const auto& tok : whitespaceTokens(question)) {
    if (vocabulary_.contains(lower(tok))) {
      if (!run.empty()) terms.push_back(std::move(run));
      run.clear();
    } else {
      run += run.empty() ? tok : " " + tok;
    }
  }
  if (!run.empty()) terms.push_back(std::move(run));
  return terms;
}

std::string RulePolicy::respond(const PolicyContext& ctx) {
  if (ctx.tools.empty()) return "Thought: I have no tool to look this up.\nFinal Answer: I don't know.";
  const std::string& tool = ctx.tools.tools().front().name;
  std::set<std::string> searched;
  for (const auto& s : ctx.steps) {
    if (s.action) searched.insert(s.action->input);
  }
  auto act = [&](const std::string& thought, const std::string& query) {
    return "Thought: " + thought + "\nAction: " + tool + " [Query: " + query + "]";
  };

  for (const auto& term : searchTerms(ctx.question)) {
    if (!searched.contains(term)) return act("I do not know what " + term + " refers to.", term);
  }
  for (const auto& s : ctx.steps) {
    if (!s.observation) continue;
    const auto hits = parseHitLines(*s.observation);
    if (hits.empty()) continue;
    const auto& top = hits.front();
    for (const auto& tok : whitespaceTokens(top.snippet)) {
      if (identifierLike(tok) && tok != top.id && !searched.contains(tok)) {
        return act(top.id + " mentions " + tok + ".", tok);
      }
    }
  }

  std::vector<std::string> seen;
  std::string answer;
  for (const auto& s : ctx.steps) {
    if (!s.observation) continue;
    for (const auto& h : parseHitLines(*s.observation)) {
      if (std::find(seen.begin(), seen.end(), h.id) != seen.end()) continue;
      seen.push_back(h.id);
      answer += (answer.empty() ? "" : "\n") + h.id + ": " + h.snippet;
    }
  }
  if (answer.empty()) answer = "I don't know.";
  return "Thought: I have followed every lead.\nFinal Answer: " + answer;
}

std::set<std::string> defaultAgentVocabulary() {
  return {"a",       "about",   "after",   "all",     "also",    "an",      "and",     "any",
          "are",     "as",      "at",      "be",      "been",    "before",  "belong",  "belongs",
          "between", "but",     "by",      "can",     "code",    "contact", "could",   "describe",
          "described", "did",   "do",      "does",    "each",    "explain", "file",    "files",
          "for",     "from",    "give",    "has",     "have",    "how",     "i",       "if",
          "in",      "into",    "is",      "it",      "its",     "itself",  "know",    "list",
          "maintain", "maintains", "me",   "mean",    "means",   "my",      "name",    "of",
          "on",      "or",      "our",     "own",     "owned",   "owner",   "owners",  "owns",
          "path",    "please",  "product", "products", "purpose", "responsible", "should", "so",
          "support", "supported", "supports", "tell",  "that",    "the",     "their",   "them",
          "then",    "there",   "these",   "they",    "this",    "those",   "to",      "team",
          "teams",   "use",     "used",    "uses",    "was",     "we",      "were",    "what",
          "when",    "where",   "which",   "while",   "who",     "whom",    "whose",   "why",
          "will",    "with",    "work",    "works",   "would",   "you",     "your",    "oncall",
          "service", "services", "doc",    "document", "design", "project", "related", "relevant"};
}

std::string CompletionPolicy::respond(const PolicyContext& ctx) {
  std::string prompt = ctx.prompt;
  if (!prompt.empty() && prompt.back() != '\n') prompt += "\n";
  return client_.complete({prompt, 256}).text;
}

ToolSpec pactTool(const VectorIndex& index, const AdapterPair& adapters, const BaseEncoder& encoder,
                  const KnnGraph* graph, std::size_t k) {
  ToolSpec spec;
  spec.name = kPactToolName;
  spec.description =
      "semantic search over the artifact index (code paths, teams, products, documents). "
      "Input is free text; output lists the closest artifacts as numbered lines of "
      "type | id | snippet | score.";
  spec.invoke = [&index, &adapters, &encoder, graph, k](const std::string& query) -> std::string {
    SearchRequest req;
    req.query = query;
    req.k = k;
    req.enrichHops = graph != nullptr ? 1 : 0;
    SearchResult result;
    try {
      result = search(req, index, adapters, encoder, graph);
    } catch (const Error& e) {
      return std::string("Error: ") + e.what();
    }
    if (result.hits.empty()) return "No results.";
    std::string out;
    std::size_t n = 0;
    for (const auto& h : result.hits) {
      std::string snippet = h.text;
      std::replace(snippet.begin(), snippet.end(), '\n', ' ');
      if (snippet.size() > 160) snippet = truncateUtf8(snippet, 157) + "...";
      char score[32];
      if (h.score) {
        std::snprintf(score, sizeof score, "%.4f", *h.score);
      } else {
        std::snprintf(score, sizeof score, "linked");
      }
      out += std::to_string(++n) + ". " + h.type + " | " + h.id.value + " | " + snippet + " | " + score + "\n";
    }
    return out;
  };
  return spec;
}

}  // namespace pact
