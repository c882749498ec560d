#include "pact/fetcher.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "pact/error.hpp"
#include "pact/rng.hpp"

namespace pact {

NodeCatalog::NodeCatalog(std::vector<CatalogNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorKind::EmptyInput, "catalog has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!isValidArtifactId(nodes_[i].id.value)) {
      throw Error(ErrorKind::InvalidArtifact, "invalid node id '" + nodes_[i].id.value + "'");
    }
    if (!position_.emplace(nodes_[i].id.value, i).second) {
      throw Error(ErrorKind::InvalidArtifact, "duplicate node id '" + nodes_[i].id.value + "'");
    }
  }
}

NodeCatalog NodeCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open catalog '" + path.string() + "'");
  std::vector<CatalogNode> nodes;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      nodes.push_back({ArtifactId(j.at("id").get<std::string>()), j.at("title").get<std::string>(),
                       j.value("description", std::string())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return NodeCatalog(std::move(nodes));
}

void NodeCatalog::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write catalog '" + path.string() + "'");
  for (const auto& n : nodes_) {
    out << nlohmann::json{{"id", n.id.value}, {"title", n.title}, {"description", n.description}}.dump()
        << '\n';
  }
}

const CatalogNode* NodeCatalog::find(const ArtifactId& id) const {
  auto it = position_.find(id.value);
  return it == position_.end() ? nullptr : &nodes_[it->second];
}

Corpus NodeCatalog::asCorpus() const {
  Corpus c;
  c.types = {kCatalogNodeType};
  c.textTemplate = TextTemplate({{kCatalogNodeType, {"title", "description"}}});
  for (const auto& n : nodes_) {
    c.addArtifact(Artifact{n.id, kCatalogNodeType, {{"title", n.title}, {"description", n.description}}, {}});
  }
  return c;
}

std::vector<Project> loadProjects(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open projects '" + path.string() + "'");
  std::vector<Project> out;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("description").get<std::string>(), ArtifactId(j.at("truth").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return out;
}

void saveProjects(const std::vector<Project>& projects, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write projects '" + path.string() + "'");
  for (const auto& p : projects) {
    out << nlohmann::json{{"description", p.description}, {"truth", p.truth.value}}.dump() << '\n';
  }
}

namespace {

std::set<std::string> tokenSet(const std::string& text) {
  const auto toks = tokenize(text);
  return {toks.begin(), toks.end()};
}

double tokenF1(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

// Enforces the ranker contract on every call.
std::vector<ArtifactId> checkedSelect(Ranker& ranker, const std::string& project,
                                      std::span<const CatalogNode* const> candidates,
                                      std::size_t selectCount) {
  auto picked = ranker.select(project, candidates, selectCount);
  if (picked.size() > selectCount) {
    throw Error(ErrorKind::RankerViolation, ranker.name() + " ranker returned " +
                                                std::to_string(picked.size()) + " ids, limit " +
                                                std::to_string(selectCount));
  }
  std::unordered_set<std::string> allowed, seen;
  for (const auto* c : candidates) allowed.insert(c->id.value);
  for (const auto& id : picked) {
    if (!allowed.contains(id.value)) {
      throw Error(ErrorKind::RankerViolation, ranker.name() + " ranker returned non-candidate '" + id.value + "'");
    }
    if (!seen.insert(id.value).second) {
      throw Error(ErrorKind::RankerViolation, ranker.name() + " ranker repeated '" + id.value + "'");
    }
  }
  return picked;
}

}  // namespace

std::vector<ArtifactId> LexicalRanker::select(const std::string& project,
                                              std::span<const CatalogNode* const> candidates,
                                              std::size_t selectCount) {
  const auto query = tokenSet(project);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scored.emplace_back(tokenF1(query, tokenSet(candidates[i]->title + " " + candidates[i]->description)), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<ArtifactId> out;
  for (std::size_t i = 0; i < scored.size() && out.size() < selectCount; ++i) {
    out.push_back(candidates[scored[i].second]->id);
  }
  return out;
}

ScriptedRanker ScriptedRanker::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open ranker script '" + path.string() + "'");
  std::vector<std::vector<ArtifactId>> responses;
  try {
    for (const auto& reply : nlohmann::json::parse(in)) {
      std::vector<ArtifactId> ids;
      for (const auto& id : reply) ids.emplace_back(id.get<std::string>());
      responses.push_back(std::move(ids));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("ranker script: ") + e.what());
  }
  return ScriptedRanker(std::move(responses));
}

std::vector<ArtifactId> ScriptedRanker::select(const std::string&, std::span<const CatalogNode* const>,
                                               std::size_t) {
  if (next_ >= responses_.size()) return {};
  return responses_[next_++];
}

std::string CompletionRanker::buildPrompt(const std::string& project,
                                          std::span<const CatalogNode* const> candidates,
                                          std::size_t selectCount) {
  std::ostringstream os;
  os << "Pick the product nodes that best fit the project below.\n\n"
     << "Project: " << project << "\n\nCandidates:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    os << i + 1 << ". " << candidates[i]->id.value << " | " << candidates[i]->title << " | "
       << candidates[i]->description << "\n";
  }
  os << "\nReply with at most " << selectCount
     << " candidate ids, best first, one per line. Output the ids only.\n";
  return os.str();
}

std::optional<std::vector<ArtifactId>> CompletionRanker::parseReply(
    const std::string& reply, std::span<const CatalogNode* const> candidates, std::size_t selectCount) {
  std::unordered_set<std::string> allowed;
  for (const auto* c : candidates) allowed.insert(c->id.value);
  std::vector<ArtifactId> out;
  std::unordered_set<std::string> seen;
  std::string normalized = reply;
  std::replace(normalized.begin(), normalized.end(), ',', '\n');
  std::istringstream lines(normalized);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream words(line);
    std::string tok;
    std::string id;
    while (words >> tok) {
      // Skip list markers such as "1." or "-".
      if (tok == "-" || tok == "*" ||
          (tok.back() == '.' && std::all_of(tok.begin(), tok.end() - 1, ::isdigit))) {
        continue;
      }
      id = tok;
      break;
    }
    if (id.empty()) continue;
    if (!allowed.contains(id) || !seen.insert(id).second) return std::nullopt;
    out.emplace_back(id);
  }
  if (out.empty() || out.size() > selectCount) return std::nullopt;
  return out;
}

std::vector<ArtifactId> CompletionRanker::select(const std::string& project,
                                                 std::span<const CatalogNode* const> candidates,
                                                 std::size_t selectCount) {
  const std::string prompt = buildPrompt(project, candidates, selectCount);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto reply = client_.complete({prompt, static_cast<int>(16 * selectCount + 32)});
    if (auto ids = parseReply(reply.text, candidates, selectCount)) return *ids;
  }
  throw Error(ErrorKind::RankerViolation, "completion ranker reply did not parse into candidate ids twice");
}

Classification classifyLlmOnly(const std::string& project, const NodeCatalog& catalog, Ranker& ranker,
                               std::size_t k, std::optional<std::uint64_t> shuffleSeed) {
  if (catalog.size() == 0) throw Error(ErrorKind::EmptyInput, "catalog is empty");
  std::vector<const CatalogNode*> current;
  for (const auto& n : catalog.nodes()) current.push_back(&n);
  if (shuffleSeed) {
    Rng rng(*shuffleSeed);
    rng.shuffle(current);
  }
  auto ids = [](const std::vector<const CatalogNode*>& v) {
    std::vector<ArtifactId> out;
    for (const auto* n : v) out.push_back(n->id);
    return out;
  };

  Classification result;
  while (current.size() > kBatchSize) {
    result.rounds.push_back(ids(current));
    std::vector<const CatalogNode*> survivors;
    for (std::size_t start = 0; start < current.size(); start += kBatchSize) {
      const std::size_t len = std::min(kBatchSize, current.size() - start);
      std::span<const CatalogNode* const> batch(current.data() + start, len);
      for (const auto& id : checkedSelect(ranker, project, batch, kKeepPerBatch)) {
        survivors.push_back(catalog.find(id));
      }
      ++result.rankerCalls;
    }
    current = std::move(survivors);
  }
  result.rounds.push_back(ids(current));
  result.ranked = checkedSelect(ranker, project, current, std::min(k, current.size()));
  ++result.rankerCalls;
  return result;
}

Classification classifyKnn(const std::string& project, const VectorIndex& catalogIndex,
                           const AdapterPair& adapters, const BaseEncoder& encoder, std::size_t k) {
  const auto q = encodeQuery(project, encoder, adapters);
  SearchOptions opts;
  opts.k = k;
  Classification result;
  for (const auto& h : searchTopK(catalogIndex, q, opts)) result.ranked.push_back(h.id);
  return result;
}

Classification classifyHybrid(const std::string& project, const VectorIndex& catalogIndex,
                              const NodeCatalog& catalog, Ranker& ranker, const AdapterPair& adapters,
                              const BaseEncoder& encoder, std::size_t k, std::size_t shortlist) {
  const auto fetched = classifyKnn(project, catalogIndex, adapters, encoder, shortlist);
  std::vector<const CatalogNode*> candidates;
  for (const auto& id : fetched.ranked) {
    const auto* node = catalog.find(id);
    if (node == nullptr) throw Error(ErrorKind::UnknownNode, "index node '" + id.value + "' not in catalog");
    candidates.push_back(node);
  }
  Classification result;
  result.ranked = checkedSelect(ranker, project, candidates, std::min(k, candidates.size()));
  result.rankerCalls = 1;
  return result;
}

std::string fetchMethodName(FetchMethod m) {
  switch (m) {
    case FetchMethod::LlmOnly: return "llm";
    case FetchMethod::Knn: return "knn";
    case FetchMethod::Hybrid: return "hybrid";
  }
  return "?";
}

FetchMethod parseFetchMethod(const std::string& name) {
  if (name == "llm") return FetchMethod::LlmOnly;
  if (name == "knn") return FetchMethod::Knn;
  if (name == "hybrid") return FetchMethod::Hybrid;
  throw Error(ErrorKind::InvalidConfig, "unknown fetch method '" + name + "' (llm, knn, hybrid)");
}

std::size_t rankOf(const std::vector<ArtifactId>& ranked, const ArtifactId& truth) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i] == truth) return i + 1;
  }
  return 0;
}

const MethodReport& FetchRankReport::at(FetchMethod m) const {
  for (const auto& r : methods) {
    if (r.method == m) return r;
  }
  throw Error(ErrorKind::InvalidConfig, "method " + fetchMethodName(m) + " was not evaluated");
}

nlohmann::json FetchRankReport::toJson() const {
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& r : methods) {
    metrics[fetchMethodName(r.method)] = {
        {"t1_hits", r.hitsAt1},  {"t5_hits", r.hitsAt5},   {"t20_hits", r.hitsAt20},
        {"t1_rate", r.rateAt1},  {"t5_rate", r.rateAt5},   {"t20_rate", r.rateAt20},
        {"mean_latency_ms", r.meanLatencyMs}, {"ranker_calls", r.rankerCalls}};
    for (std::size_t q = 0; q < r.truthRank.size(); ++q) {
      raw.push_back({{"method", fetchMethodName(r.method)}, {"query", q}, {"truth_rank", r.truthRank[q]}});
    }
  }
  return {{"queries", queries}, {"metrics", metrics}, {"raw", raw}};
}

FetchRankReport evaluateFetchers(const std::vector<Project>& projects, const std::vector<FetchMethod>& methods,
                                 const FetchEvalContext& ctx) {
  if (projects.empty()) throw Error(ErrorKind::EmptyInput, "no projects to evaluate");
  for (const auto& p : projects) {
    if (ctx.catalog.find(p.truth) == nullptr) {
      throw Error(ErrorKind::UnknownNode, "ground-truth node '" + p.truth.value + "' is not in the catalog");
    }
  }
  constexpr std::size_t kDepth = 20;
  FetchRankReport report;
  report.queries = projects.size();
  for (FetchMethod method : methods) {
    MethodReport r;
    r.method = method;
    double totalMs = 0.0;
    for (const auto& p : projects) {
      const auto start = std::chrono::steady_clock::now();
      Classification c;
      switch (method) {
        case FetchMethod::LlmOnly:
          c = classifyLlmOnly(p.description, ctx.catalog, ctx.ranker, kDepth, ctx.shuffleSeed);
          break;
        case FetchMethod::Knn:
          c = classifyKnn(p.description, ctx.catalogIndex, ctx.adapters, ctx.encoder, kDepth);
          break;
        case FetchMethod::Hybrid:
          c = classifyHybrid(p.description, ctx.catalogIndex, ctx.catalog, ctx.ranker, ctx.adapters,
                             ctx.encoder, kDepth);
          break;
      }
      totalMs += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      r.rankerCalls += c.rankerCalls;
      const std::size_t rank = rankOf(c.ranked, p.truth);
      r.truthRank.push_back(rank);
      if (rank == 1) ++r.hitsAt1;
      if (rank >= 1 && rank <= 5) ++r.hitsAt5;
      if (rank >= 1 && rank <= 20) ++r.hitsAt20;
    }
    const auto n = static_cast<double>(projects.size());
    r.rateAt1 = static_cast<double>(r.hitsAt1) / n;
    r.rateAt5 = static_cast<double>(r.hitsAt5) / n;
    r.rateAt20 = static_cast<double>(r.hitsAt20) / n;
    r.meanLatencyMs = totalMs / n;
    report.methods.push_back(std::move(r));
  }
  return report;
}

}  // namespace pact
