#include "pact/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "pact/error.hpp"
#include "pact/rng.hpp"

namespace pact {

namespace {

const std::vector<std::string> kFillers = {
    "handles", "request", "data",    "update", "module", "logic",  "config", "client", "helper",
    "cache",   "batch",   "event",   "stream", "queue",  "schema", "metrics", "storage", "worker",
    "session", "token",   "index",   "render", "parser", "router", "policy", "account", "report",
    "export",  "import",  "sync",    "retry",  "limit",  "error",  "state",  "model",  "view",
    "query",   "layout",  "adapter", "pipeline"};

// Three-syllable consonant-vowel pseudo-words, unique per factory.
class WordFactory {
 public:
  WordFactory(Rng& rng, std::string consonants) : rng_(rng), consonants_(std::move(consonants)) {
    used_.insert(kFillers.begin(), kFillers.end());
  }

  std::string fresh() {
    static const std::string vowels = "aeiou";
    for (;;) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += consonants_[rng_.below(consonants_.size())];
        w += vowels[rng_.below(vowels.size())];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> fresh(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(fresh());
    return out;
  }

 private:
  Rng& rng_;
  std::string consonants_;
  std::set<std::string> used_;
};

std::string join(const std::vector<std::string>& words, const char* sep = " ") {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += sep;
    out += w;
  }
  return out;
}

// `required` words plus fillers up to `length`, shuffled.
std::vector<std::string> sentence(Rng& rng, std::vector<std::string> required, std::size_t length,
                                  const std::vector<std::string>& fillers) {
  while (required.size() < length) required.push_back(rng.pick(fillers));
  rng.shuffle(required);
  return required;
}

std::vector<std::string> sampleWords(Rng& rng, const std::vector<std::string>& pool, std::size_t k) {
  std::vector<std::string> out;
  for (auto i : rng.sampleIndices(pool.size(), std::min(k, pool.size()))) out.push_back(pool[i]);
  return out;
}

Artifact makeArtifact(std::string id, std::string type, std::vector<Field> fields) {
  return Artifact{ArtifactId(std::move(id)), std::move(type), std::move(fields), {}};
}

void generateMain(const SyntheticSpec& spec, Rng& rng, SyntheticData& out) {
  WordFactory words(rng, "bdfgklmnprstv");
  const auto lengthDraw = [&] {
    return static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.minDescriptionWords),
                                                static_cast<std::int64_t>(spec.maxDescriptionWords)));
  };

  struct Product {
    std::string slug;
    std::vector<std::string> vocab;
  };
  std::vector<Product> products;
  for (std::size_t p = 0; p < spec.products; ++p) {
    auto vocab = words.fresh(6);
    products.push_back({vocab[0] + "-" + vocab[1], vocab});
  }

  struct Team {
    std::string name;
    std::vector<std::string> themeWords;
    std::vector<std::string> codeWords;
    std::size_t product = 0;
  };
  std::vector<Team> teams;
  std::vector<std::size_t> productOrder(spec.products);
  for (std::size_t i = 0; i < productOrder.size(); ++i) productOrder[i] = i;
  rng.shuffle(productOrder);
  for (std::size_t t = 0; t < spec.teams; ++t) {
    Team team;
    team.themeWords = words.fresh(spec.teamVocabulary);
    team.codeWords = words.fresh(spec.codeVocabulary);
    team.name = team.themeWords[0] + "-" + team.themeWords[1] + "-oncall";
    team.product = productOrder[t % productOrder.size()];
    teams.push_back(std::move(team));
  }

  Corpus& corpus = out.corpus;
  corpus.types = {"code_path", "oncall_team", "product"};
  corpus.textTemplate = TextTemplate({{"code_path", {"path", "summary"}},
                                      {"oncall_team", {"name", "charter"}},
                                      {"product", {"name", "description"}}});

  for (const auto& p : products) {
    const std::vector<std::string> core(p.vocab.begin() + 2, p.vocab.end());
    const auto desc = sentence(rng, core, std::max(lengthDraw(), core.size()), kFillers);
    corpus.addArtifact(makeArtifact(p.slug, "product", {{"name", p.slug}, {"description", join(desc)}}));
  }
  for (const auto& t : teams) {
    const std::vector<std::string> theme(t.themeWords.begin() + 2, t.themeWords.end());
    const auto body = sentence(rng, sampleWords(rng, theme, lengthDraw() / 2 + 1), lengthDraw(), kFillers);
    const std::string charter = "Supports " + products[t.product].slug + ". " + join(body) + ".";
    corpus.addArtifact(makeArtifact(t.name, "oncall_team", {{"name", t.name}, {"charter", charter}}));
  }

  static const std::vector<std::string> extensions = {"py", "cpp", "ts", "go", "java", "rs"};
  std::set<std::string> paths;
  std::vector<std::pair<std::string, std::size_t>> fileOwners;
  for (std::size_t f = 0; f < spec.codePaths; ++f) {
    const std::size_t owner = f % spec.teams;
    const Team& team = teams[owner];
    std::string path;
    do {
      const auto pw = sampleWords(rng, team.codeWords, 3);
      path = "src/" + pw[0] + "/" + pw[1] + "_" + pw[2] + "." + rng.pick(extensions);
    } while (!paths.insert(path).second);

    std::vector<std::string> required = sampleWords(rng, team.codeWords, 2 + rng.below(2));
    if (!rng.bernoulli(spec.nonLexicalRate)) {
      for (const auto& w : sampleWords(rng, team.themeWords, 1 + rng.below(2))) required.push_back(w);
    }
    if (spec.teams > 1 && rng.bernoulli(spec.noiseRate)) {
      std::size_t other = rng.below(spec.teams - 1);
      if (other >= owner) ++other;
      required.push_back(rng.pick(teams[other].themeWords));
    }
    const auto summary = sentence(rng, required, std::max(lengthDraw(), required.size()), kFillers);
    corpus.addArtifact(makeArtifact(path, "code_path", {{"path", path}, {"summary", join(summary)}}));
    fileOwners.emplace_back(path, owner);
  }

  for (const auto& [path, owner] : fileOwners) {
    corpus.addEdge({ArtifactId(path), ArtifactId(teams[owner].name), "owned_by"});
  }
  for (const auto& t : teams) {
    corpus.addEdge({ArtifactId(t.name), ArtifactId(products[t.product].slug), "supports"});
  }

  for (auto t : rng.sampleIndices(spec.teams, spec.benchmarkQuestions)) {
    const Product& p = products[teams[t].product];
    out.benchmark.items.push_back(
        {"Which product does the " + teams[t].name + " team support, and what is that product about?",
         {p.slug, p.vocab[2], p.vocab[3]}});
  }

  // Product-node catalog: families of sibling nodes sharing family words.
  std::vector<std::vector<std::string>> familyWords;
  for (std::size_t f = 0; f < spec.catalogFamilies; ++f) familyWords.push_back(words.fresh(3));
  std::vector<CatalogNode> nodes;
  std::vector<std::vector<std::string>> nodeWords;
  for (std::size_t n = 0; n < spec.catalogNodes; ++n) {
    const auto& fam = familyWords[n % spec.catalogFamilies];
    auto own = words.fresh(4);
    std::vector<std::string> required = {fam[0], fam[1], fam[2], own[2], own[3]};
    const auto desc = sentence(rng, required, std::max(lengthDraw(), required.size()), kFillers);
    char id[32];
    std::snprintf(id, sizeof id, "pn-%04zu", n);
    nodes.push_back({ArtifactId(id), own[0] + " " + own[1], join(desc)});
    nodeWords.push_back(std::move(own));
  }
  for (std::size_t q = 0; q < spec.projects; ++q) {
    const std::size_t truth = rng.below(spec.catalogNodes);
    const std::size_t family = truth % spec.catalogFamilies;
    std::vector<std::string> required = sampleWords(rng, nodeWords[truth], 2);
    for (const auto& w : sampleWords(rng, familyWords[family], 2)) required.push_back(w);
    // A word from a sibling node keeps the choice among siblings non-trivial.
    const std::size_t siblings = (spec.catalogNodes - family + spec.catalogFamilies - 1) / spec.catalogFamilies;
    if (siblings > 1 && rng.bernoulli(0.3)) {
      std::size_t sibling = truth;
      while (sibling == truth) sibling = family + spec.catalogFamilies * rng.below(siblings);
      required.push_back(rng.pick(nodeWords[sibling]));
    }
    const auto desc = sentence(rng, required, std::max(lengthDraw(), required.size()), kFillers);
    out.projects.push_back({"Project to " + join(desc) + ".", nodes[truth].id});
  }
  out.catalog = NodeCatalog(std::move(nodes));
}

void generateGuard(const SyntheticSpec& spec, Rng& rng, SyntheticData& out) {
  WordFactory words(rng, "cjhqwxyz");
  const auto fillers = words.fresh(30);
  constexpr std::size_t kTopicSize = 10;
  std::vector<std::vector<std::string>> topics;
  for (std::size_t t = 0; t < (spec.guardDocuments + kTopicSize - 1) / kTopicSize; ++t) {
    topics.push_back(words.fresh(2));
  }
  Corpus& corpus = out.guardCorpus;
  corpus.types = {"document"};
  corpus.textTemplate = TextTemplate({{"document", {"title", "body"}}});
  std::vector<std::vector<std::string>> docWords;
  for (std::size_t d = 0; d < spec.guardDocuments; ++d) {
    auto own = words.fresh(4);
    const auto& topic = topics[d / kTopicSize];
    std::vector<std::string> required = {topic[0], topic[1], own[2], own[3]};
    const auto body = sentence(rng, required, spec.maxDescriptionWords, fillers);
    char id[32];
    std::snprintf(id, sizeof id, "doc-%04zu", d);
    corpus.addArtifact(makeArtifact(id, "document", {{"title", own[0] + " " + own[1]}, {"body", join(body)}}));
    docWords.push_back(std::move(own));
  }
  for (auto d : rng.sampleIndices(spec.guardDocuments, spec.guardQueries)) {
    std::vector<std::string> required = sampleWords(rng, docWords[d], 2);
    required.push_back(rng.pick(topics[d / kTopicSize]));
    const auto q = sentence(rng, required, spec.minDescriptionWords, fillers);
    out.guardQueries.push_back({join(q), corpus.artifacts[d].id});
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::SpecInfeasible, msg); };
  const std::size_t minCount = negativesPerPositive + 1;
  if (codePaths < minCount || teams < minCount || products < minCount) {
    fail("code paths, teams and products each need at least " + std::to_string(minCount) + " artifacts");
  }
  if (!(noiseRate >= 0.0 && noiseRate < 1.0)) fail("noise rate must be in [0, 1)");
  if (!(nonLexicalRate >= 0.0 && nonLexicalRate <= 1.0)) fail("non-lexical rate must be in [0, 1]");
  if (teamVocabulary < 3 || codeVocabulary < 3) fail("team and code vocabularies need at least 3 words");
  if (minDescriptionWords < 1 || minDescriptionWords > maxDescriptionWords) {
    fail("description length range is empty");
  }
  if (benchmarkQuestions > teams) fail("more benchmark questions than teams");
  if (catalogNodes < minCount || catalogFamilies < 1 || catalogFamilies > catalogNodes) {
    fail("catalog needs at least " + std::to_string(minCount) + " nodes and 1..nodes families");
  }
  if (projects < 1) fail("at least one project is required");
  if (guardDocuments < 1 || guardQueries > guardDocuments) fail("guard queries exceed guard documents");
}

SyntheticData generateSynthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData data;
  Rng mainRng(mixSeed(spec.seed, 0x5eed1));
  generateMain(spec, mainRng, data);
  Rng guardRng(mixSeed(spec.seed, 0x5eed2));
  generateGuard(spec, guardRng, data);
  return data;
}

void writeSynthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  writeCorpus(data.corpus, dir / "corpus.jsonl");
  data.benchmark.save(dir / "benchmark.jsonl");
  data.catalog.save(dir / "nodes.jsonl");
  saveProjects(data.projects, dir / "projects.jsonl");
  writeCorpus(data.guardCorpus, dir / "guard_corpus.jsonl");
  saveGuardQueries(data.guardQueries, dir / "guard_queries.jsonl");
}

}  // namespace pact
