#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pact/eval.hpp"
#include "pact/fetcher.hpp"

namespace pact {

struct SyntheticSpec {
  std::uint64_t seed = 7;
  // Main corpus: code_path -owned_by-> oncall_team -supports-> product.
  std::size_t codePaths = 360;
  std::size_t teams = 60;
  std::size_t products = 80;
  std::size_t teamVocabulary = 8;  // theme words per team
  std::size_t codeVocabulary = 10;  // words used only in a team's files
  std::size_t minDescriptionWords = 6;
  std::size_t maxDescriptionWords = 12;
  double noiseRate = 0.05;       // chance a file borrows a word from another team
  double nonLexicalRate = 0.2;   // files sharing no theme word with their owner
  std::size_t negativesPerPositive = 4;
  // Product-node catalog and classification projects.
  std::size_t catalogNodes = 350;
  std::size_t catalogFamilies = 50;
  std::size_t projects = 150;
  // Keyword benchmark and generalization guard task.
  std::size_t benchmarkQuestions = 20;
  std::size_t guardDocuments = 300;
  std::size_t guardQueries = 100;

  // Throws SpecInfeasible.
  void validate() const;
};

struct SyntheticData {
  Corpus corpus;
  KeywordBenchmark benchmark;
  NodeCatalog catalog;
  std::vector<Project> projects;
  Corpus guardCorpus;
  std::vector<GuardQuery> guardQueries;
};

SyntheticData generateSynthetic(const SyntheticSpec& spec);

// corpus.jsonl, benchmark.jsonl, nodes.jsonl, projects.jsonl,
// guard_corpus.jsonl, guard_queries.jsonl.
void writeSynthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace pact
