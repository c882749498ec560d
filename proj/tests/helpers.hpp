#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <iterator>
#include <set>
#include <utility>
#include <sstream>
#include <string>
#include <vector>

#include "pact/artifact.hpp"
#include "pact/index.hpp"
#include "pact/rng.hpp"

namespace pact::test {

inline Corpus corpusFromText(const std::string& text) {
  std::istringstream in(text);
  return parseCorpus(in);
}

inline std::vector<double> gaussianRows(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> v(n * dim);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

// Index over raw rows; ids "r00000", "r00001", ... so id order is row order
// unless `shuffleIds` is set.
inline VectorIndex indexFromRows(std::vector<double> rows, std::size_t dim, Rng* shuffleIds = nullptr,
                                 std::vector<std::string> types = {}) {
  const std::size_t n = rows.size() / dim;
  std::vector<ArtifactId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%05zu", i);
    ids.emplace_back(buf);
  }
  if (shuffleIds != nullptr) shuffleIds->shuffle(ids);
  if (types.empty()) types.assign(n, "doc");
  std::vector<std::string> texts;
  for (const auto& id : ids) texts.push_back("text of " + id.value);
  IndexHeader header{dim, "precomputed:dim=" + std::to_string(dim), 0, 0};
  return VectorIndex(header, std::move(ids), std::move(types), std::move(texts), std::move(rows));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pact-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Brute-force union of per-node top-k by dot product, ties on smaller id.
inline std::set<std::pair<std::size_t, std::size_t>> knnUnionOracle(const VectorIndex& index, std::size_t k) {
  std::set<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t n = index.size();
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u) continue;
      double s = 0.0;
      for (std::size_t t = 0; t < index.dim(); ++t) s += index.vector(u)[t] * index.vector(v)[t];
      scored.emplace_back(s, v);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : index.id(a.second) < index.id(b.second);
    });
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t v = scored[i].second;
      edges.insert({std::min(u, v), std::max(u, v)});
    }
  }
  return edges;
}

inline std::string readFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pact::test
