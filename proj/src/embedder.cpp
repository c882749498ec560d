#include "pact/embedder.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "pact/error.hpp"
#include "pact/kernels.hpp"

namespace pact {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint32_t kAdapterVersion = 1;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t seededHash(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset ^ (seed * 0x9e3779b97f4a7c15ULL);
  h = fnv1a(token, h);
  // FNV's high bits are weak; finalize before taking bucket and sign.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

bool isWordByte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

Matrix Matrix::identity(std::size_t dim) {
  Matrix m = zeros(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::zeros(std::size_t dim) { return Matrix{dim, std::vector<double>(dim * dim, 0.0)}; }

EmbeddingVector Matrix::apply(std::span<const double> x) const {
  if (x.size() != dim) {
    throw Error(ErrorKind::DimMismatch, "matrix is " + std::to_string(dim) + "-dimensional, vector " +
                                            std::to_string(x.size()));
  }
  EmbeddingVector out(dim);
  kernels::serial::matVec(values, x, out);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (isWordByte(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

BaseEncoder BaseEncoder::featureHash(FeatureHashConfig config) {
  if (config.dim == 0) throw Error(ErrorKind::InvalidConfig, "encoder dimension must be positive");
  for (int n : config.wordNgrams) {
    if (n < 1) throw Error(ErrorKind::InvalidConfig, "word n-gram sizes must be >= 1");
  }
  for (int n : config.charNgrams) {
    if (n < 1) throw Error(ErrorKind::InvalidConfig, "char n-gram sizes must be >= 1");
  }
  BaseEncoder e;
  e.kind_ = Kind::FeatureHash;
  e.dim_ = config.dim;
  e.hash_ = std::move(config);
  return e;
}

BaseEncoder BaseEncoder::precomputed(std::size_t dim, std::map<std::string, EmbeddingVector> table) {
  for (const auto& [key, v] : table) {
    if (v.size() != dim) {
      throw Error(ErrorKind::DimMismatch, "precomputed vector '" + key + "' has dimension " +
                                              std::to_string(v.size()));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorKind::InvalidConfig, "non-finite entry in '" + key + "'");
    }
  }
  BaseEncoder e;
  e.kind_ = Kind::Precomputed;
  e.dim_ = dim;
  e.table_ = std::move(table);
  return e;
}

BaseEncoder BaseEncoder::loadPrecomputed(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open vectors '" + path.string() + "'");
  std::map<std::string, EmbeddingVector> table;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      auto v = obj.at("vector").get<EmbeddingVector>();
      if (dim == 0) dim = v.size();
      table[obj.at("id").get<std::string>()] = std::move(v);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  if (table.empty()) throw Error(ErrorKind::EmptyInput, "no vectors in '" + path.string() + "'");
  return precomputed(dim, std::move(table));
}

EmbeddingVector BaseEncoder::encodeText(std::string_view text) const {
  if (kind_ == Kind::Precomputed) {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) {
      throw Error(ErrorKind::MissingVector, "no precomputed vector for '" + std::string(text) + "'");
    }
    return it->second;
  }
  if (text.empty()) throw Error(ErrorKind::EmptyText, "cannot encode empty text");
  const auto words = tokenize(text);
  if (words.empty()) throw Error(ErrorKind::EmptyText, "text has no alphanumeric tokens");

  EmbeddingVector v(dim_, 0.0);
  auto add = [&](std::string_view prefix, std::string_view token) {
    std::string key;
    key.reserve(prefix.size() + token.size());
    key.append(prefix).append(token);
    const std::uint64_t h = seededHash(key, hash_.seed);
    v[h % dim_] += (h >> 63) != 0 ? -1.0 : 1.0;
  };
  for (int n : hash_.wordNgrams) {
    const auto size = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + size <= words.size(); ++i) {
      std::string gram = words[i];
      for (std::size_t j = 1; j < size; ++j) gram.append(" ").append(words[i + j]);
      add("w" + std::to_string(n) + ":", gram);
    }
  }
  for (int n : hash_.charNgrams) {
    const auto size = static_cast<std::size_t>(n);
    for (const auto& w : words) {
      const std::string padded = "<" + w + ">";
      for (std::size_t i = 0; i + size <= padded.size(); ++i) {
        add("c" + std::to_string(n) + ":", std::string_view(padded).substr(i, size));
      }
    }
  }
  normalize(v);
  double norm2 = kernels::dot(v, v);
  if (norm2 == 0.0) throw Error(ErrorKind::EmptyText, "all hashed features cancelled out");
  return v;
}

EmbeddingVector BaseEncoder::encodeArtifact(const Artifact& artifact) const {
  if (kind_ == Kind::Precomputed) return encodeText(artifact.id.value);
  return encodeText(artifact.composedText);
}

std::string BaseEncoder::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Precomputed) {
    os << "precomputed:dim=" << dim_;
    return os.str();
  }
  os << "hash:dim=" << dim_ << ";seed=" << hash_.seed << ";word=";
  for (std::size_t i = 0; i < hash_.wordNgrams.size(); ++i) os << (i ? "," : "") << hash_.wordNgrams[i];
  os << ";char=";
  for (std::size_t i = 0; i < hash_.charNgrams.size(); ++i) os << (i ? "," : "") << hash_.charNgrams[i];
  return os.str();
}

BaseEncoder BaseEncoder::fromDescription(const std::string& description) {
  const auto colon = description.find(':');
  const std::string kind = description.substr(0, colon);
  std::map<std::string, std::string> kv;
  std::istringstream parts(colon == std::string::npos ? "" : description.substr(colon + 1));
  std::string part;
  while (std::getline(parts, part, ';')) {
    const auto eq = part.find('=');
    if (eq != std::string::npos) kv[part.substr(0, eq)] = part.substr(eq + 1);
  }
  auto ints = [](const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
      if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
  };
  try {
    if (kind == "hash") {
      FeatureHashConfig cfg;
      cfg.dim = std::stoul(kv.at("dim"));
      cfg.seed = std::stoull(kv.at("seed"));
      cfg.wordNgrams = ints(kv["word"]);
      cfg.charNgrams = ints(kv["char"]);
      return featureHash(cfg);
    }
    if (kind == "precomputed") {
      BaseEncoder e;
      e.kind_ = Kind::Precomputed;
      e.dim_ = std::stoul(kv.at("dim"));
      return e;
    }
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::IncompatibleIndex, "unrecognised encoder description '" + description + "'");
}

EmbeddingVector encodeBase(std::string_view text, const BaseEncoder& encoder) {
  return encoder.encodeText(text);
}

AdapterPair AdapterPair::identity(std::size_t dim) {
  return AdapterPair{Matrix::identity(dim), Matrix::identity(dim)};
}

std::uint64_t AdapterPair::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const Matrix* m : {&query, &context}) {
    for (double x : m->values) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int i = 0; i < 8; ++i) {
        h ^= static_cast<unsigned char>(bits >> (8 * i));
        h *= kFnvPrime;
      }
    }
  }
  return h;
}

EmbeddingVector encodeContext(const Artifact& artifact, const BaseEncoder& encoder,
                              const AdapterPair& adapters) {
  return adapters.context.apply(encoder.encodeArtifact(artifact));
}

EmbeddingVector encodeQuery(std::string_view query, const BaseEncoder& encoder,
                            const AdapterPair& adapters) {
  return adapters.query.apply(encoder.encodeText(query));
}

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimMismatch, "similarity of " + std::to_string(a.size()) + "- and " +
                                            std::to_string(b.size()) + "-dimensional vectors");
  }
  return kernels::dot(a, b);
}

void normalize(EmbeddingVector& v) {
  const double norm = std::sqrt(kernels::dot(v, v));
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

void saveAdapters(const AdapterPair& adapters, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write adapters '" + path.string() + "'");
  out.write("PACTADPT", 8);
  detail::writeU32(out, kAdapterVersion);
  detail::writeU32(out, static_cast<std::uint32_t>(adapters.dim()));
  for (double x : adapters.query.values) detail::writeF64(out, x);
  for (double x : adapters.context.values) detail::writeF64(out, x);
}

AdapterPair loadAdapters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open adapters '" + path.string() + "'");
  detail::expectMagic(in, "PACTADPT");
  if (detail::readU32(in) != kAdapterVersion) {
    throw Error(ErrorKind::IncompatibleIndex, "unsupported adapter file version");
  }
  const std::size_t dim = detail::readU32(in);
  AdapterPair a{Matrix::zeros(dim), Matrix::zeros(dim)};
  for (double& x : a.query.values) x = detail::readF64(in);
  for (double& x : a.context.values) x = detail::readF64(in);
  return a;
}

}  // namespace pact
