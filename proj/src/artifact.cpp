#include "pact/artifact.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pact/error.hpp"

namespace pact {

using nlohmann::json;

bool isValidArtifactId(const std::string& value) {
  if (value.empty()) return false;
  return std::none_of(value.begin(), value.end(),
                      [](unsigned char c) { return std::isspace(c) != 0; });
}

const std::string* Artifact::field(const std::string& name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f.text;
  }
  return nullptr;
}

const std::string& Artifact::name() const {
  for (const auto& f : fields) {
    if (!f.text.empty()) return f.text;
  }
  return id.value;
}

TextTemplate TextTemplate::fromArtifacts(const std::vector<Artifact>& artifacts) {
  std::map<std::string, std::vector<std::string>> order;
  for (const auto& a : artifacts) {
    auto& names = order[a.type];
    for (const auto& f : a.fields) {
      if (std::find(names.begin(), names.end(), f.name) == names.end()) names.push_back(f.name);
    }
  }
  return TextTemplate(std::move(order));
}

const std::vector<std::string>& TextTemplate::fieldsFor(const std::string& type) const {
  auto it = order_.find(type);
  if (it == order_.end()) {
    throw Error(ErrorKind::TypeNotInTemplate, "no template for type '" + type + "'");
  }
  return it->second;
}

std::string composeText(const Artifact& artifact, const TextTemplate& tmpl) {
  std::string out;
  for (const auto& name : tmpl.fieldsFor(artifact.type)) {
    const std::string* text = artifact.field(name);
    if (text == nullptr || text->empty()) continue;
    if (!out.empty()) out += kFieldSeparator;
    out += *text;
  }
  return out;
}

void LinkGraph::addEdge(LinkEdge edge) {
  if (edge.src == edge.dst) {
    throw Error(ErrorKind::InvalidArtifact, "self-loop edge on '" + edge.src.value + "'");
  }
  auto& relations = directed_[{edge.src, edge.dst}];
  if (std::find(relations.begin(), relations.end(), edge.relation) != relations.end()) {
    throw Error(ErrorKind::InvalidArtifact, "duplicate edge " + edge.src.value + " -> " +
                                                edge.dst.value + " (" + edge.relation + ")");
  }
  relations.push_back(edge.relation);
  adjacency_[edge.src].push_back({edge.dst, edge.relation, true});
  adjacency_[edge.dst].push_back({edge.src, edge.relation, false});
  edges_.push_back(std::move(edge));
}

const std::vector<LinkNeighbor>& LinkGraph::adjacent(const ArtifactId& id) const {
  static const std::vector<LinkNeighbor> kEmpty;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? kEmpty : it->second;
}

std::vector<ArtifactId> LinkGraph::successors(const ArtifactId& id) const {
  std::vector<ArtifactId> out;
  for (const auto& n : adjacent(id)) {
    if (n.outgoing && std::find(out.begin(), out.end(), n.id) == out.end()) out.push_back(n.id);
  }
  return out;
}

bool LinkGraph::hasDirected(const ArtifactId& src, const ArtifactId& dst) const {
  return directed_.contains({src, dst});
}

bool LinkGraph::linkedEitherWay(const ArtifactId& a, const ArtifactId& b) const {
  return hasDirected(a, b) || hasDirected(b, a);
}

std::vector<std::pair<ArtifactId, ArtifactId>> twoHopPairs(const LinkGraph& graph) {
  std::vector<std::pair<ArtifactId, ArtifactId>> out;
  std::set<std::pair<ArtifactId, ArtifactId>> seen;
  for (const auto& first : graph.edges()) {
    for (const auto& c : graph.successors(first.dst)) {
      if (c == first.src || graph.hasDirected(first.src, c)) continue;
      if (seen.insert({first.src, c}).second) out.emplace_back(first.src, c);
    }
  }
  return out;
}

std::optional<std::size_t> Corpus::find(const ArtifactId& id) const {
  auto it = position_.find(id.value);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

const Artifact& Corpus::at(const ArtifactId& id) const {
  auto pos = find(id);
  if (!pos) throw Error(ErrorKind::UnknownNode, "unknown artifact '" + id.value + "'");
  return artifacts[*pos];
}

void Corpus::addArtifact(Artifact artifact) {
  if (!isValidArtifactId(artifact.id.value)) {
    throw Error(ErrorKind::InvalidArtifact, "invalid artifact id '" + artifact.id.value + "'");
  }
  if (position_.contains(artifact.id.value)) {
    throw Error(ErrorKind::InvalidArtifact, "duplicate artifact id '" + artifact.id.value + "'");
  }
  if (std::find(types.begin(), types.end(), artifact.type) == types.end()) {
    throw Error(ErrorKind::InvalidArtifact,
                "artifact '" + artifact.id.value + "' has undeclared type '" + artifact.type + "'");
  }
  artifact.composedText = composeText(artifact, textTemplate);
  if (artifact.composedText.empty()) {
    throw Error(ErrorKind::InvalidArtifact,
                "artifact '" + artifact.id.value + "' has no non-empty text field");
  }
  position_.emplace(artifact.id.value, artifacts.size());
  artifacts.push_back(std::move(artifact));
}

void Corpus::addEdge(LinkEdge edge) {
  for (const auto* end : {&edge.src, &edge.dst}) {
    if (!find(*end)) {
      throw Error(ErrorKind::DanglingEdge, "edge " + edge.src.value + " -> " + edge.dst.value +
                                               " references unknown artifact '" + end->value + "'");
    }
  }
  links.addEdge(std::move(edge));
}

void Corpus::applyTemplate(TextTemplate tmpl) {
  textTemplate = std::move(tmpl);
  for (auto& a : artifacts) a.composedText = composeText(a, textTemplate);
}

std::vector<std::size_t> Corpus::ofType(const std::string& type) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (artifacts[i].type == type) out.push_back(i);
  }
  return out;
}

namespace {

[[noreturn]] void parseFail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

Corpus parseCorpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t lineNo = 0;
  std::optional<TextTemplate> declared;
  bool haveHeader = false;
  std::vector<std::pair<std::size_t, Artifact>> pendingArtifacts;
  std::vector<std::pair<std::size_t, LinkEdge>> pendingEdges;

  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      parseFail(lineNo, e.what());
    }
    if (!obj.is_object()) parseFail(lineNo, "expected a JSON object");
    try {
      if (!haveHeader) {
        if (!obj.contains("types") || !obj.contains("version")) {
          parseFail(lineNo, "first line must be the header {\"types\":[...],\"version\":1}");
        }
        if (obj.at("version").get<int>() != 1) parseFail(lineNo, "unsupported corpus version");
        corpus.types = obj.at("types").get<std::vector<std::string>>();
        if (obj.contains("templates")) {
          declared = TextTemplate(
              obj.at("templates").get<std::map<std::string, std::vector<std::string>>>());
        }
        haveHeader = true;
        continue;
      }
      if (obj.contains("edge")) {
        const auto& e = obj.at("edge");
        pendingEdges.emplace_back(
            lineNo, LinkEdge{ArtifactId(e.at("src").get<std::string>()),
                             ArtifactId(e.at("dst").get<std::string>()),
                             e.at("relation").get<std::string>()});
        continue;
      }
      Artifact a;
      a.id = ArtifactId(obj.at("id").get<std::string>());
      a.type = obj.at("type").get<std::string>();
      for (const auto& f : obj.at("fields")) {
        if (!f.is_array() || f.size() != 2) parseFail(lineNo, "field must be [name, text]");
        a.fields.push_back({f[0].get<std::string>(), f[1].get<std::string>()});
      }
      pendingArtifacts.emplace_back(lineNo, std::move(a));
    } catch (const json::exception& e) {
      parseFail(lineNo, e.what());
    }
  }
  if (!haveHeader) parseFail(lineNo + 1, "missing header line");

  {
    std::vector<Artifact> raw;
    raw.reserve(pendingArtifacts.size());
    for (const auto& [_, a] : pendingArtifacts) raw.push_back(a);
    corpus.textTemplate = declared ? *declared : TextTemplate::fromArtifacts(raw);
  }
  for (auto& [no, a] : pendingArtifacts) {
    try {
      corpus.addArtifact(std::move(a));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::TypeNotInTemplate) throw;
      parseFail(no, e.detail());
    }
  }
  for (auto& [no, e] : pendingEdges) {
    try {
      corpus.addEdge(std::move(e));
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::DanglingEdge) {
        throw Error(ErrorKind::DanglingEdge, "line " + std::to_string(no) + ": " + err.detail());
      }
      parseFail(no, err.detail());
    }
  }
  return corpus;
}

Corpus loadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open corpus '" + path.string() + "'");
  return parseCorpus(in);
}

void writeCorpus(const Corpus& corpus, std::ostream& out) {
  json header = {{"types", corpus.types}, {"version", 1}, {"templates", corpus.textTemplate.order()}};
  out << header.dump() << '\n';
  for (const auto& a : corpus.artifacts) {
    json fields = json::array();
    for (const auto& f : a.fields) fields.push_back({f.name, f.text});
    json line = {{"id", a.id.value}, {"type", a.type}, {"fields", fields}};
    out << line.dump() << '\n';
  }
  for (const auto& e : corpus.links.edges()) {
    json line = {{"edge", {{"src", e.src.value}, {"dst", e.dst.value}, {"relation", e.relation}}}};
    out << line.dump() << '\n';
  }
}

void writeCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write corpus '" + path.string() + "'");
  writeCorpus(corpus, out);
}

}  // namespace pact
