#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pact {

struct ArtifactId {
  std::string value;

  ArtifactId() = default;
  explicit ArtifactId(std::string v) : value(std::move(v)) {}

  friend auto operator<=>(const ArtifactId&, const ArtifactId&) = default;
  friend bool operator==(const ArtifactId&, const ArtifactId&) = default;
};

// Non-empty and whitespace-free.
bool isValidArtifactId(const std::string& value);

struct Field {
  std::string name;
  std::string text;

  friend bool operator==(const Field&, const Field&) = default;
};

struct Artifact {
  ArtifactId id;
  std::string type;
  std::vector<Field> fields;
  std::string composedText;

  const std::string* field(const std::string& name) const;
  // First non-empty field; used as the display name.
  const std::string& name() const;
};

// Field order per artifact type used to build the text that is embedded.
class TextTemplate {
 public:
  TextTemplate() = default;
  explicit TextTemplate(std::map<std::string, std::vector<std::string>> order)
      : order_(std::move(order)) {}

  // Field order of first appearance, per type, over the given artifacts.
  static TextTemplate fromArtifacts(const std::vector<Artifact>& artifacts);

  bool covers(const std::string& type) const { return order_.contains(type); }
  const std::vector<std::string>& fieldsFor(const std::string& type) const;
  const std::map<std::string, std::vector<std::string>>& order() const { return order_; }

  friend bool operator==(const TextTemplate&, const TextTemplate&) = default;

 private:
  std::map<std::string, std::vector<std::string>> order_;
};

inline constexpr std::string_view kFieldSeparator = " | ";

// Joins the template's fields in template order with " | ", skipping empty
// ones. Throws TypeNotInTemplate.
std::string composeText(const Artifact& artifact, const TextTemplate& tmpl);

struct LinkEdge {
  ArtifactId src;
  ArtifactId dst;
  std::string relation;

  friend bool operator==(const LinkEdge&, const LinkEdge&) = default;
};

struct LinkNeighbor {
  ArtifactId id;
  std::string relation;
  bool outgoing;  // true when the stored edge points away from the owner
};

// Directed ground-truth edges with an undirected adjacency view.
class LinkGraph {
 public:
  // Rejects self-loops and duplicate (src, dst, relation) triples.
  void addEdge(LinkEdge edge);

  const std::vector<LinkEdge>& edges() const { return edges_; }
  std::size_t edgeCount() const { return edges_.size(); }

  // Both directions.
  const std::vector<LinkNeighbor>& adjacent(const ArtifactId& id) const;
  // Targets of edges leaving `id`, in insertion order.
  std::vector<ArtifactId> successors(const ArtifactId& id) const;

  bool hasDirected(const ArtifactId& src, const ArtifactId& dst) const;
  bool linkedEitherWay(const ArtifactId& a, const ArtifactId& b) const;

 private:
  std::vector<LinkEdge> edges_;
  std::map<ArtifactId, std::vector<LinkNeighbor>> adjacency_;
  std::map<std::pair<ArtifactId, ArtifactId>, std::vector<std::string>> directed_;
};

// Ordered (A, C) with A->B->C for some B, A != C and no direct A->C edge.
std::vector<std::pair<ArtifactId, ArtifactId>> twoHopPairs(const LinkGraph& graph);

struct Corpus {
  std::vector<std::string> types;
  std::vector<Artifact> artifacts;
  LinkGraph links;
  TextTemplate textTemplate;

  // Position of an id in `artifacts`; nullopt when absent.
  std::optional<std::size_t> find(const ArtifactId& id) const;
  const Artifact& at(const ArtifactId& id) const;

  // Validates, composes text and appends.
  void addArtifact(Artifact artifact);
  // Validates endpoints (DanglingEdge) and appends.
  void addEdge(LinkEdge edge);
  // Recomputes composedText for every artifact.
  void applyTemplate(TextTemplate tmpl);

  std::vector<std::size_t> ofType(const std::string& type) const;

 private:
  std::unordered_map<std::string, std::size_t> position_;
};

// JSONL: header {"types":[...],"version":1[,"templates":{type:[fields]}]},
// then artifact lines {"id","type","fields":[[name,text],...]} and edge lines
// {"edge":{"src","dst","relation"}}.
Corpus loadCorpus(const std::filesystem::path& path);
Corpus parseCorpus(std::istream& in);
void writeCorpus(const Corpus& corpus, const std::filesystem::path& path);
void writeCorpus(const Corpus& corpus, std::ostream& out);

}  // namespace pact

template <>
struct std::hash<pact::ArtifactId> {
  std::size_t operator()(const pact::ArtifactId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
