#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// Fixed-dimension vectors keyed by string (document ids, paragraph or
/// entity texts, edge labels). Immutable after load.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim, std::map<std::string, std::vector<double>> vectors);

  static EmbeddingTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Seeded uniform vectors in [-1/sqrt(dim), 1/sqrt(dim)), one per key.
  static EmbeddingTable random_init(const std::set<std::string>& keys, int dim,
                                    std::uint64_t seed);

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& key) const { return vectors_.count(key) != 0; }
  /// MissingEmbedding if absent.
  const std::vector<double>& at(const std::string& key) const;
  const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  int dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

enum class NodeKind { Global, Entity, Paragraph };

struct GraphNode {
  int id = 0;
  NodeKind kind = NodeKind::Global;
  std::string text_key;  // embedding lookup key

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  std::string label_key;  // embedding lookup key

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Per-document graph. Exactly one Global node; the forward pass treats
/// every edge as bidirectional.
struct DocGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  int global = 0;
  /// Citation links to other documents' global nodes, recorded for callers
  /// assembling a corpus-level graph; never used in per-document scoring.
  std::set<DocId> cited_globals;
};

/// Label of the Global-Entity spokes in event graphs.
inline constexpr const char* kGlobalEdgeLabel = "global";

/// One Entity node per distinct subject/object string, one edge per triplet
/// labeled by its action, Global connected to every Entity. Triplets with
/// an empty object contribute only their subject node. The global node's
/// text key is the document id.
DocGraph build_event_graph(const Document& doc, const std::set<DocId>& cited_global_links);

/// Global plus one Paragraph node per paragraph, each linked to Global with
/// the paragraph's rhetorical role as edge label.
DocGraph build_para_graph(const Document& doc);

struct GatLayer {
  std::vector<std::vector<double>> w;  // dim_out rows of dim_in
  std::vector<double> a_src;           // length dim_out
  std::vector<double> a_dst;
  std::vector<double> a_edge;
  double leaky_slope = 0.2;

  std::size_t dim_out() const { return w.size(); }
  std::size_t dim_in() const { return w.empty() ? 0 : w[0].size(); }

  friend bool operator==(const GatLayer&, const GatLayer&) = default;
};

struct GatWeights {
  std::array<GatLayer, 2> layers;
  bool uses_edge_features = true;

  static GatWeights load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Seeded uniform init, entries in [-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static GatWeights random_init(int dim_in, int dim_hidden, int dim_out, std::uint64_t seed);

  friend bool operator==(const GatWeights&, const GatWeights&) = default;
};

/// Attention row sums per layer and node, exposed for verification.
struct GatTrace {
  std::array<std::map<int, double>, 2> attention_row_sums;
};

/// Two attention layers over the graph with bidirectional edges and an
/// always-present self-loop (zero edge feature). Per layer:
///   e_ij = LeakyReLU(a_src . Wh_i + a_dst . Wh_j + a_edge . We_ij)
///   alpha = softmax over i's neighborhood (parallel edges compete
///   separately), h'_i = sigma(sum_j alpha_ij Wh_j)
/// sigma is ELU after layer 1 and identity after layer 2; edge features
/// advance between layers as e' = sigma(We).
std::map<int, std::vector<double>> gat_forward(const DocGraph& graph, const GatWeights& weights,
                                               const EmbeddingTable& embeds,
                                               GatTrace* trace = nullptr);

/// dot(h_global(query), h_global(cand)) after the forward pass.
double graph_score(const DocGraph& qg, const DocGraph& cg, const GatWeights& weights,
                   const EmbeddingTable& embeds);

enum class DenseField { Full, LsrSummary, PcrSummary };

const char* to_string(DenseField field);

/// Dot product of per-document vectors stored under "<docid>:<field>".
double dense_score(const Document& query, const Document& cand, const EmbeddingTable& embeds,
                   DenseField field);

}  // namespace lexsem
