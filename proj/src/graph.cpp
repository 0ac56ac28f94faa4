#include "lexsem/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "lexsem/error.hpp"
#include "lexsem/rng.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

using nlohmann::json;
using Vec = std::vector<double>;

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }

Vec matvec(const std::vector<Vec>& w, const Vec& x) {
  Vec out(w.size(), 0.0);
  for (std::size_t r = 0; r < w.size(); ++r) {
    const Vec& row = w[r];
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_finite(const Vec& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) fail(Errc::MalformedRecord, std::string(what) + " has non-finite entry");
}

json vec_to_json(const Vec& v) { return json(v); }

Vec vec_from_json(const json& j) { return j.get<Vec>(); }

}  // namespace

EmbeddingTable::EmbeddingTable(int dim, std::map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
  if (dim_ <= 0) fail(Errc::DimensionMismatch, "embedding dim must be positive");
  for (const auto& [key, vec] : vectors_) {
    if (static_cast<int>(vec.size()) != dim_)
      fail(Errc::DimensionMismatch, "vector for '" + key + "' has length " +
                                        std::to_string(vec.size()) + ", table dim " +
                                        std::to_string(dim_));
    check_finite(vec, "embedding");
  }
}

const std::vector<double>& EmbeddingTable::at(const std::string& key) const {
  auto it = vectors_.find(key);
  if (it == vectors_.end()) fail(Errc::MissingEmbedding, "'" + key + "'");
  return it->second;
}

EmbeddingTable EmbeddingTable::random_init(const std::set<std::string>& keys, int dim,
                                           std::uint64_t seed) {
  if (dim <= 0) fail(Errc::DimensionMismatch, "embedding dim must be positive");
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::map<std::string, Vec> vectors;
  for (const auto& key : keys) {
    Vec v(dim);
    for (double& x : v) x = rng.uniform(-bound, bound);
    vectors.emplace(key, std::move(v));
  }
  return EmbeddingTable(dim, std::move(vectors));
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = 1;
  j["kind"] = "embedding-table";
  j["dim"] = dim_;
  j["count"] = vectors_.size();
  json vecs = json::object();
  for (const auto& [key, vec] : vectors_) vecs[key] = vec_to_json(vec);
  j["vectors"] = std::move(vecs);
  atomic_write_file(path, j.dump());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "embedding-table")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 embedding-table");
    int dim = j.at("dim").get<int>();
    std::map<std::string, Vec> vectors;
    for (const auto& [key, vec] : j.at("vectors").items()) vectors[key] = vec_from_json(vec);
    if (j.at("count").get<std::size_t>() != vectors.size())
      fail(Errc::MalformedRecord, path.string() + ": count does not match vectors");
    return EmbeddingTable(dim, std::move(vectors));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

DocGraph build_event_graph(const Document& doc, const std::set<DocId>& cited_global_links) {
  DocGraph g;
  g.global = 0;
  g.nodes.push_back({0, NodeKind::Global, doc.id.str()});
  g.cited_globals = cited_global_links;

  std::unordered_map<std::string, int> entity_ids;
  auto entity = [&](const std::string& text) {
    auto it = entity_ids.find(text);
    if (it != entity_ids.end()) return it->second;
    int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, NodeKind::Entity, text});
    g.edges.push_back({g.global, id, kGlobalEdgeLabel});
    entity_ids.emplace(text, id);
    return id;
  };

  for (const auto& e : doc.events) {
    int src = entity(e.subject);
    if (e.object.empty()) continue;  // no object node, action edge dropped
    int dst = entity(e.object);
    g.edges.push_back({src, dst, e.action});
  }
  return g;
}

DocGraph build_para_graph(const Document& doc) {
  if (doc.paragraphs.empty())
    fail(Errc::EmptyParagraphs, "'" + doc.id.str() + "' has no paragraphs");
  DocGraph g;
  g.global = 0;
  g.nodes.push_back({0, NodeKind::Global, doc.id.str()});
  for (const auto& p : doc.paragraphs) {
    int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, NodeKind::Paragraph, p.text});
    g.edges.push_back({g.global, id, to_string(p.role)});
  }
  return g;
}

GatWeights GatWeights::random_init(int dim_in, int dim_hidden, int dim_out, std::uint64_t seed) {
  if (dim_in <= 0 || dim_hidden <= 0 || dim_out <= 0)
    fail(Errc::DimensionMismatch, "gat dims must be positive");
  Rng rng(seed);
  auto make_layer = [&rng](int in, int out) {
    GatLayer layer;
    const double wb = 1.0 / std::sqrt(static_cast<double>(in));
    layer.w.assign(out, Vec(in));
    for (auto& row : layer.w)
      for (double& x : row) x = rng.uniform(-wb, wb);
    const double ab = 1.0 / std::sqrt(static_cast<double>(out));
    auto fill = [&](Vec& v) {
      v.resize(out);
      for (double& x : v) x = rng.uniform(-ab, ab);
    };
    fill(layer.a_src);
    fill(layer.a_dst);
    fill(layer.a_edge);
    return layer;
  };
  GatWeights w;
  w.layers[0] = make_layer(dim_in, dim_hidden);
  w.layers[1] = make_layer(dim_hidden, dim_out);
  return w;
}

void GatWeights::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = 1;
  j["kind"] = "gat-weights";
  j["uses_edge_features"] = uses_edge_features;
  json layers = json::array();
  for (const auto& layer : this->layers) {
    json l;
    l["w"] = layer.w;
    l["a_src"] = layer.a_src;
    l["a_dst"] = layer.a_dst;
    l["a_edge"] = layer.a_edge;
    l["leaky_slope"] = layer.leaky_slope;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  atomic_write_file(path, j.dump());
}

GatWeights GatWeights::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "gat-weights")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 gat-weights file");
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != 2)
      fail(Errc::MalformedRecord, path.string() + ": exactly 2 layers required");
    GatWeights w;
    w.uses_edge_features = j.at("uses_edge_features").get<bool>();
    for (std::size_t i = 0; i < 2; ++i) {
      GatLayer& layer = w.layers[i];
      layer.w = layers[i].at("w").get<std::vector<Vec>>();
      layer.a_src = layers[i].at("a_src").get<Vec>();
      layer.a_dst = layers[i].at("a_dst").get<Vec>();
      layer.a_edge = layers[i].at("a_edge").get<Vec>();
      layer.leaky_slope = layers[i].at("leaky_slope").get<double>();
      if (layer.w.empty()) fail(Errc::DimensionMismatch, "empty weight matrix");
      for (const auto& row : layer.w) {
        if (row.size() != layer.dim_in())
          fail(Errc::DimensionMismatch, "ragged weight matrix");
        check_finite(row, "weight row");
      }
      for (const Vec* v : {&layer.a_src, &layer.a_dst, &layer.a_edge}) {
        if (v->size() != layer.dim_out())
          fail(Errc::DimensionMismatch, "attention vector length != dim_out");
        check_finite(*v, "attention vector");
      }
    }
    if (w.layers[0].dim_out() != w.layers[1].dim_in())
      fail(Errc::DimensionMismatch, "layer-1 dim_out != layer-2 dim_in");
    return w;
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

namespace {

struct Contender {
  int neighbor;          // node attended to
  int edge = -1;         // index into edge features, -1 for the self-loop
};

std::map<int, Vec> gat_layer(const DocGraph& graph, const GatLayer& layer, bool use_edges,
                             const std::map<int, Vec>& h, const std::vector<Vec>& edge_feats,
                             bool final_layer, std::map<int, double>* row_sums,
                             std::vector<Vec>* edge_out) {
  // Projected node and edge features.
  std::map<int, Vec> wh;
  for (const auto& [id, vec] : h) {
    if (vec.size() != layer.dim_in())
      fail(Errc::DimensionMismatch, "node feature length " + std::to_string(vec.size()) +
                                        " != layer dim_in " + std::to_string(layer.dim_in()));
    wh[id] = matvec(layer.w, vec);
  }
  std::vector<Vec> we(edge_feats.size());
  for (std::size_t i = 0; i < edge_feats.size(); ++i) {
    if (edge_feats[i].size() != layer.dim_in())
      fail(Errc::DimensionMismatch, "edge feature length != layer dim_in");
    we[i] = matvec(layer.w, edge_feats[i]);
  }

  // Bidirectional neighborhoods; parallel edges stay separate contenders.
  std::map<int, std::vector<Contender>> contenders;
  for (const auto& [id, vec] : h) contenders[id].push_back({id, -1});  // self-loop
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const GraphEdge& e = graph.edges[i];
    contenders[e.dst].push_back({e.src, static_cast<int>(i)});
    contenders[e.src].push_back({e.dst, static_cast<int>(i)});
  }
  // Canonical summation order, so the output is bitwise independent of how
  // nodes and edges happen to be stored. Parallel edges sharing neighbor and
  // label contribute identical summands, so their relative order is moot.
  for (auto& [id, list] : contenders) {
    std::stable_sort(list.begin(), list.end(), [&](const Contender& x, const Contender& y) {
      if (x.neighbor != y.neighbor) return x.neighbor < y.neighbor;
      const std::string_view lx =
          x.edge < 0 ? std::string_view() : std::string_view(graph.edges[x.edge].label_key);
      const std::string_view ly =
          y.edge < 0 ? std::string_view() : std::string_view(graph.edges[y.edge].label_key);
      return lx < ly;
    });
  }

  std::map<int, Vec> out;
  for (const auto& [id, list] : contenders) {
    const Vec& wh_i = wh.at(id);
    const double self_term = dot(layer.a_src, wh_i);
    std::vector<double> logits(list.size());
    for (std::size_t c = 0; c < list.size(); ++c) {
      double score = self_term + dot(layer.a_dst, wh.at(list[c].neighbor));
      if (use_edges && list[c].edge >= 0) score += dot(layer.a_edge, we[list[c].edge]);
      logits[c] = leaky_relu(score, layer.leaky_slope);
    }
    double max_logit = logits[0];
    for (double l : logits) max_logit = std::max(max_logit, l);
    double denom = 0.0;
    for (double& l : logits) {
      l = std::exp(l - max_logit);
      denom += l;
    }
    Vec agg(layer.dim_out(), 0.0);
    double row_sum = 0.0;
    for (std::size_t c = 0; c < list.size(); ++c) {
      const double alpha = logits[c] / denom;
      row_sum += alpha;
      const Vec& wh_j = wh.at(list[c].neighbor);
      for (std::size_t d = 0; d < agg.size(); ++d) agg[d] += alpha * wh_j[d];
    }
    if (row_sums) (*row_sums)[id] = row_sum;
    if (!final_layer)
      for (double& x : agg) x = elu(x);
    out[id] = std::move(agg);
  }

  if (edge_out) {
    edge_out->resize(we.size());
    for (std::size_t i = 0; i < we.size(); ++i) {
      Vec v = we[i];
      if (!final_layer)
        for (double& x : v) x = elu(x);
      (*edge_out)[i] = std::move(v);
    }
  }
  return out;
}

}  // namespace

std::map<int, std::vector<double>> gat_forward(const DocGraph& graph, const GatWeights& weights,
                                               const EmbeddingTable& embeds, GatTrace* trace) {
  if (graph.nodes.empty()) fail(Errc::EmptyParagraphs, "graph has no nodes");
  std::map<int, Vec> h;
  for (const auto& node : graph.nodes) {
    if (h.count(node.id)) fail(Errc::DuplicateId, "node id " + std::to_string(node.id));
    h[node.id] = embeds.at(node.text_key);
  }
  for (const auto& e : graph.edges)
    if (!h.count(e.src) || !h.count(e.dst))
      fail(Errc::MalformedRecord, "edge endpoint not in graph");

  std::vector<Vec> edge_feats;
  edge_feats.reserve(graph.edges.size());
  for (const auto& e : graph.edges) edge_feats.push_back(embeds.at(e.label_key));

  std::vector<Vec> edge_next;
  std::map<int, Vec> h1 =
      gat_layer(graph, weights.layers[0], weights.uses_edge_features, h, edge_feats,
                /*final_layer=*/false, trace ? &trace->attention_row_sums[0] : nullptr,
                &edge_next);
  return gat_layer(graph, weights.layers[1], weights.uses_edge_features, h1, edge_next,
                   /*final_layer=*/true, trace ? &trace->attention_row_sums[1] : nullptr,
                   nullptr);
}

double graph_score(const DocGraph& qg, const DocGraph& cg, const GatWeights& weights,
                   const EmbeddingTable& embeds) {
  auto hq = gat_forward(qg, weights, embeds);
  auto hc = gat_forward(cg, weights, embeds);
  return dot(hq.at(qg.global), hc.at(cg.global));
}

const char* to_string(DenseField field) {
  switch (field) {
    case DenseField::Full: return "full";
    case DenseField::LsrSummary: return "lsr_summary";
    case DenseField::PcrSummary: return "pcr_summary";
  }
  return "?";
}

double dense_score(const Document& query, const Document& cand, const EmbeddingTable& embeds,
                   DenseField field) {
  const auto& a = embeds.at(query.id.str() + ":" + to_string(field));
  const auto& b = embeds.at(cand.id.str() + ":" + to_string(field));
  return dot(a, b);
}

}  // namespace lexsem
