#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "lexsem/error.hpp"
#include "lexsem/graph.hpp"

using namespace lexsem;
namespace fs = std::filesystem;

namespace {

// The 4-node fixture shared with the dense-matrix oracle: Global(0) plus
// three entities, a parallel edge pair between 1 and 2.
DocGraph fixture_graph() {
  DocGraph g;
  g.global = 0;
  g.nodes = {{0, NodeKind::Global, "q0"},
             {1, NodeKind::Entity, "e1"},
             {2, NodeKind::Entity, "e2"},
             {3, NodeKind::Entity, "e3"}};
  g.edges = {{0, 1, "g"}, {0, 2, "g"}, {0, 3, "g"},
             {1, 2, "la"}, {2, 3, "lb"}, {1, 2, "lc"}};
  return g;
}

EmbeddingTable fixture_embeds() {
  return EmbeddingTable(3, {
      {"q0", {0.10, -0.20, 0.30}},
      {"e1", {0.40, 0.10, -0.10}},
      {"e2", {-0.30, 0.20, 0.15}},
      {"e3", {0.05, -0.05, 0.25}},
      {"g", {0.00, 0.10, -0.10}},
      {"la", {0.20, -0.10, 0.05}},
      {"lb", {-0.15, 0.05, 0.10}},
      {"lc", {0.08, 0.12, -0.03}},
  });
}

GatWeights fixture_weights() {
  GatWeights w;
  w.layers[0].w = {{0.20, -0.10, 0.05},
                   {0.00, 0.30, -0.20},
                   {0.10, 0.10, 0.10},
                   {-0.05, 0.15, 0.25}};
  w.layers[0].a_src = {0.10, -0.20, 0.30, 0.05};
  w.layers[0].a_dst = {-0.15, 0.25, 0.10, -0.05};
  w.layers[0].a_edge = {0.05, 0.05, -0.10, 0.20};
  w.layers[1].w = {{0.30, 0.10, -0.10, 0.20},
                   {-0.20, 0.05, 0.15, 0.10}};
  w.layers[1].a_src = {0.20, -0.10};
  w.layers[1].a_dst = {0.10, 0.30};
  w.layers[1].a_edge = {-0.05, 0.15};
  return w;
}

}  // namespace

TEST_CASE("build_event_graph wires entities, actions, and the global hub") {
  Document doc;
  doc.id = DocId("case1");

  SUBCASE("no events leaves only the global node") {
    auto g = build_event_graph(doc, {});
    REQUIRE(g.nodes.size() == 1);
    CHECK(g.nodes[0].kind == NodeKind::Global);
    CHECK(g.nodes[0].text_key == "case1");
    CHECK(g.edges.empty());
    CHECK(g.cited_globals.empty());
  }

  SUBCASE("single triplet") {
    doc.events = {{"A", "did", "B"}};
    auto g = build_event_graph(doc, {DocId("other")});
    REQUIRE(g.nodes.size() == 3);
    REQUIRE(g.edges.size() == 3);
    // Global spokes first, then the action edge.
    CHECK(g.edges[0].src == g.global);
    CHECK(g.edges[0].label_key == kGlobalEdgeLabel);
    CHECK(g.edges[1].label_key == kGlobalEdgeLabel);
    CHECK(g.edges[2].label_key == "did");
    CHECK(g.cited_globals == std::set<DocId>{DocId("other")});
  }

  SUBCASE("shared entities collapse to one node each") {
    doc.events = {{"A", "sued", "B"}, {"B", "paid", "C"}, {"A", "met", "C"}, {"C", "left", "A"}};
    auto g = build_event_graph(doc, {});
    CHECK(g.nodes.size() == 4);  // global + A, B, C
    int action_edges = 0;
    for (const auto& e : g.edges)
      if (e.label_key != kGlobalEdgeLabel) ++action_edges;
    CHECK(action_edges == 4);
    CHECK(g.edges.size() == 7);  // 3 spokes + 4 actions
  }

  SUBCASE("empty object keeps the subject only") {
    doc.events = {{"court", "adjourned", ""}};
    auto g = build_event_graph(doc, {});
    CHECK(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].label_key == kGlobalEdgeLabel);
  }
}

TEST_CASE("build_para_graph links every paragraph to the global node") {
  Document doc;
  doc.id = DocId("d1");

  SUBCASE("single paragraph") {
    doc.paragraphs = {{"only text", Role::Other}};
    auto g = build_para_graph(doc);
    CHECK(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].src == g.global);
    CHECK(g.edges[0].label_key == "other");
    CHECK(g.nodes[1].text_key == "only text");
  }

  SUBCASE("statute subsections all carry the none role") {
    doc.paragraphs = {{"s1", Role::None}, {"s2", Role::None}, {"s3", Role::None}};
    auto g = build_para_graph(doc);
    REQUIRE(g.edges.size() == 3);
    for (const auto& e : g.edges) CHECK(e.label_key == "none");
  }

  SUBCASE("rhetorical roles become edge labels") {
    doc.paragraphs = {{"p1", Role::Facts}, {"p2", Role::Arguments}, {"p3", Role::Arguments},
                      {"p4", Role::Ruling}, {"p5", Role::Other}};
    auto g = build_para_graph(doc);
    std::multiset<std::string> labels;
    for (const auto& e : g.edges) labels.insert(e.label_key);
    CHECK(labels == std::multiset<std::string>{"arguments", "arguments", "facts", "other",
                                               "ruling"});
  }

  SUBCASE("no paragraphs raises") {
    CHECK_THROWS_AS(build_para_graph(doc), Error);
  }
}

TEST_CASE("embedding table enforces its invariants") {
  CHECK_THROWS_AS(EmbeddingTable(2, {{"a", {1.0}}}), Error);
  EmbeddingTable t(2, {{"a", {1.0, 2.0}}});
  CHECK_THROWS_AS(t.at("missing"), Error);
  try {
    t.at("missing");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingEmbedding);
  }

  auto r1 = EmbeddingTable::random_init({"x", "y"}, 4, 7);
  auto r2 = EmbeddingTable::random_init({"x", "y"}, 4, 7);
  auto r3 = EmbeddingTable::random_init({"x", "y"}, 4, 8);
  CHECK(r1 == r2);
  CHECK(r1 != r3);
  const double bound = 1.0 / std::sqrt(4.0);
  for (const auto& [key, vec] : r1.vectors())
    for (double v : vec) {
      CHECK(v >= -bound);
      CHECK(v < bound);
    }

  fs::path path = fs::temp_directory_path() / "lexsem_embeds.json";
  r1.save(path);
  CHECK(EmbeddingTable::load(path) == r1);
}

TEST_CASE("gat weights round-trip and validate") {
  auto w = GatWeights::random_init(3, 4, 2, 42);
  CHECK(w.layers[0].dim_in() == 3);
  CHECK(w.layers[0].dim_out() == 4);
  CHECK(w.layers[1].dim_in() == 4);
  CHECK(w.layers[1].dim_out() == 2);
  CHECK(GatWeights::random_init(3, 4, 2, 42) == w);

  fs::path path = fs::temp_directory_path() / "lexsem_gat.json";
  w.save(path);
  CHECK(GatWeights::load(path) == w);
}

TEST_CASE("gat_forward on an isolated node is the W-chain of its embedding") {
  DocGraph g;
  g.global = 0;
  g.nodes = {{0, NodeKind::Global, "solo"}};
  EmbeddingTable embeds(3, {{"solo", {0.5, -0.25, 0.0}}});
  GatWeights w;
  for (auto& layer : w.layers) {
    layer.w = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    layer.a_src = {0, 0, 0};
    layer.a_dst = {0, 0, 0};
    layer.a_edge = {0, 0, 0};
  }
  GatTrace trace;
  auto h = gat_forward(g, w, embeds, &trace);
  REQUIRE(h.size() == 1);
  // Self-loop only: alpha = 1; layer 1 applies ELU, layer 2 identity.
  CHECK(h[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h[0][1] == doctest::Approx(std::expm1(-0.25)).epsilon(1e-12));
  CHECK(h[0][2] == 0.0);
  CHECK(trace.attention_row_sums[0][0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(trace.attention_row_sums[1][0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gat_forward matches the dense-matrix oracle") {
  auto g = fixture_graph();
  auto embeds = fixture_embeds();
  auto w = fixture_weights();

  SUBCASE("with edge features") {
    auto h = gat_forward(g, w, embeds);
    CHECK(h[0][0] == doctest::Approx(0.006977389040635261).epsilon(1e-9));
    CHECK(h[0][1] == doctest::Approx(0.003995571928136444).epsilon(1e-9));
    CHECK(h[1][0] == doctest::Approx(0.007842577489013413).epsilon(1e-9));
    CHECK(h[1][1] == doctest::Approx(0.0026562855143266225).epsilon(1e-9));
    CHECK(h[2][0] == doctest::Approx(0.006548241550686436).epsilon(1e-9));
    CHECK(h[2][1] == doctest::Approx(0.004848776369705807).epsilon(1e-9));
    CHECK(h[3][0] == doctest::Approx(0.007695324587318787).epsilon(1e-9));
    CHECK(h[3][1] == doctest::Approx(0.002568274297953359).epsilon(1e-9));
  }

  SUBCASE("without edge features") {
    w.uses_edge_features = false;
    auto h = gat_forward(g, w, embeds);
    CHECK(h[0][0] == doctest::Approx(0.006981394853685565).epsilon(1e-9));
    CHECK(h[0][1] == doctest::Approx(0.003986714276720545).epsilon(1e-9));
    CHECK(h[3][0] == doctest::Approx(0.007700493876672947).epsilon(1e-9));
    CHECK(h[3][1] == doctest::Approx(0.0025561813370619827).epsilon(1e-9));
  }
}

TEST_CASE("attention rows sum to one") {
  GatTrace trace;
  gat_forward(fixture_graph(), fixture_weights(), fixture_embeds(), &trace);
  for (const auto& layer : trace.attention_row_sums) {
    REQUIRE(layer.size() == 4);
    for (const auto& [node, sum] : layer) CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gat_forward ignores node and edge storage order") {
  auto g = fixture_graph();
  auto base = gat_forward(g, fixture_weights(), fixture_embeds());

  DocGraph shuffled = g;
  std::reverse(shuffled.nodes.begin(), shuffled.nodes.end());
  std::reverse(shuffled.edges.begin(), shuffled.edges.end());
  auto permuted = gat_forward(shuffled, fixture_weights(), fixture_embeds());

  // Bitwise equality: the pass canonicalizes its summation order.
  REQUIRE(base.size() == permuted.size());
  for (const auto& [id, vec] : base) {
    REQUIRE(permuted.count(id));
    for (std::size_t d = 0; d < vec.size(); ++d) CHECK(vec[d] == permuted[id][d]);
  }
}

TEST_CASE("graph_score is a symmetric global-node dot product") {
  auto q = fixture_graph();
  DocGraph c;
  c.global = 0;
  c.nodes = {{0, NodeKind::Global, "q0"}, {1, NodeKind::Entity, "e3"}};
  c.edges = {{0, 1, "g"}};

  auto w = fixture_weights();
  auto embeds = fixture_embeds();
  double qc = graph_score(q, c, w, embeds);
  double cq = graph_score(c, q, w, embeds);
  CHECK(qc == doctest::Approx(cq).epsilon(1e-12));

  // Identical graphs: squared norm of the global representation.
  double self = graph_score(q, q, w, embeds);
  CHECK(self == doctest::Approx(6.464855285728904e-05).epsilon(1e-9));
  CHECK(self >= 0.0);

  // All-zero embeddings produce a zero score.
  std::map<std::string, std::vector<double>> zeros;
  for (const auto& [key, vec] : embeds.vectors()) zeros[key] = {0.0, 0.0, 0.0};
  EmbeddingTable zero_table(3, zeros);
  CHECK(graph_score(q, c, w, zero_table) == 0.0);
}

TEST_CASE("gat_forward reports missing keys and bad dimensions") {
  auto g = fixture_graph();
  auto w = fixture_weights();
  EmbeddingTable missing(3, {{"q0", {0.1, 0.2, 0.3}}});
  CHECK_THROWS_AS(gat_forward(g, w, missing), Error);

  EmbeddingTable wrong_dim = EmbeddingTable::random_init(
      {"q0", "e1", "e2", "e3", "g", "la", "lb", "lc"}, 5, 1);
  try {
    gat_forward(g, w, wrong_dim);
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
}

TEST_CASE("dense_score reads per-document field vectors") {
  Document q, c;
  q.id = DocId("q1");
  c.id = DocId("p1");
  EmbeddingTable embeds(3, {
      {"q1:full", {1.0, 2.0, 3.0}},
      {"p1:full", {1.0, 2.0, 3.0}},
      {"q1:lsr_summary", {1.0, 0.0, 0.0}},
      {"p1:lsr_summary", {0.0, 1.0, 0.0}},
      {"q1:pcr_summary", {2.0, -1.0, 0.5}},
      {"p1:pcr_summary", {1.0, 1.0, 2.0}},
  });
  CHECK(dense_score(q, c, embeds, DenseField::Full) == 14.0);
  CHECK(dense_score(q, c, embeds, DenseField::LsrSummary) == 0.0);
  CHECK(dense_score(q, c, embeds, DenseField::PcrSummary) == doctest::Approx(2.0).epsilon(1e-12));
  Document other;
  other.id = DocId("p2");
  CHECK_THROWS_AS(dense_score(q, other, embeds, DenseField::Full), Error);
}
