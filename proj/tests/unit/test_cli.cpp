#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsem/cli.hpp"
#include "lexsem/corpus.hpp"
#include "lexsem/error.hpp"
#include "lexsem/graph.hpp"
#include "lexsem/types.hpp"
#include "lexsem/util.hpp"

using namespace lexsem;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  int code = run_cli(std::move(args));
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

Document make_doc(const std::string& id, DocKind kind, std::string text) {
  Document d;
  d.id = DocId(id);
  d.kind = kind;
  d.text = std::move(text);
  d.paragraphs.push_back({d.text, kind == DocKind::Statute ? Role::None : Role::Other});
  d.sentences = split_sentences(d.text);
  return d;
}

Document make_query(const std::string& id, Split split,
                    std::initializer_list<const char*> statutes,
                    std::initializer_list<const char*> precedents) {
  // Every query mentions a distinct phrase from each statute so BM25 gives
  // all four candidates a nonzero score.
  Document d = make_doc(id, DocKind::Query,
                        "The accused committed theft of movable goods, a criminal breach of "
                        "entrusted funds, dishonest inducement to deliver, and forgery of "
                        "valuable records.");
  d.split = split;
  for (const char* s : statutes) d.cited_statutes.emplace(s);
  for (const char* p : precedents) d.cited_precedents.emplace(p);
  return d;
}

CorpusBundle demo_bundle() {
  CorpusBundle b;
  b.statutes[DocId("s1")] =
      make_doc("s1", DocKind::Statute, "Theft\nWhoever commits theft of movable goods is liable.");
  b.statutes[DocId("s2")] = make_doc(
      "s2", DocKind::Statute, "Breach of trust\nA criminal breach of entrusted funds is punished.");
  b.statutes[DocId("s3")] = make_doc(
      "s3", DocKind::Statute, "Cheating\nDishonest inducement to deliver property is cheating.");
  b.statutes[DocId("s4")] = make_doc(
      "s4", DocKind::Statute, "Forgery\nMaking forgery of valuable records is an offence.");

  Document p1 = make_doc("p1", DocKind::Precedent,
                         "The appellant committed theft of movable goods from the warehouse.");
  p1.cited_statutes = {DocId("s1"), DocId("s2")};
  Document p2 = make_doc("p2", DocKind::Precedent,
                         "A criminal breach of entrusted funds by the agent was established.");
  p2.cited_statutes = {DocId("s2"), DocId("s3")};
  Document p3 = make_doc("p3", DocKind::Precedent,
                         "The dishonest inducement to deliver property failed on the facts.");
  p3.cited_statutes = {DocId("s3")};
  b.precedents[p1.id] = p1;
  b.precedents[p2.id] = p2;
  b.precedents[p3.id] = p3;

  b.queries[DocId("q_t1")] = make_query("q_t1", Split::Train, {"s1", "s2"}, {"p1"});
  // The colon exercises the path-safe encoding of ranking file names.
  b.queries[DocId("q:t2")] = make_query("q:t2", Split::Train, {"s3"}, {"p2"});
  b.queries[DocId("q_v1")] = make_query("q_v1", Split::Val, {"s1"}, {"p1"});
  b.queries[DocId("q_v2")] = make_query("q_v2", Split::Val, {"s2", "s3"}, {"p2"});
  b.queries[DocId("q1")] = make_query("q1", Split::Test, {"s1", "s2"}, {"p1", "p2"});
  b.queries[DocId("q2")] = make_query("q2", Split::Test, {"s3"}, {"p3"});
  return b;
}

/// Corpus, statute index and a bm25 run over val+test, built once.
struct CliFixture {
  fs::path root;
  fs::path corpus;
  fs::path index_dir;
  fs::path run_bm25;

  CliFixture() {
    root = fs::temp_directory_path() / "lexsem_cli_fixture";
    fs::remove_all(root);
    corpus = root / "corpus";
    fs::create_directories(corpus);
    serialize_corpus(demo_bundle(), corpus);

    index_dir = root / "index";
    REQUIRE(run({"index", "--corpus", corpus.string(), "--task", "lsr", "--out",
                 index_dir.string()})
                .code == 0);

    run_bm25 = root / "run_bm25";
    REQUIRE(run({"retrieve", "--corpus", corpus.string(), "--task", "lsr", "--method", "bm25",
                 "--index", index_dir.string(), "--split", "val", "--split", "test", "--out",
                 run_bm25.string()})
                .code == 0);
  }
};

CliFixture& fixture() {
  static CliFixture f;
  return f;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fixture().root / name;
  fs::remove_all(p);
  return p;
}

/// Hand-written run directory holding only ranking files.
void write_run(const fs::path& dir, const std::map<std::string, std::string>& rankings) {
  fs::create_directories(dir / "rankings");
  for (const auto& [qid, body] : rankings)
    atomic_write_file(dir / "rankings" / (path_safe(qid) + ".txt"), body);
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

std::set<DocId> ranked_id_set(const RankedList& list) {
  std::set<DocId> out;
  for (const auto& sd : list) out.insert(sd.id);
  return out;
}

}  // namespace

TEST_CASE("cli: unknown subcommand and missing required flags exit 1") {
  CliResult bogus = run({"frobnicate"});
  CHECK(bogus.code == 1);
  CHECK(bogus.err.find("Usage") != std::string::npos);
  CHECK(run({"index"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: validate reports masking violations and still exits 0") {
  CliFixture& f = fixture();
  fs::path dirty = fresh_dir("corpus_dirty");
  fs::create_directories(dirty);
  CorpusBundle b = demo_bundle();
  Document& q = b.queries[DocId("q1")];
  q.text += " The court applied Section 42 here.";
  q.paragraphs = {{q.text, Role::Other}};
  q.sentences = split_sentences(q.text);
  serialize_corpus(b, dirty);

  fs::path out = fresh_dir("run_validate");
  CliResult r = run({"validate", "--corpus", dirty.string(), "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("masking violations 1") != std::string::npos);
  std::string report = read_file(out / "reports" / "validation.txt");
  CHECK(report.find("q1") != std::string::npos);
  CHECK(report.find("Section 42") != std::string::npos);

  RunManifest m = RunManifest::load(out / "manifest.json");
  CHECK(m.subcommand == "validate");
  CHECK(m.error.empty());
  CHECK(m.outputs.count("reports/validation.txt") == 1);
  CHECK(m.corpus_hash == corpus_digest(dirty));
  CHECK(m.corpus_hash != corpus_digest(f.corpus));
}

TEST_CASE("cli: index writes a loadable index and records parameters") {
  CliFixture& f = fixture();
  RunManifest m = RunManifest::load(f.index_dir / "manifest.json");
  CHECK(m.subcommand == "index");
  CHECK(m.outputs.count("index.json") == 1);
  CHECK(m.params.at("task") == "lsr");
  CHECK(m.params.at("n") == "2,3,4,5");
  CHECK(m.params.at("k1") == "1.6");
  CHECK(m.params.at("filter_events") == "false");
}

TEST_CASE("cli: retrieve writes one ranking file per query with 9-digit scores") {
  CliFixture& f = fixture();
  auto rankings = load_run_rankings(f.run_bm25);
  REQUIRE(rankings.size() == 4);  // val + test queries
  CHECK(rankings.count(DocId("q1")) == 1);
  CHECK(rankings.count(DocId("q_v2")) == 1);
  for (const auto& [qid, list] : rankings) {
    REQUIRE(list.size() == 4);  // every statute scores via a shared phrase
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1].score >= list[i].score);
  }
  // Scores round-trip through the text encoding exactly.
  std::string body = read_file(f.run_bm25 / "rankings" / "q1.txt");
  for (const auto& sd : rankings.at(DocId("q1")))
    CHECK(body.find(format_score(sd.score)) != std::string::npos);
}

TEST_CASE("cli: ranking file names survive path-unsafe query ids") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_train_split");
  CliResult r = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                     "bm25", "--index", f.index_dir.string(), "--split", "train", "--out",
                     out.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "rankings" / "q%3At2.txt"));
  auto rankings = load_run_rankings(out);
  CHECK(rankings.count(DocId("q:t2")) == 1);
}

TEST_CASE("cli: identical retrieve invocations agree on config hash and output digests") {
  CliFixture& f = fixture();
  fs::path out_a = fresh_dir("run_det_a");
  fs::path out_b = fresh_dir("run_det_b");
  std::vector<std::string> base = {"retrieve", "--corpus", f.corpus.string(), "--task", "lsr",
                                   "--method",  "bm25",    "--index", f.index_dir.string(),
                                   "--split",   "test"};
  std::vector<std::string> args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out", out_a.string()});
  args_b.insert(args_b.end(), {"--out", out_b.string()});
  REQUIRE(run(args_a).code == 0);
  REQUIRE(run(args_b).code == 0);

  RunManifest a = RunManifest::load(out_a / "manifest.json");
  RunManifest b = RunManifest::load(out_b / "manifest.json");
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.corpus_hash == b.corpus_hash);
  CHECK(a.outputs == b.outputs);
  CHECK(a.run_id != b.run_id);
}

TEST_CASE("cli: worker count changes neither rankings nor the config hash") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_workers");
  CliResult r = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                     "bm25", "--index", f.index_dir.string(), "--split", "val", "--split", "test",
                     "--workers", "4", "--out", out.string()});
  REQUIRE(r.code == 0);
  RunManifest serial = RunManifest::load(f.run_bm25 / "manifest.json");
  RunManifest threaded = RunManifest::load(out / "manifest.json");
  CHECK(serial.outputs == threaded.outputs);
  // Worker count is an execution knob, not part of the run's identity.
  CHECK(serial.config_hash == threaded.config_hash);
}

TEST_CASE("cli: filtered index passes docs without events through unchanged") {
  CliFixture& f = fixture();
  fs::path filtered = fresh_dir("index_filtered");
  CliResult r = run({"index", "--corpus", f.corpus.string(), "--task", "lsr", "--filter-events",
                     "--out", filtered.string()});
  REQUIRE(r.code == 0);
  RunManifest m = RunManifest::load(filtered / "manifest.json");
  CHECK(m.outputs.count("filter.json") == 1);
  json fj = read_json(filtered / "filter.json");
  CHECK(fj.at("kind") == "event-filter");
  CHECK(fj.at("filter_queries") == true);
  CHECK(fj.at("query_events").size() == 6);
  // No doc has events, so the filtered index matches the plain one.
  CHECK(read_file(filtered / "index.json") == read_file(f.index_dir / "index.json"));

  fs::path out = fresh_dir("run_filtered");
  CHECK(run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method", "bm25",
             "--index", filtered.string(), "--split", "test", "--out", out.string()})
            .code == 0);
}

TEST_CASE("cli: events sidecar narrows candidates to event-matched sentences") {
  CliFixture& f = fixture();
  fs::path events = fixture().root / "events.jsonl";
  // s1's event shares tokens with q1's, so its sentence survives. s2's
  // event matches no query vocab, so every s2 sentence is dropped and s2
  // leaves the index. s3 and s4 have no events and pass through whole.
  atomic_write_file(events,
                    "{\"id\":\"q1\",\"events\":[[\"accused\",\"commits\",\"theft\"]]}\n"
                    "{\"id\":\"s1\",\"events\":[[\"whoever\",\"commits\",\"theft\"]]}\n"
                    "{\"id\":\"s2\",\"events\":[[\"agent\",\"entrusted\",\"funds\"]]}\n");
  fs::path indexed = fresh_dir("index_events");
  CliResult r = run({"index", "--corpus", f.corpus.string(), "--task", "lsr", "--events",
                     events.string(), "--out", indexed.string()});
  REQUIRE(r.code == 0);
  json fj = read_json(indexed / "filter.json");
  CHECK(fj.at("query_events").at("q1").size() == 1);
  CHECK(fj.at("query_events").at("q2").empty());

  fs::path out = fresh_dir("run_events");
  REQUIRE(run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method", "bm25",
               "--index", indexed.string(), "--split", "test", "--out", out.string()})
              .code == 0);
  auto rankings = load_run_rankings(out);
  const RankedList& got = rankings.at(DocId("q1"));
  REQUIRE(got.size() == 4);
  // s2 lost all sentences, so only the n-gram-free zero score remains.
  CHECK(got.back().id == DocId("s2"));
  CHECK(got.back().score == 0.0);
  for (std::size_t i = 0; i + 1 < got.size(); ++i) CHECK(got[i].score > 0.0);
}

TEST_CASE("cli: ensemble retrieve needs alpha or a gate") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_ens_usage");
  CliResult r = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                     "ensemble", "--sem-run", f.run_bm25.string(), "--lex-run",
                     f.run_bm25.string(), "--split", "test", "--out", out.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("alpha") != std::string::npos);
}

TEST_CASE("cli: fixed-alpha ensemble of a run with itself keeps its order") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_ens_fixed");
  CliResult r = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                     "ensemble", "--sem-run", f.run_bm25.string(), "--lex-run",
                     f.run_bm25.string(), "--alpha", "0.3", "--split", "test", "--out",
                     out.string()});
  REQUIRE(r.code == 0);
  auto fused = load_run_rankings(out);
  auto base = load_run_rankings(f.run_bm25);
  for (const char* qid : {"q1", "q2"})
    CHECK(ranked_ids(fused.at(DocId(qid))) == ranked_ids(base.at(DocId(qid))));
  RunManifest m = RunManifest::load(out / "manifest.json");
  CHECK(m.params.at("alpha_mode") == "fixed");
  CHECK(m.params.at("alpha") == "0.3");
}

TEST_CASE("cli: grid-search scores the eleven-point grid on validation queries") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_grid");
  CliResult r = run({"grid-search", "--corpus", f.corpus.string(), "--task", "lsr", "--sem-run",
                     f.run_bm25.string(), "--lex-run", f.run_bm25.string(), "--out",
                     out.string()});
  REQUIRE(r.code == 0);
  // Identical runs tie at every step; the scan keeps the smallest alpha.
  CHECK(r.out.find("alpha 0\n") != std::string::npos);
  json gj = read_json(out / "reports" / "grid.json");
  CHECK(gj.at("alpha") == 0.0);
  CHECK(gj.at("objective").size() == 11);
  double first = gj.at("objective").at("0").get<double>();
  for (const auto& [key, value] : gj.at("objective").items())
    CHECK(value.get<double>() == doctest::Approx(first));
}

TEST_CASE("cli: train-alpha saves a gate that retrieve can apply") {
  CliFixture& f = fixture();
  fs::path train_run = fresh_dir("run_train_rankings");
  REQUIRE(run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method", "bm25",
               "--index", f.index_dir.string(), "--split", "train", "--out", train_run.string()})
              .code == 0);

  std::set<std::string> keys;
  for (const char* q : {"q_t1", "q:t2", "q_v1", "q_v2", "q1", "q2"})
    keys.insert(std::string(q) + ":full");
  fs::path embeds = fixture().root / "query_embeds.json";
  EmbeddingTable::random_init(keys, 6, 7).save(embeds);

  fs::path gate_run = fresh_dir("run_gate");
  CliResult r = run({"train-alpha", "--corpus", f.corpus.string(), "--task", "lsr", "--sem-run",
                     train_run.string(), "--lex-run", train_run.string(), "--embeds",
                     embeds.string(), "--epochs", "3", "--seed", "11", "--out",
                     gate_run.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(gate_run / "gate.json"));
  json aj = read_json(gate_run / "reports" / "alpha.json");
  CHECK(aj.at("alpha").size() == 2);

  fs::path fused = fresh_dir("run_ens_gate");
  CliResult rr = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                      "ensemble", "--sem-run", f.run_bm25.string(), "--lex-run",
                      f.run_bm25.string(), "--gate", gate_run.string(), "--embeds",
                      embeds.string(), "--split", "test", "--out", fused.string()});
  REQUIRE(rr.code == 0);
  json fused_alpha = read_json(fused / "reports" / "alpha.json");
  for (const auto& [qid, alpha] : fused_alpha.at("alpha").items()) {
    CHECK(alpha.get<double>() > 0.0);
    CHECK(alpha.get<double>() < 1.0);
  }

  // A gate trained for one task cannot steer the other.
  fs::path wrong = fresh_dir("run_ens_wrong_task");
  CliResult rw = run({"retrieve", "--corpus", f.corpus.string(), "--task", "pcr", "--method",
                      "ensemble", "--sem-run", f.run_bm25.string(), "--lex-run",
                      f.run_bm25.string(), "--gate", gate_run.string(), "--embeds",
                      embeds.string(), "--split", "test", "--out", wrong.string()});
  CHECK(rw.code == 2);
  CHECK(rw.err.find("TaskMismatch") != std::string::npos);
}

TEST_CASE("cli: stub rerank permutes the base ranking and persists its exchanges") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_rerank1");
  CliResult r = run({"rerank", "--corpus", f.corpus.string(), "--task", "lsr", "--stage", "1",
                     "--backend", "stub", "--run", f.run_bm25.string(), "--split", "test",
                     "--out", out.string()});
  REQUIRE(r.code == 0);

  auto base = load_run_rankings(f.run_bm25);
  auto reranked = load_run_rankings(out);
  for (const char* qid : {"q1", "q2"}) {
    CHECK(ranked_id_set(reranked.at(DocId(qid))) == ranked_id_set(base.at(DocId(qid))));
    const RankedList& list = reranked.at(DocId(qid));
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1].score > list[i].score);
  }

  json pj = read_json(out / "positives.json");
  CHECK(pj.at("kind") == "rerank-positives");
  CHECK(pj.at("stage") == 1);
  CHECK(pj.at("positives").size() == 2);

  bool any_prompt = false;
  for (const auto& entry : fs::directory_iterator(out / "prompts"))
    if (entry.path().string().ends_with(".prompt.txt")) any_prompt = true;
  CHECK(any_prompt);
  CHECK(fs::exists(out / "reports" / "warnings.txt"));
}

TEST_CASE("cli: stage-2 rerank requires the other task's stage-1 run") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_rerank2_usage");
  CliResult r = run({"rerank", "--corpus", f.corpus.string(), "--task", "lsr", "--stage", "2",
                     "--backend", "stub", "--run", f.run_bm25.string(), "--split", "test",
                     "--out", out.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("cond-run") != std::string::npos);
}

TEST_CASE("cli: stage-2 rerank consumes persisted stage-1 positives") {
  CliFixture& f = fixture();
  fs::path cond = fresh_dir("run_cond");
  fs::create_directories(cond);
  json pj;
  pj["version"] = 1;
  pj["kind"] = "rerank-positives";
  pj["task"] = "pcr";
  pj["stage"] = 1;
  pj["positives"] = {{"q1", {"p1"}}};
  atomic_write_file(cond / "positives.json", pj.dump());

  fs::path out = fresh_dir("run_rerank2");
  CliResult r = run({"rerank", "--corpus", f.corpus.string(), "--task", "lsr", "--stage", "2",
                     "--backend", "stub", "--run", f.run_bm25.string(), "--cond-run",
                     cond.string(), "--split", "test", "--out", out.string()});
  REQUIRE(r.code == 0);
  auto base = load_run_rankings(f.run_bm25);
  auto reranked = load_run_rankings(out);
  for (const char* qid : {"q1", "q2"})
    CHECK(ranked_id_set(reranked.at(DocId(qid))) == ranked_id_set(base.at(DocId(qid))));
  RunManifest m = RunManifest::load(out / "manifest.json");
  CHECK(m.params.at("stage") == "2");
  CHECK(m.params.at("cond_run") == "run_cond");
}

TEST_CASE("cli: eval chooses k on validation rankings when the run covers them") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_eval");
  CliResult r = run({"eval", "--pred", f.run_bm25.string(), "--gold", f.corpus.string(),
                     "--task", "lsr", "--split", "test", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("macro-F1@") != std::string::npos);
  json ej = read_json(out / "reports" / "eval.json");
  CHECK(ej.at("kind") == "eval-report");
  CHECK(ej.at("k_source") == "validation");
  CHECK(ej.at("per_query").size() == 2);
  CHECK(ej.at("macro_f1").size() == 10);
  std::string text = read_file(out / "reports" / "eval.txt");
  CHECK(text.find("chosen k") != std::string::npos);

  // Evaluating the validation split itself falls back to self-chosen k.
  fs::path out_val = fresh_dir("run_eval_val");
  REQUIRE(run({"eval", "--pred", f.run_bm25.string(), "--gold", f.corpus.string(), "--task",
               "lsr", "--split", "val", "--out", out_val.string()})
              .code == 0);
  CHECK(read_json(out_val / "reports" / "eval.json").at("k_source") == "self");

  // A pinned k overrides both.
  fs::path out_k = fresh_dir("run_eval_k");
  REQUIRE(run({"eval", "--pred", f.run_bm25.string(), "--gold", f.corpus.string(), "--task",
               "lsr", "--split", "test", "--k", "3", "--out", out_k.string()})
              .code == 0);
  json kj = read_json(out_k / "reports" / "eval.json");
  CHECK(kj.at("chosen_k") == 3);
  CHECK(kj.at("k_source") == "flag");
}

TEST_CASE("cli: eval on a split the run never ranked exits 2") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_eval_missing");
  CliResult r = run({"eval", "--pred", f.run_bm25.string(), "--gold", f.corpus.string(),
                     "--task", "lsr", "--split", "train", "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("KeyMismatch") != std::string::npos);
  // The manifest still lands, carrying the failure.
  RunManifest m = RunManifest::load(out / "manifest.json");
  CHECK(m.error.find("KeyMismatch") == 0);
}

TEST_CASE("cli: compare runs a paired t-test at pinned depths") {
  CliFixture& f = fixture();
  fs::path run_a = fresh_dir("run_cmp_a");
  fs::path run_b = fresh_dir("run_cmp_b");
  write_run(run_a, {{"q1", "s1 3\ns2 2\ns3 1\n"}, {"q2", "s3 3\ns1 2\n"}});
  write_run(run_b, {{"q1", "s4 3\ns2 2\ns1 1\n"}, {"q2", "s3 3\ns1 2\n"}});

  fs::path out = fresh_dir("run_compare");
  CliResult r = run({"compare", "--a", run_a.string(), "--b", run_b.string(), "--gold",
                     f.corpus.string(), "--task", "lsr", "--split", "test", "--k-a", "1",
                     "--k-b", "1", "--out", out.string()});
  REQUIRE(r.code == 0);
  json cj = read_json(out / "reports" / "compare.json");
  CHECK(cj.at("queries") == 2);
  CHECK(cj.at("chosen_k_a") == 1);
  // q1: a hits a gold statute at 1, b misses; q2 ties. One-sided advantage.
  CHECK(cj.at("t").get<double>() > 0.0);
  CHECK(cj.at("p").get<double>() > 0.0);
  CHECK(cj.at("p").get<double>() <= 1.0);
  CHECK(cj.at("macro_f1_a").get<double>() > cj.at("macro_f1_b").get<double>());
}

TEST_CASE("cli: report groups candidates by citation frequency") {
  CliFixture& f = fixture();
  fs::path run_a = fresh_dir("run_rep_in");
  write_run(run_a, {{"q1", "s1 3\ns2 2\ns3 1\n"}, {"q2", "s3 3\ns1 2\n"}});

  fs::path out = fresh_dir("run_report");
  CliResult r = run({"report", "--pred", run_a.string(), "--gold", f.corpus.string(), "--task",
                     "lsr", "--split", "test", "--key", "frequency", "--k", "1", "--groups",
                     "2", "--out", out.string()});
  REQUIRE(r.code == 0);
  json gj = read_json(out / "reports" / "groups.json");
  CHECK(gj.at("kind") == "group-report");
  CHECK(gj.at("groups").size() == 2);
  CHECK(gj.at("groups").at(0).at("size") == 2);
  // s4 is never cited anywhere and absent from both top-5 lists.
  CHECK(gj.at("never_cited") == 1);
  CHECK(gj.at("never_cited_top5") == 0);

  fs::path out_len = fresh_dir("run_report_len");
  CHECK(run({"report", "--pred", run_a.string(), "--gold", f.corpus.string(), "--task", "lsr",
             "--split", "test", "--key", "length", "--k", "1", "--groups", "2", "--out",
             out_len.string()})
            .code == 0);
}

TEST_CASE("cli: config file supplies values and flags override them") {
  CliFixture& f = fixture();
  fs::path cfg = fixture().root / "eval.ini";
  fs::path out_cfg = fresh_dir("run_cfg");
  atomic_write_file(cfg, "[eval]\npred=\"" + f.run_bm25.string() + "\"\ngold=\"" +
                             f.corpus.string() + "\"\ntask=lsr\nsplit=test\nk=2\nout=\"" +
                             out_cfg.string() + "\"\n");
  CliResult r = run({"eval", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(out_cfg / "reports" / "eval.json").at("chosen_k") == 2);

  fs::path out_flag = fresh_dir("run_cfg_flag");
  CliResult rf = run({"eval", "--config", cfg.string(), "--k", "4", "--out", out_flag.string()});
  REQUIRE(rf.code == 0);
  CHECK(read_json(out_flag / "reports" / "eval.json").at("chosen_k") == 4);
}

TEST_CASE("cli: a failing run still writes its manifest with the error") {
  CliFixture& f = fixture();
  fs::path out = fresh_dir("run_broken");
  CliResult r = run({"retrieve", "--corpus", f.corpus.string(), "--task", "lsr", "--method",
                     "bm25", "--index", (fixture().root / "no_such_index.json").string(),
                     "--split", "test", "--out", out.string()});
  CHECK(r.code == 2);
  RunManifest m = RunManifest::load(out / "manifest.json");
  CHECK_FALSE(m.error.empty());
  CHECK(m.subcommand == "retrieve");
}

TEST_CASE("cli: manifest round-trips through save and load") {
  RunManifest m;
  m.run_id = "r1";
  m.timestamp = "2026-01-01T00:00:00Z";
  m.subcommand = "retrieve";
  m.config_hash = "abc";
  m.corpus_hash = "def";
  m.seed = 42;
  m.params = {{"task", "lsr"}, {"method", "bm25"}};
  m.outputs = {{"rankings/q1.txt", "0123"}};
  fs::path p = fixture().root / "manifest_roundtrip.json";
  m.save(p);
  CHECK(RunManifest::load(p) == m);
}
