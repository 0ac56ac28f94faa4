#include "lexsem/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexsem/corpus.hpp"
#include "lexsem/ensemble.hpp"
#include "lexsem/error.hpp"
#include "lexsem/eval.hpp"
#include "lexsem/graph.hpp"
#include "lexsem/lexical.hpp"
#include "lexsem/paragraph.hpp"
#include "lexsem/rerank.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Small shared helpers

/// Last meaningful path component, ignoring trailing separators and ".".
std::string leaf_name(const fs::path& p) {
  fs::path norm = p.lexically_normal();
  std::string leaf = norm.filename().string();
  if (leaf.empty() || leaf == ".") leaf = norm.parent_path().filename().string();
  return leaf;
}

/// A run-dir argument may name the directory or the artifact file itself.
fs::path resolve_run_file(const fs::path& p, const char* name) {
  return fs::is_directory(p) ? p / name : p;
}

Task parse_task(const std::string& s) {
  auto t = task_from_string(s);
  if (!t) fail(Errc::Usage, "unknown task: " + s);
  return *t;
}

Split parse_split(const std::string& s) {
  auto sp = split_from_string(s);
  if (!sp) fail(Errc::Usage, "unknown split: " + s);
  return *sp;
}

std::set<Split> parse_splits(const std::vector<std::string>& names) {
  std::set<Split> out;
  for (const auto& n : names) out.insert(parse_split(n));
  return out;
}

DenseField parse_field(const std::string& s) {
  if (s == "full") return DenseField::Full;
  if (s == "lsr_summary") return DenseField::LsrSummary;
  if (s == "pcr_summary") return DenseField::PcrSummary;
  fail(Errc::Usage, "unknown field: " + s);
}

/// Corpus queries in the selected splits, in DocId order.
std::vector<const Document*> queries_in(const CorpusBundle& bundle, const std::set<Split>& splits) {
  std::vector<const Document*> out;
  for (const auto& [id, doc] : bundle.queries)
    if (doc.split && splits.count(*doc.split)) out.push_back(&doc);
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Index-sharded loop; the first worker exception is rethrown after join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  int w = std::max(1, workers);
  w = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(w), n));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first) first = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Run directory bookkeeping

struct Common {
  fs::path out;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct RunContext {
  fs::path dir;
  RunManifest manifest;

  RunContext(const Common& common, const std::string& subcommand) : dir(common.out) {
    fs::create_directories(dir);
    manifest.run_id = leaf_name(dir);
    manifest.timestamp = iso8601_now();
    manifest.subcommand = subcommand;
    manifest.seed = common.seed;
    manifest.params["workers"] = std::to_string(common.workers);
  }

  void param(const std::string& key, const std::string& value) { manifest.params[key] = value; }

  /// Writes one run-relative file atomically and records its digest.
  void write(const std::string& rel, std::string_view content) {
    fs::path p = dir / rel;
    fs::create_directories(p.parent_path());
    atomic_write_file(p, content);
    manifest.outputs[rel] = content_hash(content);
  }

  /// Records the digest of a file a library save() already wrote.
  void note_output(const std::string& rel) {
    manifest.outputs[rel] = content_hash(read_file(dir / rel));
  }

  void finish() {
    std::string acc = manifest.subcommand + "\n" + std::to_string(manifest.seed) + "\n";
    // Workers only schedule the work; the hash covers the run's identity.
    for (const auto& [k, v] : manifest.params)
      if (k != "workers") acc += k + "=" + v + "\n";
    manifest.config_hash = content_hash(acc);
    manifest.save(dir / "manifest.json");
  }
};

/// Runs the subcommand body; on module errors the manifest still lands on
/// disk, carrying the error string.
template <typename Fn>
void guarded(RunContext& ctx, Fn&& fn) {
  try {
    fn();
    ctx.finish();
  } catch (const Error& e) {
    ctx.manifest.error = std::string(errc_name(e.code())) + ": " + e.what();
    ctx.finish();
    throw;
  }
}

// ---------------------------------------------------------------------------
// Persisted artifacts shared across subcommands

std::string ranking_to_text(const RankedList& ranked) {
  std::string out;
  for (const auto& sd : ranked) {
    out += sd.id.str();
    out += ' ';
    out += format_score(sd.score);
    out += '\n';
  }
  return out;
}

RankedList parse_ranking_text(const std::string& body, const fs::path& src) {
  RankedList out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < body.size()) {
    std::size_t eol = body.find('\n', pos);
    if (eol == std::string::npos) eol = body.size();
    std::string line = body.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (line.empty()) continue;
    std::size_t sp = line.rfind(' ');
    if (sp == std::string::npos || sp == 0)
      fail(Errc::MalformedRecord,
           src.string() + ":" + std::to_string(lineno) + ": want 'docid score'");
    std::string score_text = line.substr(sp + 1);
    char* end = nullptr;
    double score = std::strtod(score_text.c_str(), &end);
    if (score_text.empty() || end != score_text.c_str() + score_text.size())
      fail(Errc::MalformedRecord,
           src.string() + ":" + std::to_string(lineno) + ": bad score '" + score_text + "'");
    out.push_back({DocId(line.substr(0, sp)), score});
  }
  return out;
}

void save_rankings(RunContext& ctx, const std::map<DocId, RankedList>& rankings) {
  for (const auto& [qid, list] : rankings)
    ctx.write("rankings/" + path_safe(qid.str()) + ".txt", ranking_to_text(list));
}

ScoreMap as_score_map(const std::map<DocId, RankedList>& runs, const DocId& qid,
                      const char* which) {
  auto it = runs.find(qid);
  if (it == runs.end())
    fail(Errc::KeyMismatch, std::string(which) + " has no ranking for query " + qid.str());
  ScoreMap m;
  for (const auto& sd : it->second) m[sd.id] = sd.score;
  return m;
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

/// positives.json: the per-query candidate sets a rerank stage marked
/// relevant, consumed by the other task's stage 2.
std::map<DocId, std::set<DocId>> load_positives(const fs::path& run_dir) {
  fs::path p = run_dir / "positives.json";
  json j = parse_json_file(p);
  std::map<DocId, std::set<DocId>> out;
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "rerank-positives")
      fail(Errc::MalformedRecord, p.string() + ": not a version-1 rerank-positives file");
    for (const auto& [qid, ids] : j.at("positives").items()) {
      std::set<DocId>& s = out[DocId(qid)];
      for (const auto& id : ids) s.insert(DocId(id.get<std::string>()));
    }
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, p.string() + ": " + e.what());
  }
  return out;
}

/// filter.json sits beside a filtered index and carries everything needed
/// to filter query text the same way at retrieval time.
struct FilterState {
  bool filter_queries = true;
  std::set<std::string> candidate_vocab;
  std::map<DocId, std::vector<EventTriplet>> query_events;
};

std::optional<FilterState> load_filter_state(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  json j = parse_json_file(path);
  FilterState st;
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "event-filter")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 event-filter file");
    st.filter_queries = j.at("filter_queries").get<bool>();
    for (const auto& t : j.at("candidate_vocab")) st.candidate_vocab.insert(t.get<std::string>());
    for (const auto& [qid, events] : j.at("query_events").items()) {
      auto& list = st.query_events[DocId(qid)];
      for (const auto& ev : events) {
        if (!ev.is_array() || ev.size() != 3)
          fail(Errc::MalformedRecord, path.string() + ": event must be [subject, action, object]");
        list.push_back({ev[0].get<std::string>(), ev[1].get<std::string>(),
                        ev[2].get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  return st;
}

/// Optional sidecar replacing corpus events: JSONL of {"id", "events"}.
std::map<DocId, std::vector<EventTriplet>> load_events_file(const fs::path& path) {
  std::string body = read_file(path);
  std::map<DocId, std::vector<EventTriplet>> out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < body.size()) {
    std::size_t eol = body.find('\n', pos);
    if (eol == std::string::npos) eol = body.size();
    std::string line = trim(body.substr(pos, eol - pos));
    pos = eol + 1;
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      auto& list = out[DocId(j.at("id").get<std::string>())];
      for (const auto& ev : j.at("events")) {
        if (!ev.is_array() || ev.size() != 3)
          fail(Errc::MalformedRecord, path.string() + ":" + std::to_string(lineno) +
                                          ": event must be [subject, action, object]");
        list.push_back(
            {ev[0].get<std::string>(), ev[1].get<std::string>(), ev[2].get<std::string>()});
      }
    } catch (const json::exception& e) {
      fail(Errc::MalformedRecord, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation plumbing shared by eval, compare and report

/// Split queries with non-empty gold; every one must have a ranking.
void collect_eval_inputs(const CorpusBundle& bundle, Task task, Split split,
                         const std::map<DocId, RankedList>& rankings,
                         std::map<DocId, std::vector<DocId>>* ids,
                         std::map<DocId, std::set<DocId>>* gold, int* skipped_no_gold) {
  for (const auto& [qid, q] : bundle.queries) {
    if (!q.split || *q.split != split) continue;
    if (q.gold(task).empty()) {
      ++*skipped_no_gold;
      continue;
    }
    auto it = rankings.find(qid);
    if (it == rankings.end()) fail(Errc::KeyMismatch, "no ranking for query " + qid.str());
    (*ids)[qid] = ranked_ids(it->second);
    (*gold)[qid] = q.gold(task);
  }
  if (ids->empty())
    fail(Errc::EmptyCorpus,
         std::string("no queries with gold to evaluate in split ") + to_string(split));
}

struct KChoice {
  std::optional<int> k;  // empty: let the report pick its own best k
  std::string source;    // "flag" | "validation" | "self"
};

/// k comes from the flag when given; otherwise from the run's validation
/// rankings when they cover every val query with gold; otherwise the
/// evaluated set picks its own best k.
KChoice resolve_k(const CorpusBundle& bundle, Task task, Split split,
                  const std::map<DocId, RankedList>& rankings, std::optional<int> k_flag) {
  if (k_flag) return {k_flag, "flag"};
  if (split != Split::Val) {
    std::map<DocId, std::vector<DocId>> val_ids;
    std::map<DocId, std::set<DocId>> val_gold;
    bool complete = true;
    for (const auto& [qid, q] : bundle.queries) {
      if (!q.split || *q.split != Split::Val || q.gold(task).empty()) continue;
      auto it = rankings.find(qid);
      if (it == rankings.end()) {
        complete = false;
        break;
      }
      val_ids[qid] = ranked_ids(it->second);
      val_gold[qid] = q.gold(task);
    }
    if (complete && !val_ids.empty()) {
      EvalReport val_report = build_report(val_ids, val_gold, task);
      return {val_report.chosen_k, "validation"};
    }
  }
  return {std::nullopt, "self"};
}

json report_to_json(const EvalReport& report, Split split, const std::string& k_source,
                    int skipped_no_gold) {
  json j;
  j["version"] = 1;
  j["kind"] = "eval-report";
  j["task"] = to_string(report.task);
  j["split"] = to_string(split);
  j["chosen_k"] = report.chosen_k;
  j["k_source"] = k_source;
  j["macro_f1"] = report.macro_f1;
  j["map"] = report.map;
  j["mrr"] = report.mrr;
  j["skipped_no_gold"] = skipped_no_gold;
  json per = json::object();
  for (const auto& [qid, m] : report.per_query) {
    json q;
    q["f1_at"] = m.f1_at;
    q["ap"] = m.ap;
    q["rr"] = m.rr;
    per[qid.str()] = std::move(q);
  }
  j["per_query"] = std::move(per);
  return j;
}

std::string report_to_text(const EvalReport& report, Split split, const std::string& k_source,
                           int skipped_no_gold) {
  std::string out = std::string("task ") + to_string(report.task) + " split " + to_string(split) +
                    " queries " + std::to_string(report.per_query.size()) + " skipped " +
                    std::to_string(skipped_no_gold) + "\n";
  out += "k macro-F1\n";
  for (int k = 1; k <= kMaxEvalK; ++k)
    out += std::to_string(k) + " " + format_score(report.macro_f1[k - 1]) + "\n";
  out += "chosen k " + std::to_string(report.chosen_k) + " (" + k_source + ")\n";
  out += "MAP " + format_score(report.map) + "\n";
  out += "MRR " + format_score(report.mrr) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateOpts {
  Common common;
  fs::path corpus;
  fs::path patterns;
};

std::vector<std::string> load_patterns_file(const fs::path& path) {
  std::vector<std::string> out;
  for (const std::string& raw : split_on(read_file(path), '\n')) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

void cmd_validate(const ValidateOpts& opts) {
  RunContext ctx(opts.common, "validate");
  guarded(ctx, [&] {
    ctx.param("corpus", leaf_name(opts.corpus));
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);

    std::vector<std::string> patterns = opts.patterns.empty()
                                            ? default_masking_patterns()
                                            : load_patterns_file(opts.patterns);
    ctx.param("patterns", opts.patterns.empty() ? "builtin" : leaf_name(opts.patterns));

    // Only queries are masked in the dataset; candidate pools keep raw
    // citations by design, so masking checks cover queries alone.
    std::string lines;
    int total = 0;
    for (const auto& [qid, q] : bundle.queries) {
      for (const MaskViolation& v : validate_masking(q, patterns)) {
        ++total;
        lines += qid.str() + " " + std::to_string(v.begin) + ".." + std::to_string(v.end) +
                 " pattern=" + v.pattern + " match=" + v.matched + "\n";
      }
    }
    std::string header = "queries " + std::to_string(bundle.queries.size()) + " statutes " +
                         std::to_string(bundle.statutes.size()) + " precedents " +
                         std::to_string(bundle.precedents.size()) + "\nmasking violations " +
                         std::to_string(total) + "\n";
    ctx.write("reports/validation.txt", header + lines);
    std::cout << header;
  });
}

// ---------------------------------------------------------------------------
// index

struct IndexOpts {
  Common common;
  fs::path corpus;
  std::string task = "lsr";
  std::vector<int> ngram_sizes = {2, 3, 4, 5};
  double k1 = 1.6;
  double b = 0.7;
  int min_df = 1;
  double max_df_ratio = 0.65;
  fs::path events;
  bool filter_events = false;
  bool filter_queries = true;
  bool filter_candidates = true;
};

void cmd_index(const IndexOpts& opts) {
  RunContext ctx(opts.common, "index");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);

    std::map<DocId, Document> pool = bundle.pool(task);
    std::map<DocId, Document> queries = bundle.queries;
    bool filtering = opts.filter_events || !opts.events.empty();
    if (!opts.events.empty()) {
      // The sidecar stands in for one extraction method's output; listed
      // docs get its triplets, everything else none.
      auto overrides = load_events_file(opts.events);
      for (auto& [id, d] : pool) d.events = overrides.count(id) ? overrides.at(id) : std::vector<EventTriplet>{};
      for (auto& [id, d] : queries) d.events = overrides.count(id) ? overrides.at(id) : std::vector<EventTriplet>{};
    }

    std::map<DocId, std::string> texts;
    if (filtering) {
      std::set<std::string> query_vocab = event_vocab(queries);
      for (const auto& [id, d] : pool)
        texts[id] = opts.filter_candidates ? filter_by_events(d, query_vocab) : d.text;

      json fj;
      fj["version"] = 1;
      fj["kind"] = "event-filter";
      fj["filter_queries"] = opts.filter_queries;
      fj["candidate_vocab"] = event_vocab(pool);
      json qe = json::object();
      for (const auto& [id, d] : queries) {
        json events = json::array();
        for (const EventTriplet& ev : d.events)
          events.push_back(json::array({ev.subject, ev.action, ev.object}));
        qe[id.str()] = std::move(events);
      }
      fj["query_events"] = std::move(qe);
      ctx.write("filter.json", fj.dump());
    } else {
      for (const auto& [id, d] : pool) texts[id] = d.text;
    }

    Bm25Config config;
    config.k1 = opts.k1;
    config.b = opts.b;
    config.min_df = opts.min_df;
    config.max_df_ratio = opts.max_df_ratio;
    config.ngram_sizes = opts.ngram_sizes;
    Bm25Index index = Bm25Index::build(texts, config);
    index.save(ctx.dir / "index.json");
    ctx.note_output("index.json");

    ctx.param("task", opts.task);
    std::string ns;
    for (int n : opts.ngram_sizes) ns += (ns.empty() ? "" : ",") + std::to_string(n);
    ctx.param("n", ns);
    ctx.param("k1", format_score(opts.k1));
    ctx.param("b", format_score(opts.b));
    ctx.param("min_df", std::to_string(opts.min_df));
    ctx.param("max_df_ratio", format_score(opts.max_df_ratio));
    ctx.param("events", opts.events.empty() ? "" : leaf_name(opts.events));
    ctx.param("filter_events", filtering ? "true" : "false");
    if (filtering) {
      ctx.param("filter_queries", opts.filter_queries ? "true" : "false");
      ctx.param("filter_candidates", opts.filter_candidates ? "true" : "false");
    }
    std::cout << "indexed " << index.doc_count() << " docs, " << index.term_count()
              << " terms, avg_len " << format_score(index.avg_len()) << "\n";
  });
}

// ---------------------------------------------------------------------------
// retrieve

struct RetrieveOpts {
  Common common;
  fs::path corpus;
  std::string task = "lsr";
  std::string method = "bm25";
  std::vector<std::string> splits = {"test"};
  fs::path index;
  fs::path weights;
  fs::path embeds;
  fs::path sem_run;
  fs::path lex_run;
  fs::path gate;
  std::string agg = "max-all";
  std::string scorer = "bm25";
  std::string field = "full";
  std::optional<double> alpha;
};

std::map<DocId, RankedList> run_retrieval(const std::vector<const Document*>& queries,
                                          const std::function<ScoreMap(const Document&)>& score,
                                          int workers) {
  std::vector<RankedList> rows(queries.size());
  parallel_for(queries.size(), workers,
               [&](std::size_t i) { rows[i] = to_ranked(score(*queries[i])); });
  std::map<DocId, RankedList> out;
  for (std::size_t i = 0; i < queries.size(); ++i) out[queries[i]->id] = std::move(rows[i]);
  return out;
}

void require_path(const fs::path& p, const char* flag, const char* method) {
  if (p.empty())
    fail(Errc::Usage, std::string(flag) + " is required for --method " + method);
}

void cmd_retrieve(const RetrieveOpts& opts) {
  RunContext ctx(opts.common, "retrieve");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);
    std::vector<const Document*> queries = queries_in(bundle, parse_splits(opts.splits));
    if (queries.empty()) fail(Errc::EmptyCorpus, "no queries in the selected splits");

    ctx.param("task", opts.task);
    ctx.param("method", opts.method);
    std::string splits;
    for (const auto& s : opts.splits) splits += (splits.empty() ? "" : ",") + s;
    ctx.param("splits", splits);

    std::map<DocId, RankedList> results;
    if (opts.method == "bm25") {
      require_path(opts.index, "--index", "bm25");
      fs::path index_file = resolve_run_file(opts.index, "index.json");
      Bm25Index index = Bm25Index::load(index_file);
      std::optional<FilterState> filter =
          load_filter_state(index_file.parent_path() / "filter.json");
      ctx.param("index", leaf_name(opts.index));
      ctx.param("n", [&] {
        std::string ns;
        for (int n : index.config().ngram_sizes) ns += (ns.empty() ? "" : ",") + std::to_string(n);
        return ns;
      }());
      ctx.param("k1", format_score(index.config().k1));
      ctx.param("b", format_score(index.config().b));
      auto score = [&](const Document& q) {
        std::string text = q.text;
        if (filter && filter->filter_queries) {
          Document tmp = q;
          auto it = filter->query_events.find(q.id);
          if (it != filter->query_events.end()) tmp.events = it->second;
          text = filter_by_events(tmp, filter->candidate_vocab);
        }
        ScoreMap m;
        for (const auto& sd : index.rank(text)) m[sd.id] = sd.score;
        return m;
      };
      results = run_retrieval(queries, score, opts.common.workers);
    } else if (opts.method == "para") {
      const auto& pool = bundle.pool(task);
      ParaAgg agg;
      if (opts.agg == "max-all") {
        agg = ParaAgg::MaxAll;
      } else if (opts.agg == "max-sum") {
        agg = ParaAgg::MaxSum;
      } else {
        fail(Errc::Usage, "unknown --agg: " + opts.agg);
      }
      EmbeddingTable embeds;
      PairScorer scorer;
      if (opts.scorer == "bm25") {
        std::vector<std::string> corpus_paragraphs;
        for (const auto& [id, d] : pool)
          for (const Paragraph& p : d.paragraphs) corpus_paragraphs.push_back(p.text);
        scorer = make_bm25_pair_scorer(corpus_paragraphs);
      } else if (opts.scorer == "dense") {
        require_path(opts.embeds, "--embeds", "para --scorer dense");
        embeds = EmbeddingTable::load(opts.embeds);
        scorer = make_dense_pair_scorer(embeds);
      } else {
        fail(Errc::Usage, "unknown --scorer: " + opts.scorer);
      }
      ctx.param("agg", opts.agg);
      ctx.param("scorer", opts.scorer);
      for (const Document* q : queries)
        results[q->id] = rank_para(*q, pool, scorer, agg, opts.common.workers);
    } else if (opts.method == "event-gnn" || opts.method == "para-gnn") {
      require_path(opts.weights, "--weights", opts.method.c_str());
      require_path(opts.embeds, "--embeds", opts.method.c_str());
      GatWeights weights = GatWeights::load(opts.weights);
      EmbeddingTable embeds = EmbeddingTable::load(opts.embeds);
      ctx.param("weights", leaf_name(opts.weights));
      ctx.param("embeds", leaf_name(opts.embeds));
      const bool event = opts.method == "event-gnn";
      // Inference graphs exclude citation links; gold must not leak in.
      auto global_vec = [&](const Document& d) {
        DocGraph g = event ? build_event_graph(d, {}) : build_para_graph(d);
        return gat_forward(g, weights, embeds).at(g.global);
      };
      std::vector<const Document*> pool_docs;
      for (const auto& [id, d] : bundle.pool(task)) pool_docs.push_back(&d);
      std::vector<std::vector<double>> pool_vecs(pool_docs.size());
      parallel_for(pool_docs.size(), opts.common.workers,
                   [&](std::size_t i) { pool_vecs[i] = global_vec(*pool_docs[i]); });
      auto score = [&](const Document& q) {
        std::vector<double> qv = global_vec(q);
        ScoreMap m;
        for (std::size_t i = 0; i < pool_docs.size(); ++i)
          m[pool_docs[i]->id] = dot(qv, pool_vecs[i]);
        return m;
      };
      results = run_retrieval(queries, score, opts.common.workers);
    } else if (opts.method == "dense") {
      require_path(opts.embeds, "--embeds", "dense");
      EmbeddingTable embeds = EmbeddingTable::load(opts.embeds);
      DenseField field = parse_field(opts.field);
      ctx.param("embeds", leaf_name(opts.embeds));
      ctx.param("field", opts.field);
      const auto& pool = bundle.pool(task);
      auto score = [&](const Document& q) {
        ScoreMap m;
        for (const auto& [id, d] : pool) m[id] = dense_score(q, d, embeds, field);
        return m;
      };
      results = run_retrieval(queries, score, opts.common.workers);
    } else if (opts.method == "ensemble") {
      require_path(opts.sem_run, "--sem-run", "ensemble");
      require_path(opts.lex_run, "--lex-run", "ensemble");
      auto sem = load_run_rankings(opts.sem_run);
      auto lex = load_run_rankings(opts.lex_run);
      ctx.param("sem_run", leaf_name(opts.sem_run));
      ctx.param("lex_run", leaf_name(opts.lex_run));
      if (!opts.alpha && opts.gate.empty())
        fail(Errc::Usage, "--method ensemble needs --alpha or --gate");
      GateState gate_state;
      EmbeddingTable embeds;
      std::string key_suffix;
      if (!opts.gate.empty()) {
        gate_state = GateState::load(resolve_run_file(opts.gate, "gate.json"));
        if (gate_state.task != task)
          fail(Errc::TaskMismatch, std::string("gate was trained for ") +
                                       to_string(gate_state.task) + ", retrieval task is " +
                                       to_string(task));
        require_path(opts.embeds, "--embeds", "ensemble --gate");
        embeds = EmbeddingTable::load(opts.embeds);
        key_suffix = std::string(":") + to_string(parse_field(opts.field));
        ctx.param("alpha_mode", "gate");
        ctx.param("gate", leaf_name(opts.gate));
        ctx.param("embeds", leaf_name(opts.embeds));
        ctx.param("field", opts.field);
      } else {
        ctx.param("alpha_mode", "fixed");
        ctx.param("alpha", format_score(*opts.alpha));
      }
      json alpha_report = json::object();
      for (const Document* q : queries) {
        ScoreMap s = as_score_map(sem, q->id, "semantic run");
        ScoreMap l = as_score_map(lex, q->id, "lexical run");
        double alpha = opts.alpha ? *opts.alpha
                                  : gate_alpha(gate_state.gate, embeds.at(q->id.str() + key_suffix));
        alpha_report[q->id.str()] = alpha;
        results[q->id] = fuse(s, l, alpha);
      }
      if (!opts.gate.empty()) {
        json aj;
        aj["version"] = 1;
        aj["kind"] = "alpha-report";
        aj["alpha"] = std::move(alpha_report);
        ctx.write("reports/alpha.json", aj.dump(2) + "\n");
      }
    } else {
      fail(Errc::Usage, "unknown --method: " + opts.method);
    }

    save_rankings(ctx, results);
    std::cout << "wrote rankings for " << results.size() << " queries\n";
  });
}

// ---------------------------------------------------------------------------
// grid-search

struct GridOpts {
  Common common;
  fs::path corpus;
  std::string task = "lsr";
  fs::path sem_run;
  fs::path lex_run;
};

void cmd_grid_search(const GridOpts& opts) {
  RunContext ctx(opts.common, "grid-search");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);
    auto sem = load_run_rankings(opts.sem_run);
    auto lex = load_run_rankings(opts.lex_run);

    std::vector<const Document*> val;
    for (const Document* q : queries_in(bundle, {Split::Val}))
      if (!q->gold(task).empty()) val.push_back(q);

    QueryScorer sem_scorer = [&](const Document& q) {
      return as_score_map(sem, q.id, "semantic run");
    };
    QueryScorer lex_scorer = [&](const Document& q) {
      return as_score_map(lex, q.id, "lexical run");
    };
    ValEvalFn eval_fn = make_val_macro_f1(val, task);
    double best = grid_search_alpha(val, sem_scorer, lex_scorer, eval_fn);

    json objective = json::object();
    for (int step = 0; step <= 10; ++step) {
      double alpha = static_cast<double>(step) / 10.0;
      std::map<DocId, RankedList> rankings;
      for (const Document* q : val)
        rankings[q->id] = fuse(sem_scorer(*q), lex_scorer(*q), alpha);
      objective[format_score(alpha)] = eval_fn(rankings);
    }
    json gj;
    gj["version"] = 1;
    gj["kind"] = "grid-report";
    gj["task"] = opts.task;
    gj["alpha"] = best;
    gj["objective"] = std::move(objective);
    ctx.write("reports/grid.json", gj.dump(2) + "\n");

    ctx.param("task", opts.task);
    ctx.param("sem_run", leaf_name(opts.sem_run));
    ctx.param("lex_run", leaf_name(opts.lex_run));
    ctx.param("alpha", format_score(best));
    std::cout << "alpha " << format_score(best) << "\n";
  });
}

// ---------------------------------------------------------------------------
// train-alpha

struct TrainAlphaOpts {
  Common common;
  fs::path corpus;
  std::string task = "lsr";
  fs::path sem_run;
  fs::path lex_run;
  fs::path embeds;
  fs::path init_from;
  std::string field = "full";
  double lr = 0.1;
  int epochs = 20;
  int negatives = 8;
};

void cmd_train_alpha(const TrainAlphaOpts& opts) {
  RunContext ctx(opts.common, "train-alpha");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);
    auto sem = load_run_rankings(opts.sem_run);
    auto lex = load_run_rankings(opts.lex_run);
    EmbeddingTable embeds = EmbeddingTable::load(opts.embeds);
    std::string key_suffix = std::string(":") + to_string(parse_field(opts.field));

    std::vector<const Document*> train = queries_in(bundle, {Split::Train});
    QueryScorer sem_scorer = [&](const Document& q) {
      return as_score_map(sem, q.id, "semantic run");
    };
    QueryScorer lex_scorer = [&](const Document& q) {
      return as_score_map(lex, q.id, "lexical run");
    };
    QueryEmbedFn embed = [&](const Document& q) { return embeds.at(q.id.str() + key_suffix); };

    AlphaGate init{std::vector<double>(static_cast<std::size_t>(embeds.dim()), 0.0), 0.0};
    std::string init_from;
    if (!opts.init_from.empty()) {
      GateState source = GateState::load(resolve_run_file(opts.init_from, "gate.json"));
      GateState transferred = transfer_init(source, task);
      init = transferred.gate;
      init_from = transferred.init_from;
    }
    GateTrainConfig config;
    config.lr = opts.lr;
    config.epochs = opts.epochs;
    config.negatives_per_query = opts.negatives;
    config.seed = opts.common.seed;
    AlphaGate trained = train_gate(train, task, sem_scorer, lex_scorer, embed, init, config);

    GateState state{trained, task, ctx.manifest.run_id, init_from};
    state.save(ctx.dir / "gate.json");
    ctx.note_output("gate.json");

    json alpha_report = json::object();
    double sum = 0.0;
    for (const Document* q : train) {
      double alpha = gate_alpha(trained, embed(*q));
      alpha_report[q->id.str()] = alpha;
      sum += alpha;
    }
    json aj;
    aj["version"] = 1;
    aj["kind"] = "alpha-report";
    aj["alpha"] = std::move(alpha_report);
    ctx.write("reports/alpha.json", aj.dump(2) + "\n");

    ctx.param("task", opts.task);
    ctx.param("sem_run", leaf_name(opts.sem_run));
    ctx.param("lex_run", leaf_name(opts.lex_run));
    ctx.param("embeds", leaf_name(opts.embeds));
    ctx.param("field", opts.field);
    ctx.param("lr", format_score(opts.lr));
    ctx.param("epochs", std::to_string(opts.epochs));
    ctx.param("negatives", std::to_string(opts.negatives));
    ctx.param("init_from", init_from);
    double mean = train.empty() ? 0.0 : sum / static_cast<double>(train.size());
    std::cout << "trained gate over " << train.size() << " queries, mean train alpha "
              << format_score(mean) << "\n";
  });
}

// ---------------------------------------------------------------------------
// rerank

struct RerankOpts {
  Common common;
  fs::path corpus;
  std::string task = "lsr";
  int stage = 1;
  std::string backend = "stub";
  fs::path run;
  fs::path cond_run;
  fs::path prompts;
  std::string split = "test";
  std::optional<int> k;
  int retries = 2;
};

void cmd_rerank(const RerankOpts& opts) {
  RunContext ctx(opts.common, "rerank");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    if (opts.stage == 2 && opts.cond_run.empty())
      fail(Errc::Usage, "--stage 2 needs --cond-run (the other task's stage-1 run)");
    CorpusBundle bundle = load_corpus(opts.corpus);
    ctx.manifest.corpus_hash = corpus_digest(opts.corpus);
    auto base = load_run_rankings(opts.run);
    std::vector<const Document*> queries = queries_in(bundle, {parse_split(opts.split)});
    if (queries.empty()) fail(Errc::EmptyCorpus, "no queries in the selected split");

    std::map<DocId, std::set<DocId>> cond;
    if (opts.stage == 2) cond = load_positives(opts.cond_run);

    PromptSet prompts = opts.prompts.empty() ? PromptSet::defaults() : PromptSet::load(opts.prompts);
    RerankConfig config;
    if (opts.k) (task == Task::Lsr ? config.k_lsr : config.k_pcr) = *opts.k;
    config.max_retries = opts.retries;
    config.max_in_flight = opts.common.workers;

    std::unique_ptr<LlmClient> backend;
    if (opts.backend == "stub") {
      backend = std::make_unique<StubLlmClient>();
    } else if (opts.backend == "http") {
      backend = std::make_unique<HttpLlmClient>(HttpLlmClient::from_env());
    } else {
      fail(Errc::Usage, "unknown --backend: " + opts.backend);
    }
    CachingLlmClient cache(*backend);
    Reranker reranker(cache, prompts, config);

    const int k = task == Task::Lsr ? config.k_lsr : config.k_pcr;
    std::map<DocId, RankedList> out;
    json positives_json = json::object();
    std::vector<std::string> warnings;
    for (const Document* q : queries) {
      auto base_it = base.find(q->id);
      if (base_it == base.end()) fail(Errc::KeyMismatch, "no ranking for query " + q->id.str());
      const RankedList& base_list = base_it->second;
      std::vector<DocId> top = take_top_k(base_list, k);

      std::vector<DocId> final;
      std::vector<DocId> positives;
      if (task == Task::Lsr && opts.stage == 2) {
        std::set<DocId> p1_plus = cond.count(q->id) ? cond.at(q->id) : std::set<DocId>{};
        std::set<DocId> expansion = expand_statutes(p1_plus, bundle);
        RerankOutcome outcome =
            reranker.stage2_lsr(*q, top, expansion, ranked_ids(base_list), bundle);
        final = outcome.final;
        positives = outcome.positives;
      } else {
        std::set<DocId> marked;
        if (task == Task::Lsr) {
          std::vector<std::pair<DocId, std::string>> named;
          for (const DocId& id : top) {
            auto it = bundle.statutes.find(id);
            if (it == bundle.statutes.end())
              fail(Errc::UnknownCandidate, "not in statute pool: " + id.str());
            named.emplace_back(id, statute_name(it->second));
          }
          marked = reranker.stage1_lsr(*q, named);
        } else if (opts.stage == 1) {
          marked = reranker.stage1_pcr(*q, top, bundle);
        } else {
          std::set<DocId> s1_plus = cond.count(q->id) ? cond.at(q->id) : std::set<DocId>{};
          marked = reranker.stage2_pcr_batch(*q, top, s1_plus, bundle);
        }
        RerankOutcome outcome = partition_rerank(top, marked);
        final = outcome.final;
        positives = outcome.positives;
        for (std::size_t i = static_cast<std::size_t>(k); i < base_list.size(); ++i)
          final.push_back(base_list[i].id);
      }

      RankedList ranked;
      ranked.reserve(final.size());
      for (std::size_t i = 0; i < final.size(); ++i)
        ranked.push_back({final[i], 1.0 / static_cast<double>(i + 1)});
      out[q->id] = std::move(ranked);

      json pos = json::array();
      for (const DocId& id : positives) pos.push_back(id.str());
      positives_json[q->id.str()] = std::move(pos);

      for (const auto& [prompt, response] : reranker.take_exchanges()) {
        std::string h = content_hash(prompt);
        ctx.write("prompts/" + h + ".prompt.txt", prompt);
        ctx.write("prompts/" + h + ".response.txt", response);
      }
      for (std::string& w : reranker.take_warnings()) warnings.push_back(std::move(w));
    }

    save_rankings(ctx, out);
    json pj;
    pj["version"] = 1;
    pj["kind"] = "rerank-positives";
    pj["task"] = opts.task;
    pj["stage"] = opts.stage;
    pj["positives"] = std::move(positives_json);
    ctx.write("positives.json", pj.dump(2) + "\n");
    std::string warn_text;
    for (const std::string& w : warnings) warn_text += w + "\n";
    ctx.write("reports/warnings.txt", warn_text);

    ctx.param("task", opts.task);
    ctx.param("stage", std::to_string(opts.stage));
    ctx.param("backend", opts.backend);
    ctx.param("k", std::to_string(k));
    ctx.param("retries", std::to_string(opts.retries));
    ctx.param("run", leaf_name(opts.run));
    ctx.param("cond_run", opts.cond_run.empty() ? "" : leaf_name(opts.cond_run));
    ctx.param("prompts", opts.prompts.empty() ? "builtin" : leaf_name(opts.prompts));
    ctx.param("split", opts.split);
    std::cout << "reranked " << out.size() << " queries, " << cache.backend_calls()
              << " backend calls, " << warnings.size() << " warnings\n";
  });
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  Common common;
  fs::path pred;
  fs::path gold;
  std::string task = "lsr";
  std::string split = "test";
  std::optional<int> k;
};

void cmd_eval(const EvalOpts& opts) {
  RunContext ctx(opts.common, "eval");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    Split split = parse_split(opts.split);
    CorpusBundle bundle = load_corpus(opts.gold);
    ctx.manifest.corpus_hash = corpus_digest(opts.gold);
    auto rankings = load_run_rankings(opts.pred);

    std::map<DocId, std::vector<DocId>> ids;
    std::map<DocId, std::set<DocId>> gold;
    int skipped = 0;
    collect_eval_inputs(bundle, task, split, rankings, &ids, &gold, &skipped);
    KChoice choice = resolve_k(bundle, task, split, rankings, opts.k);
    EvalReport report = build_report(ids, gold, task, choice.k);

    ctx.write("reports/eval.json",
              report_to_json(report, split, choice.source, skipped).dump(2) + "\n");
    std::string text = report_to_text(report, split, choice.source, skipped);
    ctx.write("reports/eval.txt", text);

    ctx.param("task", opts.task);
    ctx.param("split", opts.split);
    ctx.param("pred", leaf_name(opts.pred));
    ctx.param("k", opts.k ? std::to_string(*opts.k) : "auto");
    std::cout << "macro-F1@" << report.chosen_k << " "
              << format_score(report.macro_f1[report.chosen_k - 1]) << " (k " << report.chosen_k
              << ", " << choice.source << ") MAP " << format_score(report.map) << " MRR "
              << format_score(report.mrr) << " over " << report.per_query.size() << " queries\n";
  });
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  Common common;
  fs::path run_a;
  fs::path run_b;
  fs::path gold;
  std::string task = "lsr";
  std::string split = "test";
  std::optional<int> k_a;
  std::optional<int> k_b;
};

void cmd_compare(const CompareOpts& opts) {
  RunContext ctx(opts.common, "compare");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    Split split = parse_split(opts.split);
    CorpusBundle bundle = load_corpus(opts.gold);
    ctx.manifest.corpus_hash = corpus_digest(opts.gold);

    auto side = [&](const fs::path& run, std::optional<int> k_flag) {
      auto rankings = load_run_rankings(run);
      std::map<DocId, std::vector<DocId>> ids;
      std::map<DocId, std::set<DocId>> gold;
      int skipped = 0;
      collect_eval_inputs(bundle, task, split, rankings, &ids, &gold, &skipped);
      KChoice choice = resolve_k(bundle, task, split, rankings, k_flag);
      return build_report(ids, gold, task, choice.k);
    };
    EvalReport report_a = side(opts.run_a, opts.k_a);
    EvalReport report_b = side(opts.run_b, opts.k_b);

    std::map<DocId, double> f1_a, f1_b;
    for (const auto& [qid, m] : report_a.per_query) f1_a[qid] = m.f1_at[report_a.chosen_k - 1];
    for (const auto& [qid, m] : report_b.per_query) f1_b[qid] = m.f1_at[report_b.chosen_k - 1];
    TTestResult tt = paired_t_test(f1_a, f1_b);

    json cj;
    cj["version"] = 1;
    cj["kind"] = "compare-report";
    cj["task"] = opts.task;
    cj["split"] = opts.split;
    cj["queries"] = f1_a.size();
    cj["chosen_k_a"] = report_a.chosen_k;
    cj["chosen_k_b"] = report_b.chosen_k;
    cj["macro_f1_a"] = report_a.macro_f1[report_a.chosen_k - 1];
    cj["macro_f1_b"] = report_b.macro_f1[report_b.chosen_k - 1];
    cj["t"] = tt.t;
    cj["dof"] = tt.dof;
    cj["p"] = tt.p;
    ctx.write("reports/compare.json", cj.dump(2) + "\n");

    ctx.param("task", opts.task);
    ctx.param("split", opts.split);
    ctx.param("a", leaf_name(opts.run_a));
    ctx.param("b", leaf_name(opts.run_b));
    std::cout << "t " << format_score(tt.t) << " dof " << tt.dof << " p " << format_score(tt.p)
              << "\n";
  });
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  Common common;
  fs::path pred;
  fs::path gold;
  std::string task = "lsr";
  std::string split = "test";
  std::string key = "frequency";
  std::vector<std::string> freq_splits = {"train"};
  std::optional<int> k;
  int groups = 4;
};

void cmd_report(const ReportOpts& opts) {
  RunContext ctx(opts.common, "report");
  guarded(ctx, [&] {
    Task task = parse_task(opts.task);
    Split split = parse_split(opts.split);
    CorpusBundle bundle = load_corpus(opts.gold);
    ctx.manifest.corpus_hash = corpus_digest(opts.gold);
    auto rankings = load_run_rankings(opts.pred);

    std::map<DocId, std::vector<DocId>> ids;
    std::map<DocId, std::set<DocId>> gold;
    int skipped = 0;
    collect_eval_inputs(bundle, task, split, rankings, &ids, &gold, &skipped);
    KChoice choice = resolve_k(bundle, task, split, rankings, opts.k);
    int k = choice.k ? *choice.k : build_report(ids, gold, task).chosen_k;

    std::map<DocId, int> key_values;
    if (opts.key == "frequency") {
      key_values = candidate_frequency(bundle, task, parse_splits(opts.freq_splits));
    } else if (opts.key == "length") {
      for (const auto& [id, d] : bundle.pool(task))
        key_values[id] = static_cast<int>(tokenize(d.text).size());
    } else {
      fail(Errc::Usage, "unknown --key: " + opts.key);
    }
    GroupReport group_report = frequency_group_report(ids, gold, key_values, k, opts.groups);

    std::set<DocId> never_cited;
    for (const auto& [id, count] :
         candidate_frequency(bundle, task, {Split::Train, Split::Val, Split::Test}))
      if (count == 0) never_cited.insert(id);
    int in_top5 = never_cited_top5(ids, never_cited);

    json gj;
    gj["version"] = 1;
    gj["kind"] = "group-report";
    gj["task"] = opts.task;
    gj["split"] = opts.split;
    gj["key"] = opts.key;
    gj["k"] = k;
    gj["k_source"] = choice.source;
    json groups = json::array();
    for (std::size_t g = 0; g < group_report.groups.size(); ++g) {
      json row;
      row["size"] = group_report.groups[g].size();
      row["macro_f1"] = group_report.macro_f1[g];
      row["queries"] = group_report.query_counts[g];
      groups.push_back(std::move(row));
    }
    gj["groups"] = std::move(groups);
    gj["never_cited"] = never_cited.size();
    gj["never_cited_top5"] = in_top5;
    gj["queries"] = ids.size();
    ctx.write("reports/groups.json", gj.dump(2) + "\n");

    ctx.param("task", opts.task);
    ctx.param("split", opts.split);
    ctx.param("pred", leaf_name(opts.pred));
    ctx.param("key", opts.key);
    ctx.param("k", std::to_string(k));
    ctx.param("groups", std::to_string(opts.groups));
    std::cout << opts.groups << " groups by " << opts.key << " at k " << k
              << "; never-cited in top-5: " << in_top5 << " of " << ids.size() << " queries\n";
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest and shared run-artifact IO

void RunManifest::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = 1;
  j["kind"] = "run-manifest";
  j["run_id"] = run_id;
  j["timestamp"] = timestamp;
  j["subcommand"] = subcommand;
  j["config_hash"] = config_hash;
  j["corpus_hash"] = corpus_hash;
  j["seed"] = seed;
  j["params"] = params;
  j["outputs"] = outputs;
  if (!error.empty()) j["error"] = error;
  atomic_write_file(path, j.dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  RunManifest m;
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "run-manifest")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 run-manifest");
    m.run_id = j.at("run_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = j.at("params").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    if (j.contains("error")) m.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  return m;
}

std::string corpus_digest(const std::filesystem::path& dir) {
  std::string acc;
  for (const char* name : {"queries.jsonl", "statutes.jsonl", "precedents.jsonl"}) {
    acc += name;
    acc += ':';
    acc += content_hash(read_file(dir / name));
    acc += '\n';
  }
  return content_hash(acc);
}

std::map<DocId, RankedList> load_run_rankings(const std::filesystem::path& run_dir) {
  fs::path dir = run_dir / "rankings";
  if (!fs::is_directory(dir)) fail(Errc::MissingFile, dir.string() + ": no rankings directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<DocId, RankedList> out;
  for (const fs::path& file : files) {
    DocId qid(path_unsafe(file.stem().string()));
    out[qid] = parse_ranking_text(read_file(file), file);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Argument wiring

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Statute and precedent retrieval pipeline"};
  app.name("lexsem");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  // Lets --config appear after the subcommand name; inherited by all of them.
  app.fallthrough();
  app.set_config("--config", "", "INI config file; a [subcommand] section holds that command's keys");

  const auto add_common = [](CLI::App* cmd, Common& common) {
    cmd->add_option("--out", common.out, "Run directory to create")->required();
    cmd->add_option("--seed", common.seed, "Seed recorded in the manifest and used by training");
    cmd->add_option("--workers", common.workers, "Worker threads for per-query work")
        ->check(CLI::PositiveNumber);
  };
  const auto task_values = CLI::IsMember({"lsr", "pcr"});
  const auto split_values = CLI::IsMember({"train", "val", "test"});
  const auto field_values = CLI::IsMember({"full", "lsr_summary", "pcr_summary"});

  auto vo = std::make_shared<ValidateOpts>();
  CLI::App* validate = app.add_subcommand("validate", "Check corpus structure and query masking");
  validate->add_option("--corpus", vo->corpus, "Corpus directory")->required();
  validate->add_option("--patterns", vo->patterns, "File with one masking regex per line");
  add_common(validate, vo->common);
  validate->callback([vo] { cmd_validate(*vo); });

  auto io = std::make_shared<IndexOpts>();
  CLI::App* index = app.add_subcommand("index", "Build a BM25 n-gram index over a candidate pool");
  index->add_option("--corpus", io->corpus, "Corpus directory")->required();
  index->add_option("--task", io->task, "Candidate pool to index")->check(task_values);
  index->add_option("--n", io->ngram_sizes, "N-gram sizes (repeatable)")
      ->check(CLI::PositiveNumber);
  index->add_option("--k1", io->k1, "BM25 k1");
  index->add_option("--b", io->b, "BM25 b");
  index->add_option("--min-df", io->min_df, "Minimum document frequency");
  index->add_option("--max-df-ratio", io->max_df_ratio, "Maximum document-frequency ratio");
  index->add_option("--events", io->events, "Events JSONL replacing corpus events");
  index->add_flag("--filter-events", io->filter_events, "Filter sentences by event matches");
  index->add_flag("--filter-queries,!--no-filter-queries", io->filter_queries,
                  "Apply the event filter to query text at retrieval");
  index->add_flag("--filter-candidates,!--no-filter-candidates", io->filter_candidates,
                  "Apply the event filter to indexed candidates");
  add_common(index, io->common);
  index->callback([io] { cmd_index(*io); });

  auto ro = std::make_shared<RetrieveOpts>();
  CLI::App* retrieve = app.add_subcommand("retrieve", "Rank the candidate pool for each query");
  retrieve->add_option("--corpus", ro->corpus, "Corpus directory")->required();
  retrieve->add_option("--task", ro->task, "Task")->check(task_values);
  retrieve
      ->add_option("--method", ro->method,
                   "bm25 | para | event-gnn | para-gnn | dense | ensemble")
      ->check(CLI::IsMember({"bm25", "para", "event-gnn", "para-gnn", "dense", "ensemble"}));
  retrieve->add_option("--split", ro->splits, "Query splits to rank (repeatable)")
      ->check(split_values);
  retrieve->add_option("--index", ro->index, "Index run directory or index.json (bm25)");
  retrieve->add_option("--weights", ro->weights, "GAT weights file (event-gnn, para-gnn)");
  retrieve->add_option("--embeds", ro->embeds, "Embedding table file");
  retrieve->add_option("--agg", ro->agg, "Paragraph aggregation: max-all | max-sum")
      ->check(CLI::IsMember({"max-all", "max-sum"}));
  retrieve->add_option("--scorer", ro->scorer, "Paragraph pair scorer: bm25 | dense")
      ->check(CLI::IsMember({"bm25", "dense"}));
  retrieve->add_option("--field", ro->field, "Embedding field for dense scoring and the gate")
      ->check(field_values);
  retrieve->add_option("--sem-run", ro->sem_run, "Semantic run directory (ensemble)");
  retrieve->add_option("--lex-run", ro->lex_run, "Lexical run directory (ensemble)");
  CLI::Option* alpha_opt =
      retrieve->add_option("--alpha", ro->alpha, "Fixed ensemble weight in [0, 1]");
  retrieve->add_option("--gate", ro->gate, "Trained gate run directory or gate.json")
      ->excludes(alpha_opt);
  add_common(retrieve, ro->common);
  retrieve->callback([ro] { cmd_retrieve(*ro); });

  auto go = std::make_shared<GridOpts>();
  CLI::App* grid = app.add_subcommand("grid-search", "Pick alpha on the validation split");
  grid->add_option("--corpus", go->corpus, "Corpus directory")->required();
  grid->add_option("--task", go->task, "Task")->check(task_values);
  grid->add_option("--sem-run", go->sem_run, "Semantic run directory")->required();
  grid->add_option("--lex-run", go->lex_run, "Lexical run directory")->required();
  add_common(grid, go->common);
  grid->callback([go] { cmd_grid_search(*go); });

  auto to = std::make_shared<TrainAlphaOpts>();
  CLI::App* train = app.add_subcommand("train-alpha", "Train the per-query alpha gate");
  train->add_option("--corpus", to->corpus, "Corpus directory")->required();
  train->add_option("--task", to->task, "Task")->check(task_values);
  train->add_option("--sem-run", to->sem_run, "Semantic run directory")->required();
  train->add_option("--lex-run", to->lex_run, "Lexical run directory")->required();
  train->add_option("--embeds", to->embeds, "Embedding table with query vectors")->required();
  train->add_option("--field", to->field, "Embedding field for query vectors")->check(field_values);
  train->add_option("--init-from", to->init_from,
                    "Gate run of the other task to transfer-initialize from");
  train->add_option("--lr", to->lr, "Learning rate");
  train->add_option("--epochs", to->epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--negatives", to->negatives, "Hard negatives per query")
      ->check(CLI::PositiveNumber);
  add_common(train, to->common);
  train->callback([to] { cmd_train_alpha(*to); });

  auto ko = std::make_shared<RerankOpts>();
  CLI::App* rerank = app.add_subcommand("rerank", "Re-rank top candidates with an LLM backend");
  rerank->add_option("--corpus", ko->corpus, "Corpus directory")->required();
  rerank->add_option("--task", ko->task, "Task")->check(task_values);
  rerank->add_option("--stage", ko->stage, "1: independent pass; 2: conditioned on the other task")
      ->check(CLI::Range(1, 2));
  rerank->add_option("--backend", ko->backend, "stub | http (endpoint from environment)")
      ->check(CLI::IsMember({"stub", "http"}));
  rerank->add_option("--run", ko->run, "Run directory with the input rankings")->required();
  rerank->add_option("--cond-run", ko->cond_run,
                     "Stage-1 rerank run of the other task (stage 2)");
  rerank->add_option("--prompts", ko->prompts, "Directory with prompt templates");
  rerank->add_option("--split", ko->split, "Query split")->check(split_values);
  rerank->add_option("--k", ko->k, "Re-rank depth (default 20 statutes, 10 precedents)");
  rerank->add_option("--retries", ko->retries, "Re-asks after an empty response");
  add_common(rerank, ko->common);
  rerank->callback([ko] { cmd_rerank(*ko); });

  auto eo = std::make_shared<EvalOpts>();
  CLI::App* eval = app.add_subcommand("eval", "Score a run against corpus gold");
  eval->add_option("--pred", eo->pred, "Run directory with rankings")->required();
  eval->add_option("--gold", eo->gold, "Corpus directory with ground truth")->required();
  eval->add_option("--task", eo->task, "Task")->check(task_values);
  eval->add_option("--split", eo->split, "Query split to evaluate")->check(split_values);
  eval->add_option("--k", eo->k, "Pin k instead of choosing on validation");
  add_common(eval, eo->common);
  eval->callback([eo] { cmd_eval(*eo); });

  auto co = std::make_shared<CompareOpts>();
  CLI::App* compare = app.add_subcommand("compare", "Paired t-test between two runs");
  compare->add_option("--a", co->run_a, "First run directory")->required();
  compare->add_option("--b", co->run_b, "Second run directory")->required();
  compare->add_option("--gold", co->gold, "Corpus directory with ground truth")->required();
  compare->add_option("--task", co->task, "Task")->check(task_values);
  compare->add_option("--split", co->split, "Query split")->check(split_values);
  compare->add_option("--k-a", co->k_a, "Pin k for the first run");
  compare->add_option("--k-b", co->k_b, "Pin k for the second run");
  add_common(compare, co->common);
  compare->callback([co] { cmd_compare(*co); });

  auto po = std::make_shared<ReportOpts>();
  CLI::App* report = app.add_subcommand("report", "Group-wise and never-cited analyses");
  report->add_option("--pred", po->pred, "Run directory with rankings")->required();
  report->add_option("--gold", po->gold, "Corpus directory with ground truth")->required();
  report->add_option("--task", po->task, "Task")->check(task_values);
  report->add_option("--split", po->split, "Query split")->check(split_values);
  report->add_option("--key", po->key, "Grouping key: frequency | length")
      ->check(CLI::IsMember({"frequency", "length"}));
  report->add_option("--freq-splits", po->freq_splits,
                     "Splits whose citations define frequency (repeatable)")
      ->check(split_values);
  report->add_option("--k", po->k, "Pin k instead of choosing on validation");
  report->add_option("--groups", po->groups, "Number of groups")->check(CLI::PositiveNumber);
  add_common(report, po->common);
  report->callback([po] { cmd_report(*po); });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return exit_code_for(Errc::Internal);
  }
  return 0;
}

}  // namespace lexsem
