#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lexsem/cli.hpp"
#include "lexsem/ensemble.hpp"
#include "lexsem/error.hpp"
#include "lexsem/eval.hpp"
#include "lexsem/lexical.hpp"
#include "lexsem/types.hpp"

namespace py = pybind11;
using namespace lexsem;

namespace {

// The python surface speaks plain strings; DocId stays a C++ detail.
std::vector<std::pair<std::string, double>> from_ranked(const RankedList& list) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(list.size());
  for (const auto& sd : list) out.emplace_back(sd.id.str(), sd.score);
  return out;
}

ScoreMap to_scores(const std::map<std::string, double>& scores) {
  ScoreMap out;
  for (const auto& [id, s] : scores) out[DocId(id)] = s;
  return out;
}

Task to_task(const std::string& name) {
  auto task = task_from_string(name);
  if (!task) fail(Errc::Usage, "unknown task: " + name);
  return *task;
}

}  // namespace

PYBIND11_MODULE(_lexsem, m) {
  m.doc() = "Joint statute and precedent retrieval pipeline";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError,
                      (std::string(errc_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "run_cli", [](std::vector<std::string> args) { return run_cli(std::move(args)); },
      py::arg("args"), "Run a CLI subcommand; returns the process exit code.");

  m.def(
      "tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"),
      "Lowercased alphanumeric tokens; bracketed placeholders survive whole.");

  py::class_<Bm25Config>(m, "Bm25Config")
      .def(py::init<>())
      .def_readwrite("k1", &Bm25Config::k1)
      .def_readwrite("b", &Bm25Config::b)
      .def_readwrite("min_df", &Bm25Config::min_df)
      .def_readwrite("max_df_ratio", &Bm25Config::max_df_ratio)
      .def_readwrite("ngram_sizes", &Bm25Config::ngram_sizes);

  py::class_<Bm25Index>(m, "Bm25Index")
      .def_static(
          "build",
          [](const std::map<std::string, std::string>& texts, const Bm25Config& config) {
            std::map<DocId, std::string> converted;
            for (const auto& [id, text] : texts) converted[DocId(id)] = text;
            return Bm25Index::build(converted, config);
          },
          py::arg("texts"), py::arg("config") = Bm25Config{})
      .def_static("load", &Bm25Index::load, py::arg("path"))
      .def("save", &Bm25Index::save, py::arg("path"))
      .def(
          "rank", [](const Bm25Index& index, const std::string& query) {
            return from_ranked(index.rank(query));
          },
          py::arg("query"), "Scores sorted descending, ties by ascending doc id.")
      .def("idf", [](const Bm25Index& i, const std::string& t) { return i.idf(t); }, py::arg("term"))
      .def_property_readonly("doc_count", &Bm25Index::doc_count)
      .def_property_readonly("term_count", &Bm25Index::term_count)
      .def_property_readonly("avg_len", &Bm25Index::avg_len);

  m.def(
      "znorm", [](const std::map<std::string, double>& scores) {
        std::map<std::string, double> out;
        for (const auto& [id, s] : znorm(to_scores(scores))) out[id.str()] = s;
        return out;
      },
      py::arg("scores"), "Population z-normalization; a constant list maps to zeros.");

  m.def(
      "fuse",
      [](const std::map<std::string, double>& semantic, const std::map<std::string, double>& lexical,
         double alpha) { return from_ranked(fuse(to_scores(semantic), to_scores(lexical), alpha)); },
      py::arg("semantic"), py::arg("lexical"), py::arg("alpha"),
      "alpha * znorm(semantic) + (1 - alpha) * znorm(lexical), ranked.");

  m.def(
      "evaluate",
      [](const std::map<std::string, std::vector<std::string>>& rankings,
         const std::map<std::string, std::vector<std::string>>& gold, const std::string& task,
         std::optional<int> k) {
        std::map<DocId, std::vector<DocId>> ranked;
        for (const auto& [qid, ids] : rankings) {
          auto& row = ranked[DocId(qid)];
          for (const auto& id : ids) row.emplace_back(id);
        }
        std::map<DocId, std::set<DocId>> gold_sets;
        for (const auto& [qid, ids] : gold) {
          auto& row = gold_sets[DocId(qid)];
          for (const auto& id : ids) row.emplace(id);
        }
        EvalReport report = build_report(ranked, gold_sets, to_task(task), k);
        py::dict out;
        out["macro_f1"] = report.macro_f1;
        out["chosen_k"] = report.chosen_k;
        out["map"] = report.map;
        out["mrr"] = report.mrr;
        py::dict per_query;
        for (const auto& [qid, qm] : report.per_query) {
          py::dict row;
          row["f1_at"] = qm.f1_at;
          row["ap"] = qm.ap;
          row["rr"] = qm.rr;
          per_query[py::str(qid.str())] = std::move(row);
        }
        out["per_query"] = std::move(per_query);
        return out;
      },
      py::arg("rankings"), py::arg("gold"), py::arg("task") = "lsr",
      py::arg("k") = std::nullopt,
      "Macro F1 at k=1..10, MAP and MRR; k picked by best macro F1 unless pinned.");

  m.def(
      "paired_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        TTestResult r = paired_t_test(a, b);
        return py::make_tuple(r.t, r.dof, r.p);
      },
      py::arg("a"), py::arg("b"), "Returns (t, dof, two-sided p).");

  m.def("corpus_digest", &corpus_digest, py::arg("dir"),
        "Stable digest over the three corpus JSONL files.");
}
