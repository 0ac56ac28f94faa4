#include "lexsem/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "lexsem/error.hpp"
#include "lexsem/eval.hpp"
#include "lexsem/rng.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

using nlohmann::json;

constexpr double kAlphaClamp = 1e-15;

void check_same_keys(const ScoreMap& a, const ScoreMap& b) {
  if (a.size() != b.size()) fail(Errc::KeyMismatch, "score maps differ in size");
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first)
      fail(Errc::KeyMismatch, "score maps disagree at '" + ia->first.str() + "'");
}

}  // namespace

ScoreMap znorm(const ScoreMap& scores) {
  if (scores.empty()) fail(Errc::EmptyScores, "znorm of empty score map");
  double mean = 0.0;
  for (const auto& [id, s] : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (const auto& [id, s] : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());  // population variance
  const double sigma = std::sqrt(var);
  ScoreMap out;
  if (sigma < 1e-12) {
    for (const auto& [id, s] : scores) out[id] = 0.0;
  } else {
    for (const auto& [id, s] : scores) out[id] = (s - mean) / sigma;
  }
  return out;
}

RankedList fuse(const ScoreMap& sem, const ScoreMap& lex, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    fail(Errc::AlphaOutOfRange, "alpha = " + std::to_string(alpha));
  check_same_keys(sem, lex);
  ScoreMap zs = znorm(sem);
  ScoreMap zl = znorm(lex);
  ScoreMap fused;
  for (const auto& [id, s] : zs) fused[id] = alpha * s + (1.0 - alpha) * zl.at(id);
  return to_ranked(fused);
}

double grid_search_alpha(const std::vector<const Document*>& val_queries,
                         const QueryScorer& sem, const QueryScorer& lex,
                         const ValEvalFn& eval_fn) {
  if (val_queries.empty()) fail(Errc::NoValidationQueries, "empty validation split");

  // Score maps are alpha-independent; compute once per query.
  std::map<DocId, std::pair<ScoreMap, ScoreMap>> scored;
  for (const Document* q : val_queries) scored[q->id] = {sem(*q), lex(*q)};

  double best_alpha = 0.0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 10; ++step) {
    const double alpha = static_cast<double>(step) / 10.0;
    std::map<DocId, RankedList> rankings;
    for (const auto& [qid, maps] : scored)
      rankings[qid] = fuse(maps.first, maps.second, alpha);
    const double value = eval_fn(rankings);
    if (value > best_value) {  // strict: ties keep the smaller alpha
      best_value = value;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

ValEvalFn make_val_macro_f1(const std::vector<const Document*>& val_queries, Task task) {
  std::map<DocId, std::set<DocId>> gold;
  for (const Document* q : val_queries) gold[q->id] = q->gold(task);
  return [gold = std::move(gold), task](const std::map<DocId, RankedList>& rankings) {
    std::map<DocId, std::vector<DocId>> ids;
    for (const auto& [qid, ranked] : rankings) ids[qid] = ranked_ids(ranked);
    EvalReport report = build_report(ids, gold, task);
    return report.macro_f1[report.chosen_k - 1];
  };
}

double gate_alpha(const AlphaGate& gate, const std::vector<double>& query_embed) {
  if (gate.w.size() != query_embed.size())
    fail(Errc::DimensionMismatch, "gate dim " + std::to_string(gate.w.size()) +
                                      " vs embedding dim " + std::to_string(query_embed.size()));
  double z = gate.b;
  for (std::size_t i = 0; i < gate.w.size(); ++i) z += gate.w[i] * query_embed[i];
  const double alpha = 1.0 / (1.0 + std::exp(-z));
  return std::clamp(alpha, kAlphaClamp, 1.0 - kAlphaClamp);
}

GateGrad gate_loss_and_grad(const AlphaGate& gate, const std::vector<double>& query_embed,
                            const std::vector<double>& zsem, const std::vector<double>& zlex,
                            std::size_t positive_index) {
  if (zsem.size() != zlex.size() || zsem.empty())
    fail(Errc::KeyMismatch, "candidate score vectors disagree");
  if (positive_index >= zsem.size()) fail(Errc::Internal, "positive index out of range");

  GateGrad out;
  out.alpha = gate_alpha(gate, query_embed);

  // Fused logits and their softmax.
  const std::size_t n = zsem.size();
  std::vector<double> logits(n);
  for (std::size_t c = 0; c < n; ++c)
    logits[c] = out.alpha * zsem[c] + (1.0 - out.alpha) * zlex[c];
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  std::vector<double> p(n);
  for (std::size_t c = 0; c < n; ++c) {
    p[c] = std::exp(logits[c] - max_logit);
    denom += p[c];
  }
  for (double& x : p) x /= denom;
  out.loss = -(logits[positive_index] - max_logit - std::log(denom));

  // dloss/dalpha = sum_c (p_c - y_c) * dE_c/dalpha, dE_c/dalpha = zsem - zlex.
  double dalpha = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double y = c == positive_index ? 1.0 : 0.0;
    dalpha += (p[c] - y) * (zsem[c] - zlex[c]);
  }
  const double sig = out.alpha * (1.0 - out.alpha);
  out.dw.resize(query_embed.size());
  for (std::size_t i = 0; i < query_embed.size(); ++i)
    out.dw[i] = dalpha * sig * query_embed[i];
  out.db = dalpha * sig;
  return out;
}

AlphaGate train_gate(const std::vector<const Document*>& train_queries, Task task,
                     const QueryScorer& sem, const QueryScorer& lex, const QueryEmbedFn& embed,
                     const AlphaGate& init, const GateTrainConfig& config) {
  if (train_queries.empty()) fail(Errc::NoPositives, "no training queries");

  // Frozen per-query training material, keyed by DocId for a stable order.
  struct QueryData {
    std::vector<double> embed;
    std::vector<DocId> gold;       // positives to sample from
    std::vector<double> zsem, zlex;  // gold entries first, then negatives
  };
  std::map<DocId, QueryData> data;
  for (const Document* q : train_queries) {
    const auto& gold = q->gold(task);
    if (gold.empty()) fail(Errc::NoPositives, "query '" + q->id.str() + "' has no gold");
    QueryData qd;
    qd.embed = embed(*q);
    ScoreMap sem_scores = sem(*q);
    ScoreMap lex_scores = lex(*q);
    check_same_keys(sem_scores, lex_scores);
    ScoreMap zs = znorm(sem_scores);
    ScoreMap zl = znorm(lex_scores);

    // Hard negatives: best non-gold candidates by lexical score.
    RankedList lex_ranked = to_ranked(lex_scores);
    std::vector<DocId> negatives;
    for (const auto& sd : lex_ranked) {
      if (static_cast<int>(negatives.size()) >= config.negatives_per_query) break;
      if (!gold.count(sd.id)) negatives.push_back(sd.id);
    }

    for (const auto& id : gold) {
      qd.gold.push_back(id);
      qd.zsem.push_back(zs.at(id));
      qd.zlex.push_back(zl.at(id));
    }
    for (const auto& id : negatives) {
      qd.zsem.push_back(zs.at(id));
      qd.zlex.push_back(zl.at(id));
    }
    data.emplace(q->id, std::move(qd));
  }

  AlphaGate gate = init;
  Rng rng(config.seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& [qid, qd] : data) {
      const std::size_t n_gold = qd.gold.size();
      const std::size_t pick = n_gold == 1 ? 0 : static_cast<std::size_t>(rng.below(n_gold));
      // Candidate slate: the drawn positive plus every negative.
      std::vector<double> zsem, zlex;
      zsem.push_back(qd.zsem[pick]);
      zlex.push_back(qd.zlex[pick]);
      for (std::size_t i = n_gold; i < qd.zsem.size(); ++i) {
        zsem.push_back(qd.zsem[i]);
        zlex.push_back(qd.zlex[i]);
      }
      GateGrad g = gate_loss_and_grad(gate, qd.embed, zsem, zlex, 0);
      if (!std::isfinite(g.loss)) fail(Errc::Divergence, "non-finite loss at '" + qid.str() + "'");
      for (std::size_t i = 0; i < gate.w.size(); ++i) gate.w[i] -= config.lr * g.dw[i];
      gate.b -= config.lr * g.db;
    }
  }
  return gate;
}

void GateState::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = 1;
  j["kind"] = "alpha-gate";
  j["task"] = to_string(task);
  j["w"] = gate.w;
  j["b"] = gate.b;
  j["run_id"] = run_id;
  j["init_from"] = init_from;
  atomic_write_file(path, j.dump());
}

GateState GateState::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "alpha-gate")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 alpha-gate file");
    GateState state;
    auto task = task_from_string(j.at("task").get<std::string>());
    if (!task) fail(Errc::MalformedRecord, path.string() + ": unknown task");
    state.task = *task;
    state.gate.w = j.at("w").get<std::vector<double>>();
    state.gate.b = j.at("b").get<double>();
    state.run_id = j.at("run_id").get<std::string>();
    state.init_from = j.at("init_from").get<std::string>();
    return state;
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

GateState transfer_init(const GateState& source, Task target_task) {
  if (source.task == target_task)
    fail(Errc::TaskMismatch, "transfer requires the other task's gate");
  GateState target;
  target.gate = source.gate;
  target.task = target_task;
  target.init_from = source.run_id;
  return target;
}

}  // namespace lexsem
