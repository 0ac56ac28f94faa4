#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// (s - mean) / population sigma per candidate; all zeros when sigma is
/// below 1e-12 so fusion degrades to the other component.
ScoreMap znorm(const ScoreMap& scores);

/// alpha * znorm(sem) + (1 - alpha) * znorm(lex), ranked. Key sets must
/// match exactly; alpha in [0, 1].
RankedList fuse(const ScoreMap& sem, const ScoreMap& lex, double alpha);

/// Scores the whole candidate pool for one query.
using QueryScorer = std::function<ScoreMap(const Document& query)>;

/// Quality of a set of validation rankings (higher is better), e.g. macro
/// F1 at the best k.
using ValEvalFn = std::function<double(const std::map<DocId, RankedList>& rankings)>;

/// Best alpha on the 11-point grid {0, 0.1, ..., 1.0}; ties prefer the
/// smaller alpha. NoValidationQueries when val_queries is empty.
double grid_search_alpha(const std::vector<const Document*>& val_queries,
                         const QueryScorer& sem, const QueryScorer& lex,
                         const ValEvalFn& eval_fn);

/// Default grid-search objective: macro F1 at the best k in 1..10, judged
/// against the queries' gold sets for the task.
ValEvalFn make_val_macro_f1(const std::vector<const Document*>& val_queries, Task task);

/// Affine layer + logistic gate mapping a query embedding to alpha.
struct AlphaGate {
  std::vector<double> w;
  double b = 0.0;

  friend bool operator==(const AlphaGate&, const AlphaGate&) = default;
};

/// logistic(w . e + b), clamped to [1e-15, 1 - 1e-15]. DimensionMismatch
/// when the embedding length differs from w.
double gate_alpha(const AlphaGate& gate, const std::vector<double>& query_embed);

struct GateGrad {
  double loss = 0.0;
  std::vector<double> dw;
  double db = 0.0;
  double alpha = 0.0;
};

/// Softmax cross-entropy of the positive candidate over fused scores
/// E_c = alpha * zsem[c] + (1 - alpha) * zlex[c], with analytic gradients
/// (E is affine in alpha; d alpha / dw = alpha (1 - alpha) e).
GateGrad gate_loss_and_grad(const AlphaGate& gate, const std::vector<double>& query_embed,
                            const std::vector<double>& zsem, const std::vector<double>& zlex,
                            std::size_t positive_index);

struct GateTrainConfig {
  double lr = 0.1;
  int epochs = 20;
  int negatives_per_query = 8;
  std::uint64_t seed = 0;
};

/// Per-query embedding fed to the gate.
using QueryEmbedFn = std::function<std::vector<double>(const Document& query)>;

/// SGD on per-query softmax cross-entropy over {1 gold positive + N hardest
/// non-gold lexical candidates}. The positive is redrawn each epoch with the
/// seeded generator; queries run in DocId order; scorers stay frozen.
/// NoPositives if any query lacks gold; Divergence on non-finite loss.
AlphaGate train_gate(const std::vector<const Document*>& train_queries, Task task,
                     const QueryScorer& sem, const QueryScorer& lex, const QueryEmbedFn& embed,
                     const AlphaGate& init, const GateTrainConfig& config);

/// A gate plus the task and run it came from.
struct GateState {
  AlphaGate gate;
  Task task = Task::Lsr;
  std::string run_id;
  std::string init_from;  // source run id when transfer-initialized

  static GateState load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const GateState&, const GateState&) = default;
};

/// Deep copy of the source parameters retargeted at the other task, with
/// provenance; TaskMismatch when source.task == target_task.
GateState transfer_init(const GateState& source, Task target_task);

}  // namespace lexsem
