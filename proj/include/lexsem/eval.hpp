#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

inline constexpr int kMaxEvalK = 10;

struct QueryMetrics {
  std::array<double, kMaxEvalK> f1_at{};  // index k-1 holds F1@k
  double ap = 0.0;
  double rr = 0.0;

  friend bool operator==(const QueryMetrics&, const QueryMetrics&) = default;
};

struct EvalReport {
  Task task = Task::Lsr;
  std::map<DocId, QueryMetrics> per_query;
  std::array<double, kMaxEvalK> macro_f1{};
  int chosen_k = 1;
  double map = 0.0;
  double mrr = 0.0;
};

/// P = |top-k n gold| / k, R = |top-k n gold| / |gold|, F1 = 2PR/(P+R)
/// (0 when P + R = 0). k >= 1 or InvalidK; gold non-empty or EmptyGold.
double f1_at_k(const std::vector<DocId>& ranked, const std::set<DocId>& gold, int k);

/// (1/|gold|) * sum over ranks r holding gold of precision@r.
double average_precision(const std::vector<DocId>& ranked, const std::set<DocId>& gold);

/// 1 / rank of the first gold candidate, 0 if none ranked.
double reciprocal_rank(const std::vector<DocId>& ranked, const std::set<DocId>& gold);

/// argmax over k in 1..10 of macro F1, smallest k on ties.
int select_best_k(const std::map<DocId, QueryMetrics>& per_query);

/// Per-query metrics plus unweighted macro averages. chosen_k defaults to
/// this report's own best k; pass k_override (from a validation report) to
/// pin it. Queries in `rankings` must have non-empty gold.
EvalReport build_report(const std::map<DocId, std::vector<DocId>>& rankings,
                        const std::map<DocId, std::set<DocId>>& gold, Task task,
                        std::optional<int> k_override = std::nullopt);

struct TTestResult {
  double t = 0.0;
  int dof = 0;
  double p = 1.0;
};

/// Paired Student t over aligned per-query scores; sample (n-1) standard
/// deviation; two-sided p. DegenerateDifferences when every difference is
/// identical (zero variance) or n < 2.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Map overload; KeyMismatch unless both report the same query set.
TTestResult paired_t_test(const std::map<DocId, double>& a, const std::map<DocId, double>& b);

struct GroupReport {
  std::vector<std::set<DocId>> groups;  // group 1 first (most frequent)
  std::vector<double> macro_f1;         // per group, at the report's k
  std::vector<int> query_counts;        // queries contributing to each group
  int k = 1;
};

/// Candidates sorted by descending frequency (ties by ascending DocId) and
/// cut into `groups` equal parts, remainder to the earlier groups. Gold and
/// predictions are restricted to each group; queries whose restricted gold
/// is empty are excluded from that group's macro.
GroupReport frequency_group_report(const std::map<DocId, std::vector<DocId>>& rankings,
                                   const std::map<DocId, std::set<DocId>>& gold,
                                   const std::map<DocId, int>& frequencies, int k,
                                   int groups = 4);

/// Queries whose top 5 contains any never-cited candidate. Lower is better.
int never_cited_top5(const std::map<DocId, std::vector<DocId>>& rankings,
                     const std::set<DocId>& never_cited);

}  // namespace lexsem
