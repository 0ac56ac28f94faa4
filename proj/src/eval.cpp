#include "lexsem/eval.hpp"

#include <algorithm>
#include <cmath>

#include "lexsem/error.hpp"
#include "lexsem/stats.hpp"

namespace lexsem {

double f1_at_k(const std::vector<DocId>& ranked, const std::set<DocId>& gold, int k) {
  if (k < 1) fail(Errc::InvalidK, "k = " + std::to_string(k));
  if (gold.empty()) fail(Errc::EmptyGold, "f1_at_k with empty gold set");
  const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  int hits = 0;
  for (std::size_t i = 0; i < depth; ++i)
    if (gold.count(ranked[i])) ++hits;
  const double precision = static_cast<double>(hits) / static_cast<double>(k);
  const double recall = static_cast<double>(hits) / static_cast<double>(gold.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double average_precision(const std::vector<DocId>& ranked, const std::set<DocId>& gold) {
  if (gold.empty()) fail(Errc::EmptyGold, "average_precision with empty gold set");
  int hits = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (gold.count(ranked[i])) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return total / static_cast<double>(gold.size());
}

double reciprocal_rank(const std::vector<DocId>& ranked, const std::set<DocId>& gold) {
  if (gold.empty()) fail(Errc::EmptyGold, "reciprocal_rank with empty gold set");
  for (std::size_t i = 0; i < ranked.size(); ++i)
    if (gold.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

int select_best_k(const std::map<DocId, QueryMetrics>& per_query) {
  int best_k = 1;
  double best = -1.0;
  for (int k = 1; k <= kMaxEvalK; ++k) {
    double sum = 0.0;
    for (const auto& [id, m] : per_query) sum += m.f1_at[k - 1];
    const double macro = per_query.empty() ? 0.0 : sum / static_cast<double>(per_query.size());
    if (macro > best) {
      best = macro;
      best_k = k;
    }
  }
  return best_k;
}

EvalReport build_report(const std::map<DocId, std::vector<DocId>>& rankings,
                        const std::map<DocId, std::set<DocId>>& gold, Task task,
                        std::optional<int> k_override) {
  EvalReport report;
  report.task = task;
  for (const auto& [qid, ranked] : rankings) {
    auto g = gold.find(qid);
    if (g == gold.end()) fail(Errc::KeyMismatch, "no gold for query '" + qid.str() + "'");
    QueryMetrics m;
    for (int k = 1; k <= kMaxEvalK; ++k) m.f1_at[k - 1] = f1_at_k(ranked, g->second, k);
    m.ap = average_precision(ranked, g->second);
    m.rr = reciprocal_rank(ranked, g->second);
    report.per_query.emplace(qid, m);
  }
  const double n = static_cast<double>(report.per_query.size());
  if (n > 0) {
    for (const auto& [qid, m] : report.per_query) {
      for (int k = 0; k < kMaxEvalK; ++k) report.macro_f1[k] += m.f1_at[k];
      report.map += m.ap;
      report.mrr += m.rr;
    }
    for (int k = 0; k < kMaxEvalK; ++k) report.macro_f1[k] /= n;
    report.map /= n;
    report.mrr /= n;
  }
  if (k_override) {
    if (*k_override < 1 || *k_override > kMaxEvalK)
      fail(Errc::InvalidK, "k = " + std::to_string(*k_override));
    report.chosen_k = *k_override;
  } else {
    report.chosen_k = select_best_k(report.per_query);
  }
  return report;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(Errc::KeyMismatch, "paired t-test on unequal lengths");
  const std::size_t n = a.size();
  if (n < 2) fail(Errc::DegenerateDifferences, "paired t-test needs n >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (var <= 0.0) fail(Errc::DegenerateDifferences, "all paired differences identical");
  TTestResult r;
  r.dof = static_cast<int>(n) - 1;
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

TTestResult paired_t_test(const std::map<DocId, double>& a, const std::map<DocId, double>& b) {
  if (a.size() != b.size()) fail(Errc::KeyMismatch, "paired t-test on different query sets");
  std::vector<double> va, vb;
  va.reserve(a.size());
  vb.reserve(b.size());
  for (const auto& [id, score] : a) {
    auto it = b.find(id);
    if (it == b.end()) fail(Errc::KeyMismatch, "query '" + id.str() + "' missing from b");
    va.push_back(score);
    vb.push_back(it->second);
  }
  return paired_t_test(va, vb);
}

GroupReport frequency_group_report(const std::map<DocId, std::vector<DocId>>& rankings,
                                   const std::map<DocId, std::set<DocId>>& gold,
                                   const std::map<DocId, int>& frequencies, int k, int groups) {
  if (k < 1) fail(Errc::InvalidK, "k = " + std::to_string(k));
  if (groups < 1) fail(Errc::Usage, "groups must be >= 1");

  std::vector<std::pair<DocId, int>> order(frequencies.begin(), frequencies.end());
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });

  GroupReport report;
  report.k = k;
  const std::size_t n = order.size();
  const std::size_t g = static_cast<std::size_t>(groups);
  const std::size_t base = n / g;
  const std::size_t remainder = n % g;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t size = base + (i < remainder ? 1 : 0);
    std::set<DocId> members;
    for (std::size_t j = 0; j < size; ++j) members.insert(order[pos++].first);
    report.groups.push_back(std::move(members));
  }

  for (const auto& members : report.groups) {
    double sum = 0.0;
    int count = 0;
    for (const auto& [qid, ranked] : rankings) {
      auto it = gold.find(qid);
      if (it == gold.end()) fail(Errc::KeyMismatch, "no gold for query '" + qid.str() + "'");
      std::set<DocId> restricted_gold;
      for (const auto& id : it->second)
        if (members.count(id)) restricted_gold.insert(id);
      if (restricted_gold.empty()) continue;
      std::vector<DocId> restricted_ranked;
      for (const auto& id : ranked)
        if (members.count(id)) restricted_ranked.push_back(id);
      sum += f1_at_k(restricted_ranked, restricted_gold, k);
      ++count;
    }
    report.macro_f1.push_back(count == 0 ? 0.0 : sum / count);
    report.query_counts.push_back(count);
  }
  return report;
}

int never_cited_top5(const std::map<DocId, std::vector<DocId>>& rankings,
                     const std::set<DocId>& never_cited) {
  int count = 0;
  for (const auto& [qid, ranked] : rankings) {
    const std::size_t depth = std::min<std::size_t>(ranked.size(), 5);
    for (std::size_t i = 0; i < depth; ++i) {
      if (never_cited.count(ranked[i])) {
        ++count;
        break;
      }
    }
  }
  return count;
}

}  // namespace lexsem
