#include "lexsem/paragraph.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>

#include "lexsem/error.hpp"
#include "lexsem/graph.hpp"
#include "lexsem/util.hpp"

namespace lexsem {

Bm25Config paragraph_bm25_config() {
  Bm25Config c;
  c.ngram_sizes = {2};
  return c;
}

PairScorer make_bm25_pair_scorer(const std::vector<std::string>& corpus_paragraphs,
                                 Bm25Config config) {
  std::map<DocId, std::string> texts;
  for (const auto& p : corpus_paragraphs) texts.emplace(DocId(content_hash(p)), p);
  auto index = std::make_shared<Bm25Index>(Bm25Index::build(texts, config));
  return [index](const std::string& query_text, const std::string& cand_text) {
    std::vector<DocId> target{DocId(content_hash(cand_text))};
    return index->rank(query_text, &target)[0].score;
  };
}

PairScorer make_dense_pair_scorer(const EmbeddingTable& embeds) {
  return [&embeds](const std::string& query_text, const std::string& cand_text) {
    const auto& a = embeds.at(query_text);
    const auto& b = embeds.at(cand_text);
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  };
}

ScoreMatrix pairwise_matrix(const Document& query, const Document& cand,
                            const PairScorer& scorer) {
  if (query.paragraphs.empty())
    fail(Errc::EmptyParagraphs, "query '" + query.id.str() + "' has no paragraphs");
  if (cand.paragraphs.empty())
    fail(Errc::EmptyParagraphs, "candidate '" + cand.id.str() + "' has no paragraphs");
  ScoreMatrix m;
  m.n_q = query.paragraphs.size();
  m.m_c = cand.paragraphs.size();
  m.values.resize(m.n_q * m.m_c);
  for (std::size_t i = 0; i < m.n_q; ++i) {
    for (std::size_t j = 0; j < m.m_c; ++j) {
      double v = scorer(query.paragraphs[i].text, cand.paragraphs[j].text);
      if (!std::isfinite(v))
        fail(Errc::Internal, "non-finite pair score for '" + query.id.str() + "' x '" +
                                 cand.id.str() + "'");
      m.at(i, j) = v;
    }
  }
  return m;
}

double max_all(const ScoreMatrix& m) {
  if (m.values.empty()) fail(Errc::EmptyMatrix, "max_all of empty matrix");
  double best = m.values[0];
  for (double v : m.values) best = std::max(best, v);
  return best;
}

double max_sum(const ScoreMatrix& m) {
  if (m.values.empty()) fail(Errc::EmptyMatrix, "max_sum of empty matrix");
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_q; ++i) {
    double row_best = m.at(i, 0);
    for (std::size_t j = 1; j < m.m_c; ++j) row_best = std::max(row_best, m.at(i, j));
    total += row_best;
  }
  return total;
}

RankedList rank_para(const Document& query, const std::map<DocId, Document>& pool,
                     const PairScorer& scorer, ParaAgg agg, int workers) {
  std::vector<const Document*> cands;
  cands.reserve(pool.size());
  for (const auto& [id, doc] : pool) cands.push_back(&doc);

  std::vector<double> scores(cands.size());
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < cands.size(); i = next.fetch_add(1)) {
      try {
        ScoreMatrix m = pairwise_matrix(query, *cands[i], scorer);
        scores[i] = agg == ParaAgg::MaxAll ? max_all(m) : max_sum(m);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int n_threads = std::max(1, workers);
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ScoreMap out;
  for (std::size_t i = 0; i < cands.size(); ++i) out[cands[i]->id] = scores[i];
  return to_ranked(out);
}

}  // namespace lexsem
