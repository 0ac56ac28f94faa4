#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lexsem/lexical.hpp"
#include "lexsem/types.hpp"

namespace lexsem {

class EmbeddingTable;

/// Row-major n_q x m_c matrix of paragraph-pair scores.
struct ScoreMatrix {
  std::size_t n_q = 0;
  std::size_t m_c = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * m_c + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * m_c + j]; }
};

/// Scores one (query paragraph, candidate paragraph) text pair.
using PairScorer = std::function<double(const std::string&, const std::string&)>;

/// The default paragraph-level BM25 configuration (2-grams only).
Bm25Config paragraph_bm25_config();

/// BM25 scorer whose collection statistics come from the given paragraph
/// texts (each distinct text indexed once). Defaults to 2-gram terms.
PairScorer make_bm25_pair_scorer(const std::vector<std::string>& corpus_paragraphs,
                                 Bm25Config config = paragraph_bm25_config());

/// Dot product of the paragraphs' vectors, looked up by exact text.
PairScorer make_dense_pair_scorer(const EmbeddingTable& embeds);

/// values[i][j] = scorer(query.paragraphs[i].text, cand.paragraphs[j].text).
ScoreMatrix pairwise_matrix(const Document& query, const Document& cand,
                            const PairScorer& scorer);

/// Global maximum entry.
double max_all(const ScoreMatrix& m);

/// Sum over rows of the row maximum.
double max_sum(const ScoreMatrix& m);

enum class ParaAgg { MaxAll, MaxSum };

/// Aggregated paragraph-level score for every pool candidate, ranked.
/// Candidates are scored independently across `workers` threads.
RankedList rank_para(const Document& query, const std::map<DocId, Document>& pool,
                     const PairScorer& scorer, ParaAgg agg, int workers = 1);

}  // namespace lexsem
