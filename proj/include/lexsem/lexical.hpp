#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// ASCII-lowercased alphanumeric runs; non-alphanumeric bytes separate
/// tokens, bytes >= 0x80 count as token characters. Placeholder tokens of
/// the form [UPPERCASE] survive whole and keep their case.
std::vector<std::string> tokenize(std::string_view text);

/// Contiguous n-grams, tokens joined by single spaces. n >= 1 or InvalidN.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n);

struct Bm25Config {
  double k1 = 1.6;
  double b = 0.7;
  int min_df = 1;
  double max_df_ratio = 0.65;
  std::vector<int> ngram_sizes = {2, 3, 4, 5};

  friend bool operator==(const Bm25Config&, const Bm25Config&) = default;
};

/// All n-grams of the text for every configured size, in reading order per
/// size. The multiset defining term frequencies and document length.
std::vector<std::string> document_terms(std::string_view text, const Bm25Config& config);

/// BM25 over n-gram terms. Terms are dropped at build time when their
/// document frequency is below min_df or above max_df_ratio * N; document
/// lengths count all terms, dropped or not.
class Bm25Index {
 public:
  static Bm25Index build(const std::map<DocId, std::string>& texts, const Bm25Config& config = {});
  static Bm25Index load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); 0 for unindexed terms.
  double idf(const std::string& term) const;
  /// Documents containing the term; 0 if the term was dropped or unseen.
  int df(const std::string& term) const;

  std::size_t doc_count() const { return doc_lens_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  double avg_len() const { return avg_len_; }
  std::int64_t doc_len(const DocId& id) const;
  const Bm25Config& config() const { return config_; }
  bool contains(const DocId& id) const { return doc_lens_.count(id) != 0; }
  std::vector<DocId> doc_ids() const;

  /// Scores every indexed candidate, or exactly `subset` when given
  /// (UnknownCandidate if a subset id was never indexed). Query terms are
  /// deduplicated: repeating a term in the query does not raise scores.
  RankedList rank(std::string_view query_text, const std::vector<DocId>* subset = nullptr) const;

  friend bool operator==(const Bm25Index&, const Bm25Index&) = default;

 private:
  Bm25Config config_;
  std::map<DocId, std::int64_t> doc_lens_;
  double avg_len_ = 0.0;
  std::map<std::string, std::map<DocId, int>> postings_;
};

/// Tokens of every event element (subjects, actions, objects) across docs.
std::set<std::string> event_vocab(const std::map<DocId, Document>& docs);

/// Keeps the sentences sharing at least one token with the document's own
/// events and at least one with the opposing collection's event vocabulary,
/// joined by newlines. Documents without events pass through unchanged.
std::string filter_by_events(const Document& doc, const std::set<std::string>& opposing_vocab);

}  // namespace lexsem
