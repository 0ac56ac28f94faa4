#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// Completion backend. Implementations must behave deterministically for a
/// fixed prompt (decoding runs at temperature 0).
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Offline backend for tests and reproducible runs. The default responder
/// answers YES/NO prompts by prompt-hash parity and list prompts by echoing
/// the offered ids whose per-id hash is even (NONE when none survive).
class StubLlmClient : public LlmClient {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  StubLlmClient();
  explicit StubLlmClient(Responder responder);

  std::string complete(const std::string& prompt) override;

 private:
  Responder responder_;
};

/// JSON-over-HTTP chat backend. Plain http only; transport failures retry
/// with backoff and surface as LlmTransport, malformed response envelopes
/// as UnparseableResponse.
class HttpLlmClient : public LlmClient {
 public:
  struct Config {
    std::string endpoint;  // e.g. http://host:8080/v1/chat/completions
    std::string model;
    std::string api_key;   // optional bearer token
    int max_retries = 2;
    int timeout_seconds = 60;
  };

  /// Reads LEXSEM_LLM_ENDPOINT, LEXSEM_LLM_MODEL, LEXSEM_LLM_KEY.
  static Config from_env();

  explicit HttpLlmClient(Config config);

  std::string complete(const std::string& prompt) override;

 private:
  Config config_;
};

/// Memoizing wrapper: within one run an identical prompt string reaches the
/// inner backend exactly once, even under concurrent callers.
class CachingLlmClient : public LlmClient {
 public:
  explicit CachingLlmClient(LlmClient& inner);

  std::string complete(const std::string& prompt) override;

  std::size_t backend_calls() const;
  /// (prompt, response) pairs in backend-issue order.
  std::vector<std::pair<std::string, std::string>> exchanges() const;

 private:
  LlmClient& inner_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::string>> futures_;
  std::vector<std::pair<std::string, std::string>> exchanges_;
  std::size_t backend_calls_ = 0;
};

/// Prompt templates with {QUERY_TEXT}, {STATUTE_LIST}, {PRECEDENT_TEXT},
/// {QUERY_STATUTES}, {PRECEDENT_STATUTES} slots.
struct PromptSet {
  std::string statutes;
  std::string precedents_stage1;
  std::string precedents_stage2;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;

  static PromptSet defaults();
  /// Reads rerank_statutes.txt, rerank_precedents_stage1.txt and
  /// rerank_precedents_stage2.txt from `dir`.
  static PromptSet load(const std::filesystem::path& dir);
};

/// Replaces every {KEY} occurrence for each provided slot.
std::string render_prompt(std::string tmpl, const std::map<std::string, std::string>& slots);

/// Display name of a statute: its first text line, capped at 120 chars.
std::string statute_name(const Document& statute);

/// First min(k, |ranked|) ids in rank order. k >= 1 or InvalidK.
std::vector<DocId> take_top_k(const RankedList& ranked, int k);

/// Candidates split into LLM-positives and negatives, each part keeping the
/// input order; `final` is their concatenation (stage-2 statute reranking
/// additionally appends the untouched remainder of the pool).
struct RerankOutcome {
  DocId query;
  Task task = Task::Lsr;
  std::vector<DocId> positives;
  std::vector<DocId> negatives;
  std::vector<DocId> final;
  std::vector<std::pair<std::string, std::string>> raw_responses;  // (prompt hash, response)
};

/// Stable partition of `candidates` by membership in `positive`.
/// UnknownPositive when `positive` is not a subset of `candidates`.
RerankOutcome partition_rerank(const std::vector<DocId>& candidates,
                               const std::set<DocId>& positive);

/// Union of cited statutes over the given precedents; UnknownPrecedent when
/// a member is not in the precedent pool.
std::set<DocId> expand_statutes(const std::set<DocId>& precedents, const CorpusBundle& bundle);

struct RerankConfig {
  int k_lsr = 20;
  int k_pcr = 10;
  int max_retries = 2;    // re-asks after an empty response
  int max_in_flight = 4;  // concurrent pairwise calls
};

/// Drives the two re-ranking stages against one backend, recording every
/// (prompt, response) exchange and any parse warnings. Per-query methods
/// are meant to be called sequentially; only their internal pairwise
/// fan-out runs concurrently.
class Reranker {
 public:
  Reranker(LlmClient& llm, PromptSet prompts, RerankConfig config = {});

  /// One list prompt over (id, name) pairs; returns the ids the backend
  /// marked relevant. Unknown ids in the response are dropped with a
  /// warning; an empty response after the retry budget yields the empty
  /// set with a warning.
  std::set<DocId> stage1_lsr(const Document& query,
                             const std::vector<std::pair<DocId, std::string>>& top_statutes);

  /// One YES/NO prompt per candidate precedent, bounded in flight; verdicts
  /// re-associated by candidate id. Unrecognized verdict tokens count as NO
  /// with a warning.
  std::set<DocId> stage1_pcr(const Document& query, const std::vector<DocId>& top_precedents,
                             const CorpusBundle& bundle);

  /// List prompt over the top statutes extended with expansion-only ids in
  /// ascending order; partitions that offer list and appends the remaining
  /// `pool_ranked` entries (retriever order) after the negatives.
  RerankOutcome stage2_lsr(const Document& query, const std::vector<DocId>& top_statutes,
                           const std::set<DocId>& expansion,
                           const std::vector<DocId>& pool_ranked, const CorpusBundle& bundle);

  /// Single pairwise verdict conditioned on statute context: the query-side
  /// set carries stage-1 LSR positives, the candidate side its own citations.
  bool stage2_pcr(const Document& query, const Document& precedent,
                  const std::set<DocId>& s1_plus, const CorpusBundle& bundle);

  /// stage2_pcr over every candidate, bounded in flight.
  std::set<DocId> stage2_pcr_batch(const Document& query,
                                   const std::vector<DocId>& top_precedents,
                                   const std::set<DocId>& s1_plus, const CorpusBundle& bundle);

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::pair<std::string, std::string>>& exchanges() const {
    return exchanges_;
  }
  /// Drains the exchange log, e.g. after finishing one query.
  std::vector<std::pair<std::string, std::string>> take_exchanges();
  std::vector<std::string> take_warnings();

 private:
  struct CallLog {
    std::string response;
    bool exhausted = false;  // still empty after the retry budget
    std::vector<std::pair<std::string, std::string>> exchanges;
  };

  CallLog complete_with_retry(const std::string& prompt) const;
  std::string pairwise_stage2_prompt(const Document& query, const Document& precedent,
                                     const std::set<DocId>& s1_plus,
                                     const CorpusBundle& bundle) const;
  std::vector<bool> pairwise_verdicts(const std::vector<std::string>& prompts,
                                      const std::vector<DocId>& ids);

  LlmClient& llm_;
  PromptSet prompts_;
  RerankConfig config_;
  std::vector<std::string> warnings_;
  std::vector<std::pair<std::string, std::string>> exchanges_;
};

/// Response-parsing primitives, exposed for tests.
std::set<DocId> parse_id_list(const std::string& response, const std::set<DocId>& offered,
                              std::vector<std::string>* warnings);
std::optional<bool> parse_verdict(const std::string& response);

}  // namespace lexsem
