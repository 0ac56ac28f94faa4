#include "lexsem/rerank.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lexsem/error.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

using nlohmann::json;

/// Truncates without splitting a UTF-8 code point.
std::string clip_utf8(const std::string& s, std::size_t max) {
  if (s.size() <= max) return s;
  std::size_t end = max;
  while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
  return s.substr(0, end);
}

const std::string kPunct = "\"'`.,;:!?()<>*-";

std::string strip_punct(std::string token) {
  while (!token.empty() && kPunct.find(token.front()) != std::string::npos) token.erase(0, 1);
  while (!token.empty() && kPunct.find(token.back()) != std::string::npos) token.pop_back();
  return token;
}

/// Hash-driven default stub: pairwise prompts (recognized by their quoted
/// YES/NO format demand, wherever line wrapping puts the two words) answer
/// by prompt-hash parity; list prompts echo the ids whose per-id hash is
/// even.
std::string default_stub_response(const std::string& prompt) {
  if (prompt.find("\"YES\"") != std::string::npos && prompt.find("\"NO\"") != std::string::npos)
    return fnv1a64(prompt) % 2 == 0 ? "YES" : "NO";
  std::vector<std::string> kept;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find(": ");
    if (pos == std::string::npos || pos == 0) continue;
    const std::string id = line.substr(0, pos);
    if (id.find_first_of(" \t") != std::string::npos) continue;
    if (fnv1a64(prompt + '\x1f' + id) % 2 == 0) kept.push_back(id);
  }
  if (kept.empty()) return "NONE";
  std::string out;
  for (const auto& id : kept) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

std::string statute_lines(const std::set<DocId>& ids, const CorpusBundle& bundle) {
  std::string out;
  for (const DocId& id : ids) {
    auto it = bundle.statutes.find(id);
    if (it == bundle.statutes.end())
      fail(Errc::UnknownCandidate, "'" + id.str() + "' is not in the statute pool");
    out += id.str() + ": " + statute_name(it->second) + "\n";
  }
  return out;
}

}  // namespace

StubLlmClient::StubLlmClient() : responder_(default_stub_response) {}
StubLlmClient::StubLlmClient(Responder responder) : responder_(std::move(responder)) {}

std::string StubLlmClient::complete(const std::string& prompt) { return responder_(prompt); }

HttpLlmClient::Config HttpLlmClient::from_env() {
  Config config;
  const char* endpoint = std::getenv("LEXSEM_LLM_ENDPOINT");
  const char* model = std::getenv("LEXSEM_LLM_MODEL");
  const char* key = std::getenv("LEXSEM_LLM_KEY");
  if (!endpoint || !*endpoint)
    fail(Errc::Usage, "LEXSEM_LLM_ENDPOINT is not set; the http backend needs an endpoint URL");
  if (!model || !*model)
    fail(Errc::Usage, "LEXSEM_LLM_MODEL is not set; the http backend needs a model name");
  config.endpoint = endpoint;
  config.model = model;
  if (key) config.api_key = key;
  return config;
}

HttpLlmClient::HttpLlmClient(Config config) : config_(std::move(config)) {
  if (config_.endpoint.rfind("https://", 0) == 0)
    fail(Errc::Usage, "https endpoints are not supported by this build; use plain http");
  if (config_.endpoint.rfind("http://", 0) != 0)
    fail(Errc::Usage, "endpoint must start with http://");
}

std::string HttpLlmClient::complete(const std::string& prompt) {
  const auto path_start = config_.endpoint.find('/', std::string("http://").size());
  const std::string base =
      path_start == std::string::npos ? config_.endpoint : config_.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  json body;
  body["model"] = config_.model;
  body["temperature"] = 0;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * (1 << (attempt - 1))));
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      fail(Errc::LlmTransport, "backend returned status " + std::to_string(res->status));
    try {
      json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      fail(Errc::UnparseableResponse, std::string("malformed completion envelope: ") + e.what());
    }
  }
  fail(Errc::LlmTransport, "backend unreachable after " + std::to_string(config_.max_retries + 1) +
                               " attempts: " + last_error);
}

CachingLlmClient::CachingLlmClient(LlmClient& inner) : inner_(inner) {}

std::string CachingLlmClient::complete(const std::string& prompt) {
  std::promise<std::string> promise;
  std::shared_future<std::string> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = futures_.find(prompt);
    if (it != futures_.end()) {
      future = it->second;
    } else {
      owner = true;
      future = promise.get_future().share();
      futures_.emplace(prompt, future);
    }
  }
  if (owner) {
    try {
      std::string response = inner_.complete(prompt);
      {
        std::lock_guard lock(mu_);
        exchanges_.emplace_back(prompt, response);
        ++backend_calls_;
      }
      promise.set_value(std::move(response));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

std::size_t CachingLlmClient::backend_calls() const {
  std::lock_guard lock(mu_);
  return backend_calls_;
}

std::vector<std::pair<std::string, std::string>> CachingLlmClient::exchanges() const {
  std::lock_guard lock(mu_);
  return exchanges_;
}

PromptSet PromptSet::defaults() {
  PromptSet prompts;
  prompts.statutes =
      R"(You are reviewing an anonymized court judgment. Identifier-like
references in the text were replaced with placeholders such as [ACT],
[SECTION], [PRECEDENT], or [ENTITY].

Below the judgment you will find a catalogue of statutory provisions.
Each catalogue line starts with a unique id, followed by the provision's
name.

Read the judgment, then decide which catalogue entries the judgment
relies on. Answer with the ids of the matching entries only, separated
by commas. Do not add explanations. If no entry applies, answer NONE.

Judgment text
-------------
{QUERY_TEXT}

Catalogue
---------
{STATUTE_LIST}
)";
  prompts.precedents_stage1 =
      R"(You are comparing two anonymized court judgments. Identifier-like
references were replaced with placeholders such as [ACT], [SECTION],
[PRECEDENT], or [ENTITY].

Decide whether the query judgment below cites the candidate judgment as
a precedent. Respond with exactly one word, "YES" or "NO", and nothing
else.

Query judgment
--------------
{QUERY_TEXT}

Candidate judgment
------------------
{PRECEDENT_TEXT}
)";
  prompts.precedents_stage2 =
      R"(You are comparing two anonymized court judgments. Identifier-like
references were replaced with placeholders such as [ACT], [SECTION],
[PRECEDENT], or [ENTITY].

Decide whether the query judgment below cites the candidate judgment as
a precedent. The statutory provisions associated with each side are
listed to inform your decision. Respond with exactly one word, "YES" or
"NO", and nothing else.

Query judgment
--------------
{QUERY_TEXT}

Provisions linked to the query
------------------------------
{QUERY_STATUTES}

Candidate judgment
------------------
{PRECEDENT_TEXT}

Provisions cited by the candidate
---------------------------------
{PRECEDENT_STATUTES}
)";
  return prompts;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet prompts;
  prompts.statutes = read_file(dir / "rerank_statutes.txt");
  prompts.precedents_stage1 = read_file(dir / "rerank_precedents_stage1.txt");
  prompts.precedents_stage2 = read_file(dir / "rerank_precedents_stage2.txt");
  return prompts;
}

std::string render_prompt(std::string tmpl, const std::map<std::string, std::string>& slots) {
  for (const auto& [key, value] : slots) {
    const std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(needle, pos)) != std::string::npos) {
      tmpl.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return tmpl;
}

std::string statute_name(const Document& statute) {
  std::string first = statute.text.substr(0, statute.text.find('\n'));
  return trim(clip_utf8(trim(first), 120));
}

std::vector<DocId> take_top_k(const RankedList& ranked, int k) {
  if (k < 1) fail(Errc::InvalidK, "k must be at least 1, got " + std::to_string(k));
  std::vector<DocId> out;
  for (const auto& sd : ranked) {
    if (static_cast<int>(out.size()) == k) break;
    out.push_back(sd.id);
  }
  return out;
}

RerankOutcome partition_rerank(const std::vector<DocId>& candidates,
                               const std::set<DocId>& positive) {
  const std::set<DocId> cand_set(candidates.begin(), candidates.end());
  for (const DocId& p : positive)
    if (!cand_set.count(p))
      fail(Errc::UnknownPositive, "'" + p.str() + "' was never offered for re-ranking");
  RerankOutcome out;
  for (const DocId& c : candidates)
    (positive.count(c) ? out.positives : out.negatives).push_back(c);
  out.final = out.positives;
  out.final.insert(out.final.end(), out.negatives.begin(), out.negatives.end());
  return out;
}

std::set<DocId> expand_statutes(const std::set<DocId>& precedents, const CorpusBundle& bundle) {
  std::set<DocId> out;
  for (const DocId& pid : precedents) {
    auto it = bundle.precedents.find(pid);
    if (it == bundle.precedents.end())
      fail(Errc::UnknownPrecedent, "'" + pid.str() + "' is not in the precedent pool");
    out.insert(it->second.cited_statutes.begin(), it->second.cited_statutes.end());
  }
  return out;
}

std::set<DocId> parse_id_list(const std::string& response, const std::set<DocId>& offered,
                              std::vector<std::string>* warnings) {
  std::set<DocId> out;
  std::string segment;
  auto flush = [&] {
    const std::string t = trim(segment);
    segment.clear();
    if (t.empty()) return;
    const auto last_ws = t.find_last_of(" \t");
    std::string token =
        strip_punct(last_ws == std::string::npos ? t : t.substr(last_ws + 1));
    if (token.empty()) return;
    if (lower_ascii(token) == "none") return;  // explicit empty answer
    const DocId id(token);
    if (offered.count(id)) {
      out.insert(id);
    } else if (warnings) {
      warnings->push_back("dropped unknown candidate '" + token + "' from a list response");
    }
  };
  for (const char c : response) {
    if (c == ',' || c == '\n') {
      flush();
    } else {
      segment += c;
    }
  }
  flush();
  return out;
}

std::optional<bool> parse_verdict(const std::string& response) {
  const std::string t = trim(response);
  if (t.empty()) return std::nullopt;
  const auto ws = t.find_first_of(" \t\r\n");
  const std::string token =
      lower_ascii(strip_punct(ws == std::string::npos ? t : t.substr(0, ws)));
  if (token == "yes") return true;
  if (token == "no") return false;
  return std::nullopt;
}

Reranker::Reranker(LlmClient& llm, PromptSet prompts, RerankConfig config)
    : llm_(llm), prompts_(std::move(prompts)), config_(config) {}

Reranker::CallLog Reranker::complete_with_retry(const std::string& prompt) const {
  CallLog log;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    std::string p = prompt;
    if (attempt > 0)
      p += "\n\nThis is re-ask " + std::to_string(attempt) +
           ". Respond strictly in the required format.";
    std::string response = llm_.complete(p);
    log.exchanges.emplace_back(std::move(p), response);
    if (!trim(response).empty()) {
      log.response = std::move(response);
      return log;
    }
  }
  log.exhausted = true;
  return log;
}

std::set<DocId> Reranker::stage1_lsr(
    const Document& query, const std::vector<std::pair<DocId, std::string>>& top_statutes) {
  if (top_statutes.empty())
    fail(Errc::Usage, "stage-1 statute re-ranking needs a non-empty top-k list");
  std::string list;
  std::set<DocId> offered;
  for (const auto& [id, name] : top_statutes) {
    list += id.str() + ": " + name + "\n";
    offered.insert(id);
  }
  const std::string prompt = render_prompt(
      prompts_.statutes, {{"QUERY_TEXT", query.text}, {"STATUTE_LIST", list}});
  CallLog log = complete_with_retry(prompt);
  exchanges_.insert(exchanges_.end(), log.exchanges.begin(), log.exchanges.end());
  if (log.exhausted) {
    warnings_.push_back("query '" + query.id.str() +
                        "': empty statute-list response after retries; treating every "
                        "candidate as negative");
    return {};
  }
  return parse_id_list(log.response, offered, &warnings_);
}

std::set<DocId> Reranker::stage1_pcr(const Document& query,
                                     const std::vector<DocId>& top_precedents,
                                     const CorpusBundle& bundle) {
  std::vector<std::string> prompts;
  prompts.reserve(top_precedents.size());
  for (const DocId& pid : top_precedents) {
    auto it = bundle.precedents.find(pid);
    if (it == bundle.precedents.end())
      fail(Errc::UnknownPrecedent, "'" + pid.str() + "' is not in the precedent pool");
    prompts.push_back(render_prompt(
        prompts_.precedents_stage1,
        {{"QUERY_TEXT", query.text}, {"PRECEDENT_TEXT", it->second.text}}));
  }
  const std::vector<bool> verdicts = pairwise_verdicts(prompts, top_precedents);
  std::set<DocId> out;
  for (std::size_t i = 0; i < top_precedents.size(); ++i)
    if (verdicts[i]) out.insert(top_precedents[i]);
  return out;
}

RerankOutcome Reranker::stage2_lsr(const Document& query,
                                   const std::vector<DocId>& top_statutes,
                                   const std::set<DocId>& expansion,
                                   const std::vector<DocId>& pool_ranked,
                                   const CorpusBundle& bundle) {
  std::vector<DocId> offered = top_statutes;
  std::set<DocId> offered_set(top_statutes.begin(), top_statutes.end());
  for (const DocId& id : expansion)  // std::set iteration: ascending ids
    if (offered_set.insert(id).second) offered.push_back(id);
  if (offered.empty())
    fail(Errc::Usage, "stage-2 statute re-ranking needs a non-empty offer list");

  std::string list;
  for (const DocId& id : offered) {
    auto it = bundle.statutes.find(id);
    if (it == bundle.statutes.end())
      fail(Errc::UnknownCandidate, "'" + id.str() + "' is not in the statute pool");
    list += id.str() + ": " + statute_name(it->second) + "\n";
  }
  const std::string prompt = render_prompt(
      prompts_.statutes, {{"QUERY_TEXT", query.text}, {"STATUTE_LIST", list}});
  CallLog log = complete_with_retry(prompt);
  exchanges_.insert(exchanges_.end(), log.exchanges.begin(), log.exchanges.end());
  std::set<DocId> positives;
  if (log.exhausted) {
    warnings_.push_back("query '" + query.id.str() +
                        "': empty statute-list response after retries; treating every "
                        "candidate as negative");
  } else {
    positives = parse_id_list(log.response, offered_set, &warnings_);
  }

  RerankOutcome outcome = partition_rerank(offered, positives);
  outcome.query = query.id;
  outcome.task = Task::Lsr;
  for (const DocId& id : pool_ranked)
    if (!offered_set.count(id)) outcome.final.push_back(id);
  for (const auto& [p, r] : log.exchanges) outcome.raw_responses.emplace_back(content_hash(p), r);
  return outcome;
}

std::string Reranker::pairwise_stage2_prompt(const Document& query, const Document& precedent,
                                             const std::set<DocId>& s1_plus,
                                             const CorpusBundle& bundle) const {
  return render_prompt(prompts_.precedents_stage2,
                       {{"QUERY_TEXT", query.text},
                        {"PRECEDENT_TEXT", precedent.text},
                        {"QUERY_STATUTES", statute_lines(s1_plus, bundle)},
                        {"PRECEDENT_STATUTES", statute_lines(precedent.cited_statutes, bundle)}});
}

bool Reranker::stage2_pcr(const Document& query, const Document& precedent,
                          const std::set<DocId>& s1_plus, const CorpusBundle& bundle) {
  const std::string prompt = pairwise_stage2_prompt(query, precedent, s1_plus, bundle);
  CallLog log = complete_with_retry(prompt);
  exchanges_.insert(exchanges_.end(), log.exchanges.begin(), log.exchanges.end());
  if (log.exhausted) {
    warnings_.push_back("candidate '" + precedent.id.str() +
                        "': empty verdict response after retries; treating as NO");
    return false;
  }
  const auto verdict = parse_verdict(log.response);
  if (!verdict) {
    warnings_.push_back("candidate '" + precedent.id.str() + "': unrecognized verdict '" +
                        clip_utf8(trim(log.response), 40) + "'; treating as NO");
    return false;
  }
  return *verdict;
}

std::set<DocId> Reranker::stage2_pcr_batch(const Document& query,
                                           const std::vector<DocId>& top_precedents,
                                           const std::set<DocId>& s1_plus,
                                           const CorpusBundle& bundle) {
  std::vector<std::string> prompts;
  prompts.reserve(top_precedents.size());
  for (const DocId& pid : top_precedents) {
    auto it = bundle.precedents.find(pid);
    if (it == bundle.precedents.end())
      fail(Errc::UnknownPrecedent, "'" + pid.str() + "' is not in the precedent pool");
    prompts.push_back(pairwise_stage2_prompt(query, it->second, s1_plus, bundle));
  }
  const std::vector<bool> verdicts = pairwise_verdicts(prompts, top_precedents);
  std::set<DocId> out;
  for (std::size_t i = 0; i < top_precedents.size(); ++i)
    if (verdicts[i]) out.insert(top_precedents[i]);
  return out;
}

std::vector<bool> Reranker::pairwise_verdicts(const std::vector<std::string>& prompts,
                                              const std::vector<DocId>& ids) {
  const std::size_t n = prompts.size();
  std::vector<CallLog> logs(n);
  std::vector<char> verdicts(n, 0);
  std::vector<std::string> pair_warnings(n);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        logs[i] = complete_with_retry(prompts[i]);
        if (logs[i].exhausted) {
          pair_warnings[i] = "candidate '" + ids[i].str() +
                             "': empty verdict response after retries; treating as NO";
        } else if (const auto verdict = parse_verdict(logs[i].response)) {
          verdicts[i] = *verdict ? 1 : 0;
        } else {
          pair_warnings[i] = "candidate '" + ids[i].str() + "': unrecognized verdict '" +
                             clip_utf8(trim(logs[i].response), 40) + "'; treating as NO";
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(std::max(config_.max_in_flight, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // Merge in candidate order so logs are independent of completion order.
  for (std::size_t i = 0; i < n; ++i) {
    exchanges_.insert(exchanges_.end(), logs[i].exchanges.begin(), logs[i].exchanges.end());
    if (!pair_warnings[i].empty()) warnings_.push_back(pair_warnings[i]);
  }
  return std::vector<bool>(verdicts.begin(), verdicts.end());
}

std::vector<std::pair<std::string, std::string>> Reranker::take_exchanges() {
  auto out = std::move(exchanges_);
  exchanges_.clear();
  return out;
}

std::vector<std::string> Reranker::take_warnings() {
  auto out = std::move(warnings_);
  warnings_.clear();
  return out;
}

}  // namespace lexsem
