#include "lexsem/lexical.hpp"

#include <cmath>

#include <json.hpp>

#include "lexsem/error.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

using nlohmann::json;

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

// Length of a [UPPERCASE] placeholder starting at i, or 0.
std::size_t placeholder_len(std::string_view text, std::size_t i) {
  if (text[i] != '[') return 0;
  std::size_t j = i + 1;
  while (j < text.size() && text[j] >= 'A' && text[j] <= 'Z') ++j;
  if (j == i + 1 || j >= text.size() || text[j] != ']') return 0;
  return j - i + 1;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size();) {
    if (std::size_t len = placeholder_len(text, i); len != 0) {
      flush();
      tokens.emplace_back(text.substr(i, len));
      i += len;
      continue;
    }
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_token_char(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                         : static_cast<char>(c));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
  if (n < 1) fail(Errc::InvalidN, "n-gram size " + std::to_string(n));
  std::vector<std::string> out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
      gram += ' ';
      gram += tokens[i + j];
    }
    out.push_back(std::move(gram));
  }
  return out;
}

std::vector<std::string> document_terms(std::string_view text, const Bm25Config& config) {
  std::vector<std::string> tokens = tokenize(text);
  std::vector<std::string> terms;
  for (int n : config.ngram_sizes) {
    auto grams = ngrams(tokens, n);
    terms.insert(terms.end(), std::make_move_iterator(grams.begin()),
                 std::make_move_iterator(grams.end()));
  }
  return terms;
}

Bm25Index Bm25Index::build(const std::map<DocId, std::string>& texts, const Bm25Config& config) {
  if (texts.empty()) fail(Errc::EmptyCorpus, "no documents to index");
  Bm25Index index;
  index.config_ = config;

  std::int64_t total_len = 0;
  for (const auto& [id, text] : texts) {
    auto terms = document_terms(text, config);
    index.doc_lens_[id] = static_cast<std::int64_t>(terms.size());
    total_len += static_cast<std::int64_t>(terms.size());
    for (auto& term : terms) ++index.postings_[term][id];
  }
  index.avg_len_ =
      static_cast<double>(total_len) / static_cast<double>(texts.size());

  const double max_df = config.max_df_ratio * static_cast<double>(texts.size());
  for (auto it = index.postings_.begin(); it != index.postings_.end();) {
    auto df = static_cast<double>(it->second.size());
    if (df < config.min_df || df > max_df)
      it = index.postings_.erase(it);
    else
      ++it;
  }
  return index;
}

double Bm25Index::idf(const std::string& term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return 0.0;
  auto df = static_cast<double>(it->second.size());
  auto n = static_cast<double>(doc_lens_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

int Bm25Index::df(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : static_cast<int>(it->second.size());
}

std::int64_t Bm25Index::doc_len(const DocId& id) const {
  auto it = doc_lens_.find(id);
  if (it == doc_lens_.end()) fail(Errc::UnknownCandidate, id.str());
  return it->second;
}

std::vector<DocId> Bm25Index::doc_ids() const {
  std::vector<DocId> ids;
  ids.reserve(doc_lens_.size());
  for (const auto& [id, len] : doc_lens_) ids.push_back(id);
  return ids;
}

RankedList Bm25Index::rank(std::string_view query_text, const std::vector<DocId>* subset) const {
  ScoreMap scores;
  if (subset) {
    for (const auto& id : *subset) {
      if (!doc_lens_.count(id)) fail(Errc::UnknownCandidate, id.str());
      scores[id] = 0.0;
    }
  } else {
    for (const auto& [id, len] : doc_lens_) scores[id] = 0.0;
  }

  // Query side is a term set: each distinct term contributes once.
  std::set<std::string> terms;
  for (auto& term : document_terms(query_text, config_)) terms.insert(std::move(term));

  const double k1 = config_.k1;
  const double b = config_.b;
  for (const auto& term : terms) {
    auto post = postings_.find(term);
    if (post == postings_.end()) continue;
    const double idf_t = idf(term);
    for (auto& [id, score] : scores) {
      auto tf_it = post->second.find(id);
      if (tf_it == post->second.end()) continue;
      const double tf = tf_it->second;
      const double len = static_cast<double>(doc_lens_.at(id));
      const double denom = tf + k1 * (1.0 - b + b * len / avg_len_);
      score += idf_t * tf * (k1 + 1.0) / denom;
    }
  }
  return to_ranked(scores);
}

void Bm25Index::save(const std::filesystem::path& path) const {
  json j;
  j["version"] = 1;
  j["kind"] = "bm25-index";
  j["config"] = {{"k1", config_.k1},
                 {"b", config_.b},
                 {"min_df", config_.min_df},
                 {"max_df_ratio", config_.max_df_ratio},
                 {"ngram_sizes", config_.ngram_sizes}};
  json lens = json::object();
  for (const auto& [id, len] : doc_lens_) lens[id.str()] = len;
  j["doc_lens"] = std::move(lens);
  j["avg_len"] = avg_len_;
  json postings = json::object();
  for (const auto& [term, tfs] : postings_) {
    json row = json::object();
    for (const auto& [id, tf] : tfs) row[id.str()] = tf;
    postings[term] = std::move(row);
  }
  j["postings"] = std::move(postings);
  atomic_write_file(path, j.dump());
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "bm25-index")
      fail(Errc::MalformedRecord, path.string() + ": not a version-1 bm25-index");
    Bm25Index index;
    const auto& c = j.at("config");
    index.config_.k1 = c.at("k1").get<double>();
    index.config_.b = c.at("b").get<double>();
    index.config_.min_df = c.at("min_df").get<int>();
    index.config_.max_df_ratio = c.at("max_df_ratio").get<double>();
    index.config_.ngram_sizes = c.at("ngram_sizes").get<std::vector<int>>();
    for (const auto& [id, len] : j.at("doc_lens").items())
      index.doc_lens_[DocId(id)] = len.get<std::int64_t>();
    index.avg_len_ = j.at("avg_len").get<double>();
    for (const auto& [term, row] : j.at("postings").items()) {
      auto& tfs = index.postings_[term];
      for (const auto& [id, tf] : row.items()) tfs[DocId(id)] = tf.get<int>();
    }
    return index;
  } catch (const json::exception& e) {
    fail(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::set<std::string> event_vocab(const std::map<DocId, Document>& docs) {
  std::set<std::string> vocab;
  for (const auto& [id, doc] : docs) {
    for (const auto& e : doc.events) {
      for (const auto* part : {&e.subject, &e.action, &e.object})
        for (auto& token : tokenize(*part)) vocab.insert(std::move(token));
    }
  }
  return vocab;
}

std::string filter_by_events(const Document& doc, const std::set<std::string>& opposing_vocab) {
  if (doc.events.empty()) return doc.text;
  std::set<std::string> own;
  for (const auto& e : doc.events) {
    for (const auto* part : {&e.subject, &e.action, &e.object})
      for (auto& token : tokenize(*part)) own.insert(std::move(token));
  }
  std::string out;
  for (const auto& sentence : doc.sentences) {
    bool hits_own = false, hits_opposing = false;
    for (const auto& token : tokenize(sentence)) {
      hits_own = hits_own || own.count(token) != 0;
      hits_opposing = hits_opposing || opposing_vocab.count(token) != 0;
      if (hits_own && hits_opposing) break;
    }
    if (hits_own && hits_opposing) {
      if (!out.empty()) out += '\n';
      out += sentence;
    }
  }
  return out;
}

}  // namespace lexsem
