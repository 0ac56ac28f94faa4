#include "lexsem/corpus.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <unordered_set>

#include <json.hpp>

#include "lexsem/error.hpp"
#include "lexsem/util.hpp"

namespace lexsem {
namespace {

using nlohmann::json;

[[noreturn]] void bad_record(const std::string& file, std::size_t line, const std::string& what) {
  fail(Errc::MalformedRecord, file + ":" + std::to_string(line) + ": " + what);
}

std::string want_string(const json& rec, const char* key, const std::string& file,
                        std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    bad_record(file, line, std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

std::set<DocId> read_id_set(const json& rec, const char* key, const std::string& file,
                            std::size_t line) {
  std::set<DocId> out;
  auto it = rec.find(key);
  if (it == rec.end()) return out;
  if (!it->is_array()) bad_record(file, line, std::string("field '") + key + "' is not an array");
  for (const auto& v : *it) {
    if (!v.is_string()) bad_record(file, line, std::string("non-string id in '") + key + "'");
    out.emplace(v.get<std::string>());
  }
  return out;
}

Document parse_document(const json& rec, DocKind kind, const std::string& file,
                        std::size_t line) {
  Document doc;
  doc.kind = kind;
  doc.id = DocId(want_string(rec, "id", file, line));
  doc.text = want_string(rec, "text", file, line);

  if (auto it = rec.find("paragraphs"); it != rec.end()) {
    if (!it->is_array()) bad_record(file, line, "'paragraphs' is not an array");
    for (const auto& p : *it) {
      if (!p.is_object() || !p.contains("text") || !p["text"].is_string())
        bad_record(file, line, "paragraph without string 'text'");
      Paragraph para;
      para.text = p["text"].get<std::string>();
      if (para.text.empty()) bad_record(file, line, "empty paragraph text");
      if (auto role = p.find("role"); role != p.end()) {
        if (!role->is_string()) bad_record(file, line, "non-string paragraph role");
        auto parsed = role_from_string(role->get<std::string>());
        if (!parsed)
          bad_record(file, line, "unknown paragraph role '" + role->get<std::string>() + "'");
        para.role = *parsed;
      }
      doc.paragraphs.push_back(std::move(para));
    }
    // Paragraphs must tile the document text (whitespace aside).
    std::string joined;
    for (const auto& p : doc.paragraphs) {
      if (!joined.empty()) joined += ' ';
      joined += p.text;
    }
    if (normalize_whitespace(joined) != normalize_whitespace(doc.text))
      bad_record(file, line, "paragraphs do not reconstruct document text");
  } else if (!doc.text.empty()) {
    doc.paragraphs.push_back({doc.text, kind == DocKind::Statute ? Role::None : Role::Other});
  }

  if (kind == DocKind::Statute) {
    for (const auto& p : doc.paragraphs)
      if (p.role != Role::None)
        bad_record(file, line, "statute subsection with role other than 'none'");
  }

  if (auto it = rec.find("sentences"); it != rec.end()) {
    if (!it->is_array()) bad_record(file, line, "'sentences' is not an array");
    for (const auto& s : *it) {
      if (!s.is_string()) bad_record(file, line, "non-string sentence");
      doc.sentences.push_back(s.get<std::string>());
    }
  } else {
    doc.sentences = split_sentences(doc.text);
  }

  if (auto it = rec.find("lsr_summary"); it != rec.end()) {
    if (!it->is_string()) bad_record(file, line, "non-string 'lsr_summary'");
    doc.lsr_summary = it->get<std::string>();
  }
  if (auto it = rec.find("pcr_summary"); it != rec.end()) {
    if (!it->is_string()) bad_record(file, line, "non-string 'pcr_summary'");
    doc.pcr_summary = it->get<std::string>();
  }

  if (auto it = rec.find("events"); it != rec.end()) {
    if (!it->is_array()) bad_record(file, line, "'events' is not an array");
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string() ||
          !e[2].is_string())
        bad_record(file, line, "event is not a [subject, action, object] string triple");
      EventTriplet t{e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()};
      if (t.subject.empty() || t.action.empty())
        bad_record(file, line, "event with empty subject or action");
      doc.events.push_back(std::move(t));
    }
  }

  doc.cited_statutes = read_id_set(rec, "cited_statutes", file, line);
  doc.cited_precedents = read_id_set(rec, "cited_precedents", file, line);

  if (auto it = rec.find("split"); it != rec.end()) {
    if (kind != DocKind::Query)
      fail(Errc::InvalidSplit, file + ":" + std::to_string(line) + ": split on non-query '" +
                                   doc.id.str() + "'");
    if (!it->is_string()) bad_record(file, line, "non-string 'split'");
    doc.split = split_from_string(it->get<std::string>());
    if (!doc.split)
      fail(Errc::InvalidSplit, file + ":" + std::to_string(line) + ": unknown split '" +
                                   it->get<std::string>() + "'");
  } else if (kind == DocKind::Query) {
    fail(Errc::InvalidSplit,
         file + ":" + std::to_string(line) + ": query '" + doc.id.str() + "' without split");
  }

  if (kind == DocKind::Statute && (!doc.cited_statutes.empty() || !doc.cited_precedents.empty()))
    bad_record(file, line, "statute with citations");
  if (kind == DocKind::Precedent && !doc.cited_precedents.empty())
    bad_record(file, line, "precedent citing precedents");

  return doc;
}

std::map<DocId, Document> load_pool(const std::filesystem::path& path, DocKind kind) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingFile, "cannot open " + path.string());
  const std::string file = path.filename().string();
  std::map<DocId, Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      bad_record(file, lineno, e.what());
    }
    if (!rec.is_object()) bad_record(file, lineno, "record is not a JSON object");
    Document doc;
    try {
      doc = parse_document(rec, kind, file, lineno);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      bad_record(file, lineno, e.what());
    }
    DocId id = doc.id;
    if (!docs.emplace(id, std::move(doc)).second)
      fail(Errc::DuplicateId,
           file + ":" + std::to_string(lineno) + ": duplicate id '" + id.str() + "'");
  }
  return docs;
}

void check_citations(const std::map<DocId, Document>& from,
                     const std::set<DocId> Document::*field,
                     const std::map<DocId, Document>& into) {
  for (const auto& [id, doc] : from)
    for (const auto& cited : doc.*field)
      if (!into.count(cited))
        fail(Errc::DanglingCitation, "'" + id.str() + "' cites unknown '" + cited.str() + "'");
}

json document_to_json(const Document& doc) {
  json rec;
  rec["id"] = doc.id.str();
  rec["text"] = doc.text;
  json paras = json::array();
  for (const auto& p : doc.paragraphs)
    paras.push_back({{"text", p.text}, {"role", to_string(p.role)}});
  rec["paragraphs"] = std::move(paras);
  rec["sentences"] = doc.sentences;
  if (doc.lsr_summary) rec["lsr_summary"] = *doc.lsr_summary;
  if (doc.pcr_summary) rec["pcr_summary"] = *doc.pcr_summary;
  json events = json::array();
  for (const auto& e : doc.events) events.push_back({e.subject, e.action, e.object});
  rec["events"] = std::move(events);
  json cs = json::array();
  for (const auto& id : doc.cited_statutes) cs.push_back(id.str());
  rec["cited_statutes"] = std::move(cs);
  json cp = json::array();
  for (const auto& id : doc.cited_precedents) cp.push_back(id.str());
  rec["cited_precedents"] = std::move(cp);
  if (doc.split) rec["split"] = to_string(*doc.split);
  return rec;
}

std::string pool_to_jsonl(const std::map<DocId, Document>& docs) {
  std::string out;
  for (const auto& [id, doc] : docs) {
    out += document_to_json(doc).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

CorpusBundle load_corpus(const std::filesystem::path& dir) {
  CorpusBundle bundle;
  bundle.queries = load_pool(dir / "queries.jsonl", DocKind::Query);
  bundle.statutes = load_pool(dir / "statutes.jsonl", DocKind::Statute);
  bundle.precedents = load_pool(dir / "precedents.jsonl", DocKind::Precedent);
  if (bundle.queries.empty()) fail(Errc::EmptyCorpus, "no queries in " + dir.string());
  check_citations(bundle.queries, &Document::cited_statutes, bundle.statutes);
  check_citations(bundle.queries, &Document::cited_precedents, bundle.precedents);
  check_citations(bundle.precedents, &Document::cited_statutes, bundle.statutes);
  return bundle;
}

void serialize_corpus(const CorpusBundle& bundle, const std::filesystem::path& dir) {
  atomic_write_file(dir / "queries.jsonl", pool_to_jsonl(bundle.queries));
  atomic_write_file(dir / "statutes.jsonl", pool_to_jsonl(bundle.statutes));
  atomic_write_file(dir / "precedents.jsonl", pool_to_jsonl(bundle.precedents));
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    cur += text[i];
    if (text[i] == '.' || text[i] == '?' || text[i] == '!') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i + 1 && j < text.size() && std::isupper(static_cast<unsigned char>(text[j]))) {
        std::string s = trim(cur);
        if (!s.empty()) out.push_back(std::move(s));
        cur.clear();
        i = j - 1;
      }
    }
  }
  std::string s = trim(cur);
  if (!s.empty()) out.push_back(std::move(s));
  return out;
}

std::vector<MaskViolation> validate_masking(const Document& doc,
                                            const std::vector<std::string>& patterns) {
  static const std::unordered_set<std::string> placeholders = {"[SECTION]", "[ACT]",
                                                               "[PRECEDENT]", "[ENTITY]"};
  std::vector<MaskViolation> out;
  for (const auto& pattern : patterns) {
    std::regex re;
    try {
      re.assign(pattern);
    } catch (const std::regex_error& e) {
      fail(Errc::InvalidPattern, "bad pattern '" + pattern + "': " + e.what());
    }
    for (auto it = std::sregex_iterator(doc.text.begin(), doc.text.end(), re);
         it != std::sregex_iterator(); ++it) {
      std::string matched = it->str();
      if (placeholders.count(matched)) continue;
      auto begin = static_cast<std::size_t>(it->position());
      out.push_back({begin, begin + matched.size(), pattern, std::move(matched)});
    }
  }
  return out;
}

const std::vector<std::string>& default_masking_patterns() {
  static const std::vector<std::string> patterns = {R"(Section \d+)", R"(Article \d+)",
                                                    R"(\bv\.\b.*\d{4})"};
  return patterns;
}

std::map<DocId, int> candidate_frequency(const CorpusBundle& bundle, Task task,
                                         const std::set<Split>& splits) {
  if (splits.empty()) fail(Errc::Usage, "candidate_frequency: no splits selected");
  std::map<DocId, int> freq;
  for (const auto& [id, doc] : bundle.pool(task)) freq[id] = 0;
  for (const auto& [qid, q] : bundle.queries) {
    if (!q.split || !splits.count(*q.split)) continue;
    for (const auto& id : q.gold(task)) {
      auto it = freq.find(id);
      if (it != freq.end()) ++it->second;
    }
  }
  return freq;
}

}  // namespace lexsem
