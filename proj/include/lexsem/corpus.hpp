#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// Loads queries.jsonl / statutes.jsonl / precedents.jsonl from `dir` and
/// validates the bundle: unique ids per pool, resolvable citations, splits
/// partition the query set, statute subsections carry role "none", and
/// paragraph texts reconstruct the document text up to whitespace.
///
/// Records may omit `paragraphs` (a single whole-text paragraph is derived)
/// and `sentences` (derived by default segmentation).
CorpusBundle load_corpus(const std::filesystem::path& dir);

/// Writes the three JSONL files. load_corpus(serialize_corpus(b)) == b.
void serialize_corpus(const CorpusBundle& bundle, const std::filesystem::path& dir);

/// Default segmentation: sentence boundary after '.', '?' or '!' followed
/// by whitespace and an uppercase letter.
std::vector<std::string> split_sentences(const std::string& text);

struct MaskViolation {
  std::size_t begin = 0;  // byte offset into doc.text
  std::size_t end = 0;
  std::string pattern;
  std::string matched;

  friend bool operator==(const MaskViolation&, const MaskViolation&) = default;
};

/// Matches of the given regexes against doc.text. Matches that are exactly
/// one of the placeholder tokens ([SECTION], [ACT], [PRECEDENT], [ENTITY])
/// never count.
std::vector<MaskViolation> validate_masking(const Document& doc,
                                            const std::vector<std::string>& patterns);

const std::vector<std::string>& default_masking_patterns();

/// Number of queries in the selected splits citing each candidate of the
/// task's pool. Candidates never cited map to 0.
std::map<DocId, int> candidate_frequency(const CorpusBundle& bundle, Task task,
                                         const std::set<Split>& splits);

}  // namespace lexsem
