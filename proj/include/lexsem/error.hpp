#pragma once

#include <stdexcept>
#include <string>

namespace lexsem {

/// Error categories raised by the library. Each maps to a process exit
/// code: usage errors exit 1, data errors 2, backend errors 3, internal 4.
enum class Errc {
  // corpus
  MissingFile,
  MalformedRecord,
  DanglingCitation,
  DuplicateId,
  InvalidSplit,
  InvalidPattern,
  // lexical
  EmptyCorpus,
  UnknownCandidate,
  InvalidN,
  // paragraph
  EmptyParagraphs,
  EmptyMatrix,
  // graph scoring
  MissingEmbedding,
  DimensionMismatch,
  // ensemble
  EmptyScores,
  KeyMismatch,
  AlphaOutOfRange,
  NoValidationQueries,
  NoPositives,
  Divergence,
  TaskMismatch,
  // rerank
  InvalidK,
  UnknownPositive,
  UnknownPrecedent,
  LlmTransport,
  UnparseableResponse,
  // eval
  EmptyGold,
  DegenerateDifferences,
  // cli
  Usage,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

const char* errc_name(Errc code);

/// 1 = usage, 2 = data, 3 = backend, 4 = internal.
int exit_code_for(Errc code);

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace lexsem
