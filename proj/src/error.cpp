#include "lexsem/error.hpp"

namespace lexsem {

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::DanglingCitation: return "DanglingCitation";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::InvalidSplit: return "InvalidSplit";
    case Errc::InvalidPattern: return "InvalidPattern";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownCandidate: return "UnknownCandidate";
    case Errc::InvalidN: return "InvalidN";
    case Errc::EmptyParagraphs: return "EmptyParagraphs";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::MissingEmbedding: return "MissingEmbedding";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyScores: return "EmptyScores";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::AlphaOutOfRange: return "AlphaOutOfRange";
    case Errc::NoValidationQueries: return "NoValidationQueries";
    case Errc::NoPositives: return "NoPositives";
    case Errc::Divergence: return "Divergence";
    case Errc::TaskMismatch: return "TaskMismatch";
    case Errc::InvalidK: return "InvalidK";
    case Errc::UnknownPositive: return "UnknownPositive";
    case Errc::UnknownPrecedent: return "UnknownPrecedent";
    case Errc::LlmTransport: return "LlmTransport";
    case Errc::UnparseableResponse: return "UnparseableResponse";
    case Errc::EmptyGold: return "EmptyGold";
    case Errc::DegenerateDifferences: return "DegenerateDifferences";
    case Errc::Usage: return "Usage";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Usage:
    case Errc::InvalidN:
    case Errc::InvalidK:
    case Errc::AlphaOutOfRange:
      return 1;
    case Errc::LlmTransport:
    case Errc::UnparseableResponse:
      return 3;
    case Errc::Internal:
      return 4;
    default:
      return 2;
  }
}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace lexsem
