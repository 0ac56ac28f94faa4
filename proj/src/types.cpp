#include "lexsem/types.hpp"

#include <algorithm>
#include <cctype>

#include "lexsem/error.hpp"

namespace lexsem {

DocId::DocId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) fail(Errc::MalformedRecord, "empty document id");
  for (char c : value_) {
    if (std::isspace(static_cast<unsigned char>(c)))
      fail(Errc::MalformedRecord, "whitespace in document id: '" + value_ + "'");
  }
}

const char* to_string(DocKind kind) {
  switch (kind) {
    case DocKind::Query: return "query";
    case DocKind::Statute: return "statute";
    case DocKind::Precedent: return "precedent";
  }
  return "?";
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

const char* to_string(Task task) { return task == Task::Lsr ? "lsr" : "pcr"; }

const char* to_string(Role role) {
  switch (role) {
    case Role::Facts: return "facts";
    case Role::Arguments: return "arguments";
    case Role::Ruling: return "ruling";
    case Role::Other: return "other";
    case Role::None: return "none";
  }
  return "?";
}

std::optional<Split> split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

std::optional<Task> task_from_string(const std::string& s) {
  if (s == "lsr") return Task::Lsr;
  if (s == "pcr") return Task::Pcr;
  return std::nullopt;
}

std::optional<Role> role_from_string(const std::string& s) {
  if (s == "facts") return Role::Facts;
  if (s == "arguments") return Role::Arguments;
  if (s == "ruling") return Role::Ruling;
  if (s == "other") return Role::Other;
  if (s == "none") return Role::None;
  return std::nullopt;
}

RankedList to_ranked(const ScoreMap& scores) {
  RankedList out;
  out.reserve(scores.size());
  for (const auto& [id, score] : scores) out.push_back({id, score});
  std::stable_sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

std::vector<DocId> ranked_ids(const RankedList& ranked) {
  std::vector<DocId> ids;
  ids.reserve(ranked.size());
  for (const auto& sd : ranked) ids.push_back(sd.id);
  return ids;
}

}  // namespace lexsem
