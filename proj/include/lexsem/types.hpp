#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lexsem {

/// Identifier of a document within one pool. Non-empty, no whitespace;
/// lexicographic order is the tie-break order used throughout.
class DocId {
 public:
  DocId() = default;
  explicit DocId(std::string value);

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const DocId&, const DocId&) = default;

 private:
  std::string value_;
};

enum class DocKind { Query, Statute, Precedent };
enum class Split { Train, Val, Test };
enum class Task { Lsr, Pcr };
enum class Role { Facts, Arguments, Ruling, Other, None };

const char* to_string(DocKind kind);
const char* to_string(Split split);
const char* to_string(Task task);
const char* to_string(Role role);

std::optional<Split> split_from_string(const std::string& s);
std::optional<Task> task_from_string(const std::string& s);
std::optional<Role> role_from_string(const std::string& s);

/// (subject, action, object) phrase triple. Subject and action non-empty.
struct EventTriplet {
  std::string subject;
  std::string action;
  std::string object;

  friend bool operator==(const EventTriplet&, const EventTriplet&) = default;
};

struct Paragraph {
  std::string text;
  Role role = Role::None;

  friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

struct Document {
  DocId id;
  DocKind kind = DocKind::Query;
  std::string text;
  std::vector<Paragraph> paragraphs;
  std::vector<std::string> sentences;
  std::optional<std::string> lsr_summary;
  std::optional<std::string> pcr_summary;
  std::vector<EventTriplet> events;
  std::set<DocId> cited_statutes;
  std::set<DocId> cited_precedents;
  std::optional<Split> split;  // present iff kind == Query

  /// Gold candidate set for the given task.
  const std::set<DocId>& gold(Task task) const {
    return task == Task::Lsr ? cited_statutes : cited_precedents;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

/// Query set plus the two candidate pools. Immutable after load; safe to
/// share across threads.
struct CorpusBundle {
  std::map<DocId, Document> queries;
  std::map<DocId, Document> statutes;
  std::map<DocId, Document> precedents;

  const std::map<DocId, Document>& pool(Task task) const {
    return task == Task::Lsr ? statutes : precedents;
  }

  friend bool operator==(const CorpusBundle&, const CorpusBundle&) = default;
};

struct ScoredDoc {
  DocId id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Candidates ordered by descending score, ties by ascending DocId.
using RankedList = std::vector<ScoredDoc>;

using ScoreMap = std::map<DocId, double>;

/// Sorts a score map into a RankedList (descending score, DocId tie-break).
RankedList to_ranked(const ScoreMap& scores);

/// The ids of a ranked list, in rank order.
std::vector<DocId> ranked_ids(const RankedList& ranked);

}  // namespace lexsem
