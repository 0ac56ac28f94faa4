#include <doctest.h>

#include <filesystem>
#include <string>

#include "lexsem/corpus.hpp"
#include "lexsem/error.hpp"
#include "lexsem/util.hpp"

using namespace lexsem;
namespace fs = std::filesystem;

namespace {

// Writes the three pool files into a fresh temp dir and returns its path.
fs::path write_corpus(const std::string& queries, const std::string& statutes,
                      const std::string& precedents) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / ("lexsem_corpus_" + std::to_string(counter++));
  fs::create_directories(dir);
  atomic_write_file(dir / "queries.jsonl", queries);
  atomic_write_file(dir / "statutes.jsonl", statutes);
  atomic_write_file(dir / "precedents.jsonl", precedents);
  return dir;
}

const char* kQueries =
    R"({"id":"q1","text":"The accused stole a car. The court convicted him.","split":"train","cited_statutes":["s1"],"cited_precedents":["p1"],"events":[["accused","stole","car"]]})"
    "\n"
    R"({"id":"q2","text":"A contract dispute arose.","split":"val","cited_statutes":["s2"],"cited_precedents":[]})"
    "\n"
    R"({"id":"q3","text":"Another theft case.","split":"test","cited_statutes":["s1"],"cited_precedents":["p1"]})"
    "\n";

const char* kStatutes =
    R"({"id":"s1","text":"Theft. Whoever takes property commits theft.","paragraphs":[{"text":"Theft.","role":"none"},{"text":"Whoever takes property commits theft.","role":"none"}]})"
    "\n"
    R"({"id":"s2","text":"Contracts must be honoured."})"
    "\n";

const char* kPrecedents =
    R"({"id":"p1","text":"The appellant took a vehicle. He was convicted.","cited_statutes":["s1"],"paragraphs":[{"text":"The appellant took a vehicle.","role":"facts"},{"text":"He was convicted.","role":"ruling"}]})"
    "\n";

Errc load_error(const fs::path& dir) {
  try {
    load_corpus(dir);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected load_corpus to throw");
  return Errc::Internal;
}

}  // namespace

TEST_CASE("load_corpus reads all pools and derives defaults") {
  auto dir = write_corpus(kQueries, kStatutes, kPrecedents);
  CorpusBundle b = load_corpus(dir);
  CHECK(b.queries.size() == 3);
  CHECK(b.statutes.size() == 2);
  CHECK(b.precedents.size() == 1);

  const Document& q1 = b.queries.at(DocId("q1"));
  CHECK(q1.kind == DocKind::Query);
  CHECK(q1.split == Split::Train);
  CHECK(q1.cited_statutes == std::set<DocId>{DocId("s1")});
  CHECK(q1.events.size() == 1);
  CHECK(q1.events[0].action == "stole");
  // No explicit sentences: default segmentation applies.
  REQUIRE(q1.sentences.size() == 2);
  CHECK(q1.sentences[0] == "The accused stole a car.");
  CHECK(q1.sentences[1] == "The court convicted him.");
  // No explicit paragraphs: the whole text becomes one paragraph.
  REQUIRE(q1.paragraphs.size() == 1);
  CHECK(q1.paragraphs[0].text == q1.text);

  const Document& s2 = b.statutes.at(DocId("s2"));
  REQUIRE(s2.paragraphs.size() == 1);
  CHECK(s2.paragraphs[0].role == Role::None);

  const Document& p1 = b.precedents.at(DocId("p1"));
  CHECK(p1.paragraphs[0].role == Role::Facts);
  CHECK(p1.paragraphs[1].role == Role::Ruling);
  CHECK(p1.cited_statutes == std::set<DocId>{DocId("s1")});
}

TEST_CASE("serialize then load is the identity") {
  auto dir = write_corpus(kQueries, kStatutes, kPrecedents);
  CorpusBundle b = load_corpus(dir);
  fs::path out = dir / "roundtrip";
  serialize_corpus(b, out);
  CorpusBundle again = load_corpus(out);
  CHECK(again == b);
}

TEST_CASE("gold sets select the task's citations") {
  auto dir = write_corpus(kQueries, kStatutes, kPrecedents);
  CorpusBundle b = load_corpus(dir);
  const Document& q1 = b.queries.at(DocId("q1"));
  CHECK(q1.gold(Task::Lsr) == q1.cited_statutes);
  CHECK(q1.gold(Task::Pcr) == q1.cited_precedents);
  CHECK(b.pool(Task::Lsr).size() == 2);
  CHECK(b.pool(Task::Pcr).size() == 1);
}

TEST_CASE("validation failures map to their error codes") {
  SUBCASE("missing file") {
    fs::path dir = fs::temp_directory_path() / "lexsem_missing";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK(load_error(dir) == Errc::MissingFile);
  }
  SUBCASE("duplicate id") {
    auto dir = write_corpus(kQueries, std::string(kStatutes) + R"({"id":"s1","text":"Again."})" + "\n",
                            kPrecedents);
    CHECK(load_error(dir) == Errc::DuplicateId);
  }
  SUBCASE("dangling query citation") {
    auto dir = write_corpus(
        R"({"id":"q1","text":"T.","split":"train","cited_statutes":["nope"]})" "\n", kStatutes,
        kPrecedents);
    CHECK(load_error(dir) == Errc::DanglingCitation);
  }
  SUBCASE("dangling precedent citation") {
    auto dir = write_corpus(kQueries, kStatutes,
                            R"({"id":"p1","text":"T.","cited_statutes":["ghost"]})" "\n");
    CHECK(load_error(dir) == Errc::DanglingCitation);
  }
  SUBCASE("query without split") {
    auto dir = write_corpus(R"({"id":"q1","text":"T."})" "\n", kStatutes, kPrecedents);
    CHECK(load_error(dir) == Errc::InvalidSplit);
  }
  SUBCASE("split on a statute") {
    auto dir =
        write_corpus(kQueries, R"({"id":"s1","text":"T.","split":"train"})" "\n"
                               R"({"id":"s2","text":"U."})" "\n",
                     kPrecedents);
    CHECK(load_error(dir) == Errc::InvalidSplit);
  }
  SUBCASE("unknown split value") {
    auto dir = write_corpus(R"({"id":"q1","text":"T.","split":"dev"})" "\n", kStatutes, kPrecedents);
    CHECK(load_error(dir) == Errc::InvalidSplit);
  }
  SUBCASE("broken json line") {
    auto dir = write_corpus("{not json\n", kStatutes, kPrecedents);
    CHECK(load_error(dir) == Errc::MalformedRecord);
  }
  SUBCASE("event without three elements") {
    auto dir = write_corpus(
        R"({"id":"q1","text":"T.","split":"train","events":[["a","b"]]})" "\n", kStatutes,
        kPrecedents);
    CHECK(load_error(dir) == Errc::MalformedRecord);
  }
  SUBCASE("paragraphs that do not reconstruct the text") {
    auto dir = write_corpus(
        R"({"id":"q1","text":"One two.","split":"train","paragraphs":[{"text":"Something else."}]})"
        "\n",
        kStatutes, kPrecedents);
    CHECK(load_error(dir) == Errc::MalformedRecord);
  }
  SUBCASE("statute subsection with a rhetorical role") {
    auto dir = write_corpus(
        kQueries, R"({"id":"s1","text":"T.","paragraphs":[{"text":"T.","role":"facts"}]})" "\n"
                  R"({"id":"s2","text":"U."})" "\n",
        kPrecedents);
    CHECK(load_error(dir) == Errc::MalformedRecord);
  }
  SUBCASE("statute with citations") {
    auto dir = write_corpus(kQueries,
                            R"({"id":"s1","text":"T.","cited_statutes":["s2"]})" "\n"
                            R"({"id":"s2","text":"U."})" "\n",
                            kPrecedents);
    CHECK(load_error(dir) == Errc::MalformedRecord);
  }
  SUBCASE("no queries at all") {
    auto dir = write_corpus("", kStatutes, kPrecedents);
    CHECK(load_error(dir) == Errc::EmptyCorpus);
  }
}

TEST_CASE("paragraph reconstruction tolerates whitespace differences") {
  auto dir = write_corpus(
    R"({"id":"q1","text":"One  two.\nThree four.","split":"train","paragraphs":[{"text":"One two."},{"text":"Three  four."}]})"
    "\n",
    kStatutes, kPrecedents);
  CorpusBundle b = load_corpus(dir);
  CHECK(b.queries.at(DocId("q1")).paragraphs.size() == 2);
}

TEST_CASE("split_sentences breaks after terminators followed by uppercase") {
  auto got = split_sentences("The dog ran. It barked? Loudly! Then it slept. and woke.");
  REQUIRE(got.size() == 4);
  CHECK(got[0] == "The dog ran.");
  CHECK(got[1] == "It barked?");
  CHECK(got[2] == "Loudly!");
  // Lowercase continuation does not split.
  CHECK(got[3] == "Then it slept. and woke.");
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("No terminator here") ==
        std::vector<std::string>{"No terminator here"});
}

TEST_CASE("validate_masking flags raw references but never placeholders") {
  Document doc;
  doc.id = DocId("d");
  doc.text = "Under Section 42 and [SECTION], see Smith v.Jones 1999.";
  auto violations = validate_masking(doc, default_masking_patterns());
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].matched == "Section 42");
  CHECK(violations[0].begin == 6);
  CHECK(violations[0].end == 16);
  CHECK(doc.text.substr(violations[0].begin, violations[0].end - violations[0].begin) ==
        "Section 42");
  CHECK(violations[1].matched == "v.Jones 1999");

  doc.text = "under [SECTION] of [ACT]";
  CHECK(validate_masking(doc, default_masking_patterns()).empty());
  CHECK(validate_masking(doc, {}).empty());

  // A pattern that matches the placeholder itself is skipped for known
  // placeholders only.
  doc.text = "[SECTION] and [FOO] here";
  auto v2 = validate_masking(doc, {R"(\[[A-Z]+\])"});
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].matched == "[FOO]");

  CHECK_THROWS_AS(validate_masking(doc, {"("}), Error);
  try {
    validate_masking(doc, {"("});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidPattern);
  }
}

TEST_CASE("candidate_frequency counts gold citations per split") {
  auto dir = write_corpus(kQueries, kStatutes, kPrecedents);
  CorpusBundle b = load_corpus(dir);

  auto all = candidate_frequency(b, Task::Lsr, {Split::Train, Split::Val, Split::Test});
  CHECK(all.at(DocId("s1")) == 2);
  CHECK(all.at(DocId("s2")) == 1);

  auto train_only = candidate_frequency(b, Task::Lsr, {Split::Train});
  CHECK(train_only.at(DocId("s1")) == 1);
  CHECK(train_only.at(DocId("s2")) == 0);  // never cited in train, still present

  auto pcr = candidate_frequency(b, Task::Pcr, {Split::Train, Split::Test});
  CHECK(pcr.at(DocId("p1")) == 2);

  CHECK_THROWS_AS(candidate_frequency(b, Task::Lsr, {}), Error);
}
