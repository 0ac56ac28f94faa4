// Generates the checked-in data/demo fixture: a small corpus plus the
// embedding table and GAT weights every retrieval method can run on.
// The table covers precisely the keys the demo docs' graphs reference.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "lexsem/corpus.hpp"
#include "lexsem/graph.hpp"
#include "lexsem/types.hpp"

using namespace lexsem;
namespace fs = std::filesystem;

namespace {

Document statute(const std::string& id, const std::string& name, const std::string& body) {
  Document d;
  d.id = DocId(id);
  d.kind = DocKind::Statute;
  d.text = name + "\n" + body;
  d.paragraphs = {{name, Role::None}, {body, Role::None}};
  d.sentences = split_sentences(d.text);
  return d;
}

Document precedent(const std::string& id, const std::string& facts, const std::string& arguments,
                   const std::string& ruling, std::initializer_list<const char*> statutes) {
  Document d;
  d.id = DocId(id);
  d.kind = DocKind::Precedent;
  d.text = facts + "\n" + arguments + "\n" + ruling;
  d.paragraphs = {{facts, Role::Facts}, {arguments, Role::Arguments}, {ruling, Role::Ruling}};
  d.sentences = split_sentences(d.text);
  for (const char* s : statutes) d.cited_statutes.emplace(s);
  return d;
}

Document query(const std::string& id, Split split, const std::string& text,
               const std::string& lsr_summary, const std::string& pcr_summary,
               std::initializer_list<const char*> statutes,
               std::initializer_list<const char*> precedents) {
  Document d;
  d.id = DocId(id);
  d.kind = DocKind::Query;
  d.split = split;
  d.text = text;
  d.paragraphs = {{text, Role::Other}};
  d.sentences = split_sentences(text);
  d.lsr_summary = lsr_summary;
  d.pcr_summary = pcr_summary;
  for (const char* s : statutes) d.cited_statutes.emplace(s);
  for (const char* p : precedents) d.cited_precedents.emplace(p);
  return d;
}

CorpusBundle build_bundle() {
  CorpusBundle b;

  auto add = [&](Document d) {
    auto& pool = d.kind == DocKind::Statute    ? b.statutes
                 : d.kind == DocKind::Precedent ? b.precedents
                                                : b.queries;
    pool[d.id] = std::move(d);
  };

  add(statute("s101", "Unlawful taking of property",
              "Whoever dishonestly takes movable property from the possession of another "
              "without consent commits unlawful taking."));
  add(statute("s102", "Misappropriation of entrusted assets",
              "A person entrusted with assets who converts them to personal use commits "
              "criminal misappropriation."));
  add(statute("s103", "Deception for wrongful gain",
              "Whoever by deception induces another to deliver property or to consent to its "
              "retention obtains a wrongful gain."));
  add(statute("s104", "Falsification of records",
              "Making a false record or altering a genuine record with intent to cause injury "
              "is falsification."));
  add(statute("s105", "Intimidation to compel conduct",
              "Whoever threatens another with injury to person, reputation, or property in "
              "order to compel conduct commits intimidation."));
  add(statute("s106", "Obstruction of public officials",
              "Voluntarily obstructing a public official in the discharge of official duty is "
              "an offence."));
  b.statutes[DocId("s101")].events = {{"whoever", "takes", "property"}};
  b.statutes[DocId("s102")].events = {{"person", "converts", "assets"}};
  b.statutes[DocId("s103")].events = {{"deception", "induces", "delivery"}};

  add(precedent("p201",
                "The driver took a consignment of cloth from the warehouse of the employer and "
                "sold it in the open market.",
                "Counsel argued the taking was dishonest because the consignment never reached "
                "the consignee and the proceeds were kept.",
                "The court held the taking dishonest and also found the entrusted consignment "
                "misappropriated.",
                {"s101", "s102"}));
  add(precedent("p202",
                "An agent collected deposits from villagers promising interest and diverted the "
                "deposits to a private venture.",
                "The defence said the venture was a loan; the prosecution called it conversion "
                "of entrusted assets by deception.",
                "Conversion of the deposits was proved and the deception charge was sustained.",
                {"s102", "s103"}));
  add(precedent("p203",
                "A trader promised imported machines, accepted advance payment, and delivered "
                "crates of scrap.",
                "The advance was induced by deception as the trader never ordered any machine.",
                "Deception for wrongful gain was made out on the documents.", {"s103"}));
  add(precedent("p204",
                "A clerk altered the ledger of a cooperative and inserted a false record of "
                "repayment.",
                "The alteration was made with intent to cause injury to the society and to "
                "shield a defaulter who threatened the clerk.",
                "Falsification was established; the threats were treated as intimidation.",
                {"s104", "s105"}));
  add(precedent("p205",
                "The tenant was threatened with injury to reputation unless the premises were "
                "vacated, and furniture was taken away.",
                "The threats compelled the tenant to leave; the taking of furniture lacked "
                "consent.",
                "Both intimidation and unlawful taking were proved.", {"s101", "s105"}));
  add(precedent("p206",
                "A procession blocked the gate of a records office for an afternoon.",
                "The organisers said the gathering was peaceful; the office said duty was "
                "obstructed.",
                "Obstruction of an official in discharge of duty was found, with a nominal "
                "fine and an order to alter no record.",
                {"s104", "s106"}));
  b.precedents[DocId("p201")].events = {{"driver", "took", "consignment"},
                                        {"driver", "sold", "cloth"}};
  b.precedents[DocId("p202")].events = {{"agent", "diverted", "deposits"}};
  b.precedents[DocId("p203")].events = {{"trader", "accepted", "payment"},
                                        {"trader", "delivered", "scrap"}};

  add(query("q301", Split::Train,
            "[NAME] was employed to carry goods and instead took the goods to a market and "
            "sold them. The proceeds were converted to personal use despite the entrusted "
            "arrangement.",
            "Employee took entrusted goods and converted the proceeds.",
            "Carrier sold the employer's goods in the market.", {"s101", "s102"}, {"p201"}));
  add(query("q302", Split::Train,
            "[NAME] induced villagers to deliver savings by deception, promising returns that "
            "were never paid.",
            "Deception induced delivery of savings.",
            "Deposits were collected on false promises and diverted.", {"s103"},
            {"p202", "p203"}));
  add(query("q303", Split::Train,
            "A false record was inserted in the register of [ORG], and the keeper was "
            "threatened with injury to make the alteration.",
            "False record made under threats of injury.",
            "Register alteration compelled by intimidation.", {"s104", "s105"}, {"p204"}));
  add(query("q304", Split::Val,
            "[NAME] took movable property from the house of [NAME] without consent while the "
            "owner was away.",
            "Taking of movable property without consent.",
            "Property removed from a house without consent.", {"s101"}, {"p201", "p205"}));
  add(query("q305", Split::Val,
            "Assets entrusted to a manager were converted to personal use, and the books were "
            "arranged by deception to hide the conversion.",
            "Entrusted assets converted and hidden by deception.",
            "Manager diverted entrusted assets.", {"s102", "s103"}, {"p202"}));
  add(query("q306", Split::Val,
            "[NAME] threatened the shopkeeper with injury to reputation to compel the signing "
            "of a blank paper.",
            "Threats of injury compelled conduct.",
            "Shopkeeper coerced by threats to sign papers.", {"s105"}, {"p204", "p205"}));
  add(query("q307", Split::Test,
            "The accused took a parcel of cloth by deception, inducing the carrier to deliver "
            "it against a forged receipt, and kept the property without consent.",
            "Taking by deception of delivered property.",
            "Parcel obtained from a carrier on a forged receipt.", {"s101", "s103"},
            {"p201", "p203"}));
  add(query("q308", Split::Test,
            "Funds entrusted for a festival were converted to personal use by the treasurer "
            "of [ORG].",
            "Treasurer converted entrusted funds.",
            "Festival funds diverted by the treasurer.", {"s102"}, {"p202"}));
  add(query("q309", Split::Test,
            "A genuine record was altered with intent to cause injury, and the clerk who "
            "noticed it was threatened with injury to person.",
            "Record altered and the witness intimidated.",
            "Ledger altered; objecting clerk threatened.", {"s104", "s105"},
            {"p204", "p205"}));
  b.queries[DocId("q301")].events = {{"employee", "took", "goods"},
                                     {"employee", "converted", "proceeds"}};
  b.queries[DocId("q302")].events = {{"deception", "induces", "delivery"}};
  b.queries[DocId("q303")].events = {{"keeper", "inserted", "record"}};
  b.queries[DocId("q307")].events = {{"accused", "took", "parcel"},
                                     {"deception", "induces", "delivery"}};
  b.queries[DocId("q308")].events = {{"treasurer", "converted", "funds"}};
  return b;
}

void collect_keys(const Document& d, std::set<std::string>* keys) {
  for (const char* field : {"full", "lsr_summary", "pcr_summary"})
    keys->insert(d.id.str() + ":" + field);
  for (const DocGraph& g : {build_event_graph(d, {}), build_para_graph(d)}) {
    for (const auto& node : g.nodes) keys->insert(node.text_key);
    for (const auto& edge : g.edges) keys->insert(edge.label_key);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_demo <out_dir>\n";
    return 1;
  }
  fs::path out = argv[1];
  fs::create_directories(out);

  CorpusBundle bundle = build_bundle();
  serialize_corpus(bundle, out);

  std::set<std::string> keys;
  for (const auto& pool : {&bundle.queries, &bundle.statutes, &bundle.precedents})
    for (const auto& [id, doc] : *pool) collect_keys(doc, &keys);

  const int dim = 8;
  EmbeddingTable::random_init(keys, dim, 7).save(out / "embeddings.json");
  GatWeights::random_init(dim, dim, dim, 7).save(out / "weights.json");
  std::cout << "wrote " << bundle.queries.size() << " queries, " << bundle.statutes.size()
            << " statutes, " << bundle.precedents.size() << " precedents, " << keys.size()
            << " embedding keys to " << out.string() << "\n";
  return 0;
}
