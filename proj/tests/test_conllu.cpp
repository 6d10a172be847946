#include <doctest.h>

#include <fstream>
#include <sstream>

#include "selpref/conllu.hpp"
#include "selpref/io.hpp"
#include "selpref/rng.hpp"
#include "test_util.hpp"

using namespace selpref;

namespace {

Sentence parse_one(const std::string& text) {
  std::istringstream in(text);
  auto sentences = parse_conllu(in);
  REQUIRE(sentences.size() == 1);
  return sentences.front();
}

}  // namespace

TEST_CASE("two-line block maps fields directly") {
  Sentence s = parse_one(
      "1\tTitanic\tTitanic\tPROPN\t_\t_\t2\tnsubj\t2:nsubj\t_\n"
      "2\tsank\tsink\tVERB\t_\t_\t0\troot\t0:root\t_\n\n");
  REQUIRE(s.tokens.size() == 2);
  CHECK(s.tokens[0].form == "Titanic");
  CHECK(s.tokens[0].head == 2);
  CHECK(s.tokens[0].deprel == "nsubj");
  CHECK(s.tokens[0].enhanced_heads == std::vector<EnhancedHead>{{2, "nsubj"}});
  CHECK(s.tokens[1].lemma == "sink");
  CHECK(s.tokens[1].head == 0);
}

TEST_CASE("empty input yields empty sequence") {
  std::istringstream in("");
  CHECK(parse_conllu(in).empty());
  std::istringstream blank("\n\n\n");
  CHECK(parse_conllu(blank).empty());
}

TEST_CASE("underscore fields: lemma falls back to lowercased form, upos empty") {
  Sentence s = parse_one("1\tSank\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  CHECK(s.tokens[0].lemma == "sank");
  CHECK(s.tokens[0].upos.empty());
  CHECK(s.tokens[0].enhanced_heads.empty());
}

TEST_CASE("malformed middle sentence: skip mode counts, abort mode throws") {
  std::ifstream in(testutil::data_path("malformed.conllu"));
  REQUIRE(in);
  ParseStats stats;
  auto sentences = parse_conllu(in, {.skip_malformed = true}, &stats);
  CHECK(sentences.size() == 2);
  CHECK(stats.malformed_lines == 1);
  CHECK(stats.skipped_sentences == 1);
  CHECK(sentences[0].tokens[0].form == "Ships");
  CHECK(sentences[1].tokens[0].form == "Icebergs");

  std::ifstream in2(testutil::data_path("malformed.conllu"));
  CHECK_THROWS_AS(parse_conllu(in2), parse_error);
  std::ifstream in3(testutil::data_path("malformed.conllu"));
  try {
    parse_conllu(in3);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line_no == 4);  // the 9-column "Boats" line
  }
}

TEST_CASE("multiword ranges and empty nodes are tolerated but skipped") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  REQUIRE(in);
  ParseStats stats;
  auto sentences = parse_conllu(in, {}, &stats);
  CHECK(sentences.size() == 10);
  CHECK(stats.multiword_lines == 1);
  CHECK(stats.empty_node_lines == 1);
  CHECK(stats.dropped_enhanced_refs == 1);  // "4.1:nsubj" in s4
  // s2 keeps exactly its six syntactic words despite the 2-3 range line
  CHECK(sentences[1].tokens.size() == 6);
  CHECK(sentences[1].sentence_id == "s2");
  CHECK(sentences[1].doc_id == "doc1");  // sticky from the s1 newdoc comment
}

TEST_CASE("entity type parsed from MISC") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  auto sentences = parse_conllu(in);
  const Sentence& s7 = sentences[6];
  REQUIRE(s7.sentence_id == "s7");
  CHECK(s7.tokens[0].entity_type == "/product/ship");
  CHECK(s7.tokens[1].entity_type.empty());
}

TEST_CASE("parse is order-stable") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  auto sentences = parse_conllu(in);
  for (std::size_t i = 0; i < sentences.size(); ++i)
    CHECK(sentences[i].sentence_id == "s" + std::to_string(i + 1));
}

TEST_CASE("malformed lines: column count, ids, heads, self-loops") {
  auto expect_bad = [](const std::string& line) {
    std::istringstream in(line + "\n\n");
    CHECK_THROWS_AS(parse_conllu(in), parse_error);
  };
  expect_bad("1\ta\ta\tX\t_\t_\t0");                         // wrong column count
  expect_bad("x\ta\ta\tX\t_\t_\t0\tdep\t_\t_");              // non-numeric id
  expect_bad("1\ta\ta\tX\t_\t_\ty\tdep\t_\t_");              // non-numeric head
  expect_bad("1\ta\ta\tX\t_\t_\t1\tdep\t_\t_");              // self-loop
  expect_bad("1\ta\ta\tX\t_\t_\t0\t_\t_\t_");                // missing deprel
  expect_bad("1\ta\ta\tX\t_\t_\t5\tdep\t_\t_");              // head out of range
  expect_bad("1\ta\ta\tX\t_\t_\t0\tdep\t9:rel\t_");          // DEPS governor out of range
  expect_bad("1\ta\ta\tX\t_\t_\t0\tdep\t1:rel\t_");          // DEPS self-loop
  expect_bad("2\ta\ta\tX\t_\t_\t0\tdep\t_\t_");              // indices not consecutive
}

TEST_CASE("enhanced_graph carries the girls-nsubj edge alongside the basic one") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  auto sentences = parse_conllu(in);
  const Sentence& s2 = sentences[1];
  DepGraph g = enhanced_graph(s2);
  CHECK(g.layer == GraphLayer::Enhanced);
  auto has = [&](std::uint32_t gov, std::uint32_t dep, const std::string& rel) {
    return std::find(g.edges.begin(), g.edges.end(), DepEdge{gov, dep, rel}) != g.edges.end();
  };
  CHECK(has(5, 4, "nsubj"));  // enhanced subject: girls
  CHECK(has(5, 1, "nsubj"));  // basic subject: Both
  CHECK(has(1, 4, "nmod:of"));
}

TEST_CASE("enhanced_graph falls back to basic edges when DEPS is empty") {
  Sentence s = parse_one(
      "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n"
      "2\tship\tship\tNOUN\t_\t_\t0\troot\t_\t_\n\n");
  DepGraph g = enhanced_graph(s);
  CHECK(g.layer == GraphLayer::Basic);
  CHECK(g.edges == basic_graph(s).edges);
  CHECK(g.edges.size() == 2);
}

TEST_CASE("five-token chain with two extra enhanced edges has 5+2 edges") {
  // Chain 1<-2<-3<-4<-5<-root; DEPS mirrors the chain and adds two edges.
  std::string text;
  const char* deps[] = {"2:dep|4:extra", "3:dep", "4:dep|5:extra2", "5:dep", "0:root"};
  for (int i = 1; i <= 5; ++i) {
    int head = i == 5 ? 0 : i + 1;
    text += std::to_string(i) + "\tw" + std::to_string(i) + "\tw" + std::to_string(i) +
            "\tNOUN\t_\t_\t" + std::to_string(head) + "\t" + (i == 5 ? "root" : "dep") + "\t" +
            deps[i - 1] + "\t_\n";
  }
  text += "\n";
  Sentence s = parse_one(text);
  DepGraph g = enhanced_graph(s);
  CHECK(g.edges.size() == 7);
}

TEST_CASE("enhanced graph is a superset of every DEPS edge") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  auto sentences = parse_conllu(in);
  for (const Sentence& s : sentences) {
    DepGraph g = enhanced_graph(s);
    bool any_enhanced = false;
    for (const Token& t : s.tokens) {
      for (const EnhancedHead& eh : t.enhanced_heads) {
        any_enhanced = true;
        DepEdge want{eh.governor, t.index, eh.relation};
        CHECK(std::find(g.edges.begin(), g.edges.end(), want) != g.edges.end());
      }
    }
    if (!any_enhanced) CHECK(g.edges == basic_graph(s).edges);
  }
}

TEST_CASE("enhanced_graph rejects dangling governors on hand-built sentences") {
  Sentence s;
  Token t;
  t.index = 1;
  t.form = "x";
  t.lemma = "x";
  t.head = 0;
  t.deprel = "root";
  t.enhanced_heads.push_back({7, "nsubj"});
  s.tokens.push_back(t);
  CHECK_THROWS_WITH_AS(enhanced_graph(s), doctest::Contains("token 1"), data_error);
}

TEST_CASE("round trip preserves every kept token") {
  std::ifstream in(testutil::data_path("golden.conllu"));
  auto first = parse_conllu(in);
  std::ostringstream buf;
  for (const Sentence& s : first) write_conllu(buf, s);
  std::istringstream back(buf.str());
  auto second = parse_conllu(back);
  CHECK(first == second);
}

TEST_CASE("round trip on randomized sentences") {
  Rng rng(20240817);
  for (int iter = 0; iter < 50; ++iter) {
    Sentence s;
    std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.below(7));
    for (std::uint32_t i = 1; i <= n; ++i) {
      Token t;
      t.index = i;
      t.form = "w" + std::to_string(rng.below(20));
      t.lemma = "l" + std::to_string(rng.below(10));
      t.upos = rng.below(2) ? "NOUN" : "VERB";
      do {
        t.head = static_cast<std::uint32_t>(rng.below(n + 1));
      } while (t.head == i);
      t.deprel = "r" + std::to_string(rng.below(5));
      std::uint32_t extra = static_cast<std::uint32_t>(rng.below(3));
      for (std::uint32_t e = 0; e < extra; ++e) {
        std::uint32_t gov;
        do {
          gov = static_cast<std::uint32_t>(rng.below(n + 1));
        } while (gov == i);
        t.enhanced_heads.push_back({gov, "er" + std::to_string(rng.below(4))});
      }
      if (rng.below(4) == 0) t.entity_type = "/type/t" + std::to_string(rng.below(3));
      s.tokens.push_back(std::move(t));
    }
    std::ostringstream buf;
    write_conllu(buf, s);
    std::istringstream back(buf.str());
    auto parsed = parse_conllu(back);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].tokens == s.tokens);
  }
}

TEST_CASE("corrupt gzip input raises an io_error instead of truncating") {
  auto dir = testutil::scratch_dir("gzbad");
  std::string gz_path = (dir / "bad.conllu.gz").string();
  {
    auto out = open_output(gz_path);
    *out << testutil::read_file(testutil::data_path("golden.conllu"));
  }
  std::string bytes = testutil::read_file(gz_path);
  for (std::size_t i = bytes.size() / 2; i < bytes.size() / 2 + 8 && i < bytes.size(); ++i)
    bytes[i] ^= 0x5a;  // clobber the deflate stream
  testutil::write_file(gz_path, bytes);
  auto in = open_input(gz_path);
  CHECK_THROWS_AS(parse_conllu(*in), io_error);
}

TEST_CASE("gzip input is transparent by extension") {
  auto dir = testutil::scratch_dir("gz");
  std::string plain = testutil::read_file(testutil::data_path("golden.conllu"));
  std::string gz_path = (dir / "corpus.conllu.gz").string();
  {
    auto out = open_output(gz_path);
    *out << plain;
  }
  // compressed on disk
  std::string raw = testutil::read_file(gz_path);
  REQUIRE(raw.size() > 2);
  CHECK(static_cast<unsigned char>(raw[0]) == 0x1f);
  CHECK(static_cast<unsigned char>(raw[1]) == 0x8b);
  auto in = open_input(gz_path);
  auto sentences = parse_conllu(*in);
  CHECK(sentences.size() == 10);
}
