#include <doctest.h>

#include <cmath>
#include <sstream>

#include "selpref/features.hpp"
#include "selpref/rng.hpp"

using namespace selpref;

namespace {

const std::vector<double> kDefaultBoundaries{-0.1, 0.0, 0.1, 0.25, 0.5};

// d=2 model with hand-checkable property cosines.
EmbeddingModel feature_model() {
  EmbeddingModel m;
  m.d = 2;
  m.vocab.terms = {{"/product/ship", 1}, {"A", 1},        {"B", 1},   {"C", 1},
                   {"iceberg", 1},       {"ship", 1},     {"the_ship", 1}};
  m.vocab.contexts = {{"sank@nsubj", 1}, {"struck@dobj", 1}};
  m.vocab.rebuild_index();
  m.w.assign(m.vocab.terms.size() * 2, 0.0f);
  m.c.assign(m.vocab.contexts.size() * 2, 0.0f);
  auto set_w = [&](const char* key, float x, float y) {
    std::uint32_t i = *m.vocab.term_index(key);
    m.w[2 * i] = x;
    m.w[2 * i + 1] = y;
  };
  set_w("the_ship", 1.0f, 0.0f);
  set_w("ship", 0.0f, -1.0f);
  set_w("/product/ship", -0.6f, 0.8f);
  set_w("iceberg", 0.0f, 1.0f);
  set_w("A", 1.0f, 0.0f);
  set_w("B", 0.0f, 1.0f);
  set_w("C", -1.0f, 0.0f);
  std::uint32_t sank = *m.vocab.context_index("sank@nsubj");
  m.c[2 * sank] = 0.0f;
  m.c[2 * sank + 1] = 1.0f;
  std::uint32_t struck = *m.vocab.context_index("struck@dobj");
  m.c[2 * struck] = 1.0f;
  m.c[2 * struck + 1] = 1.0f;
  return m;
}

MentionRecord ship_mention() {
  MentionRecord a;
  a.mention_string = "the ship";
  a.head = "ship";
  a.governor = "sank";
  a.deprel = "nsubj";
  a.entity_type = "/product/ship";
  return a;
}

MentionRecord it_mention() {
  MentionRecord b;
  b.mention_string = "it";
  b.head = "it";
  b.governor = "struck";
  b.deprel = "dobj";
  return b;
}

MentionRecord head_only(const char* head) {
  MentionRecord m;
  m.mention_string = head;
  m.head = head;
  return m;
}

}  // namespace

TEST_CASE("mention properties for 'the ship'") {
  EmbeddingModel m = feature_model();
  PropertySet ps = mention_properties(ship_mention(), m);
  CHECK(*ps.key[0] == "the_ship");
  CHECK(*ps.key[1] == "ship");  // article stripped
  CHECK(*ps.key[2] == "ship");
  CHECK(*ps.key[3] == "sank@nsubj");
  CHECK(*ps.key[4] == "/product/ship");
  for (std::size_t i = 0; i < kNumProperties; ++i) CHECK(ps.index[i].has_value());
}

TEST_CASE("mention without governor has no context slot") {
  EmbeddingModel m = feature_model();
  MentionRecord r = head_only("it");
  PropertySet ps = mention_properties(r, m);
  CHECK(!ps.key[3]);
  CHECK(!ps.known(Property::ContextSlot));
}

TEST_CASE("keys missing from the model are unknown") {
  EmbeddingModel m = feature_model();
  PropertySet ps = mention_properties(it_mention(), m);
  CHECK(ps.key[0].has_value());          // the key text exists
  CHECK(!ps.index[0].has_value());       // but "it" is out of vocabulary
  CHECK(!ps.known(Property::Head));
  CHECK(ps.known(Property::ContextSlot));  // struck@dobj is present
  CHECK(!ps.key[4]);                       // no entity type annotated
}

TEST_CASE("leading articles are stripped, article-only mentions have no key") {
  EmbeddingModel m = feature_model();
  MentionRecord r;
  r.mention_string = "The the ship";
  r.head = "ship";
  PropertySet ps = mention_properties(r, m);
  CHECK(*ps.key[1] == "ship");
  MentionRecord only_article;
  only_article.mention_string = "the";
  only_article.head = "the";
  PropertySet ps2 = mention_properties(only_article, m);
  CHECK(!ps2.key[1]);
}

TEST_CASE("pair similarities: known channels of the ship/it pair") {
  EmbeddingModel m = feature_model();
  PropertySet a = mention_properties(ship_mention(), m);
  PropertySet b = mention_properties(it_mention(), m);
  SimMatrix sims = pair_similarities(a, b, m);
  const double r2 = 1.0 / std::sqrt(2.0);
  // anaphor side knows only its context slot (column j=3)
  CHECK(*sims[0 * 5 + 3] == doctest::Approx(r2).epsilon(1e-6));           // the_ship vs slot
  CHECK(*sims[1 * 5 + 3] == doctest::Approx(-r2).epsilon(1e-6));          // ship vs slot
  CHECK(*sims[2 * 5 + 3] == doctest::Approx(-r2).epsilon(1e-6));
  CHECK(*sims[3 * 5 + 3] == doctest::Approx(r2).epsilon(1e-6));           // slot-slot (C.C)
  CHECK(*sims[4 * 5 + 3] == doctest::Approx(0.2 * r2).epsilon(1e-6));     // type vs slot
  int known = 0;
  for (const auto& s : sims)
    if (s) ++known;
  CHECK(known == 5);
}

TEST_CASE("fully unknown property sets give 25 unknown entries") {
  EmbeddingModel m = feature_model();
  MentionRecord r = head_only("nonexistent");
  PropertySet ps = mention_properties(r, m);
  SimMatrix sims = pair_similarities(ps, ps, m);
  for (const auto& s : sims) CHECK(!s);
}

TEST_CASE("identical known property sets have unit diagonal") {
  EmbeddingModel m = feature_model();
  PropertySet a = mention_properties(ship_mention(), m);
  SimMatrix sims = pair_similarities(a, a, m);
  for (std::size_t i = 0; i < kNumProperties; ++i) {
    REQUIRE(sims[i * 5 + i].has_value());
    CHECK(*sims[i * 5 + i] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("pair_similarities is symmetric under swapping the pair") {
  EmbeddingModel m = feature_model();
  Rng rng(3);
  std::vector<MentionRecord> mentions{ship_mention(), it_mention(), head_only("A"),
                                      head_only("iceberg"), head_only("nonexistent")};
  for (int iter = 0; iter < 20; ++iter) {
    const MentionRecord& ra = mentions[rng.below(mentions.size())];
    const MentionRecord& rb = mentions[rng.below(mentions.size())];
    PropertySet a = mention_properties(ra, m);
    PropertySet b = mention_properties(rb, m);
    SimMatrix ab = pair_similarities(a, b, m);
    SimMatrix ba = pair_similarities(b, a, m);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(ab[i * 5 + j].has_value() == ba[j * 5 + i].has_value());
        if (ab[i * 5 + j]) CHECK(*ab[i * 5 + j] == doctest::Approx(*ba[j * 5 + i]));
      }
  }
}

TEST_CASE("bin assignment follows half-open intervals") {
  std::vector<double> single{0.0};
  CHECK(bin_of(-0.3, single) == 0);
  CHECK(bin_of(0.0, single) == 1);  // boundary belongs to the upper bin
  CHECK(bin_of(0.5, single) == 1);
  CHECK(bin_of(std::nullopt, single) == 2);  // unknown bin

  CHECK(bin_of(0.11, kDefaultBoundaries) == 3);
  CHECK(bin_of(-1.0, kDefaultBoundaries) == 0);
  CHECK(bin_of(1.0, kDefaultBoundaries) == 5);
  CHECK(bin_of(std::nullopt, kDefaultBoundaries) == 6);
}

TEST_CASE("binarize activates exactly one bin per channel") {
  SimMatrix sims;
  Rng rng(8);
  for (auto& s : sims) s = rng.below(4) == 0 ? std::nullopt : std::optional<double>(rng.uniform01() * 2 - 1);
  BinnedFeatureVector v = binarize(sims, kDefaultBoundaries);
  CHECK(v.num_bins == 6);
  CHECK(v.dense_size() == 25 * 7);
  std::ostringstream dense;
  write_dense_features(dense, v);
  std::istringstream in(dense.str());
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    int ones = 0;
    for (std::uint32_t b = 0; b <= v.num_bins; ++b) {
      int bit;
      REQUIRE((in >> bit));
      ones += bit;
    }
    CHECK(ones == 1);
  }
}

TEST_CASE("binarize validates boundaries") {
  SimMatrix sims{};
  CHECK_THROWS_AS(binarize(sims, {0.2, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(binarize(sims, {0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(binarize(sims, {-1.5, 0.0}), std::invalid_argument);
}

TEST_CASE("golden sparse features for the ship/it pair") {
  EmbeddingModel m = feature_model();
  PropertySet a = mention_properties(ship_mention(), m);
  PropertySet b = mention_properties(it_mention(), m);
  BinnedFeatureVector v = binarize(pair_similarities(a, b, m), kDefaultBoundaries);
  std::ostringstream out;
  write_sparse_features(out, v);
  CHECK(out.str() ==
        "0:6 1:6 2:6 3:5 4:6 5:6 6:6 7:6 8:0 9:6 10:6 11:6 12:6 13:0 14:6 "
        "15:6 16:6 17:6 18:5 19:6 20:6 21:6 22:6 23:3 24:6\n");
}

TEST_CASE("mcc closed forms") {
  CHECK(mcc(10, 0, 0, 10).value == doctest::Approx(1.0));
  CHECK(!mcc(10, 0, 0, 10).undefined);
  CHECK(mcc(5, 5, 5, 5).value == doctest::Approx(0.0));
  CHECK(mcc(6, 2, 4, 8).value == doctest::Approx(0.40825).epsilon(1e-4));
  CHECK(mcc(6, 2, 4, 8).value ==
        doctest::Approx((6.0 * 8 - 2.0 * 4) / std::sqrt(8.0 * 10.0 * 10.0 * 12.0)));
}

TEST_CASE("mcc degenerate margins are flagged, not silent") {
  MccResult r = mcc(0, 0, 5, 5);
  CHECK(r.undefined);
  CHECK(r.value == 0.0);
  CHECK(mcc(3, 1, 0, 0).undefined);
}

TEST_CASE("mcc symmetry and negation properties") {
  Rng rng(21);
  for (int iter = 0; iter < 50; ++iter) {
    std::uint64_t tp = 1 + rng.below(20), fp = 1 + rng.below(20);
    std::uint64_t fn = 1 + rng.below(20), tn = 1 + rng.below(20);
    CHECK(mcc(tp, fp, fn, tn).value == doctest::Approx(mcc(tn, fn, fp, tp).value));
    // inverting every prediction negates the correlation
    CHECK(mcc(fn, tn, tp, fp).value == doctest::Approx(-mcc(tp, fp, fn, tn).value));
  }
}

TEST_CASE("eval on a separable fixture reaches MCC 1") {
  EmbeddingModel m = feature_model();
  std::vector<LabeledPair> pairs;
  for (int i = 0; i < 4; ++i) {
    pairs.push_back({head_only("A"), head_only("A"), true});    // cos +1
    pairs.push_back({head_only("A"), head_only("C"), false});   // cos -1
  }
  EvalReport r = eval_pairs(m, pairs, {}, 0.0);
  CHECK(r.tp == 4);
  CHECK(r.tn == 4);
  CHECK(r.mcc.value == doctest::Approx(1.0));
  CHECK(!r.mcc.undefined);
}

TEST_CASE("eval with only unknown scores predicts negative and flags MCC") {
  EmbeddingModel m = feature_model();
  std::vector<LabeledPair> pairs{{head_only("x1"), head_only("x2"), true},
                                 {head_only("x3"), head_only("x4"), false}};
  EvalReport r = eval_pairs(m, pairs, {}, 0.0);
  CHECK(r.tp == 0);
  CHECK(r.fp == 0);
  CHECK(r.fn == 1);
  CHECK(r.tn == 1);
  CHECK(r.unknown_scores == 2);
  CHECK(r.mcc.undefined);
}

TEST_CASE("eight-pair fixture matches the hand-computed confusion matrix") {
  EmbeddingModel m = feature_model();
  // head-head channel only; s(A,A)=1, s(A,B)=s(B,A)=0; threshold 0.5
  ChannelSelector head_head = parse_channel_selector("2,2");
  std::vector<LabeledPair> pairs{
      {head_only("A"), head_only("A"), true},   // tp
      {head_only("A"), head_only("A"), true},   // tp
      {head_only("A"), head_only("B"), true},   // fn
      {head_only("A"), head_only("B"), false},  // tn
      {head_only("A"), head_only("A"), false},  // fp
      {head_only("A"), head_only("B"), false},  // tn
      {head_only("B"), head_only("A"), true},   // fn
      {head_only("A"), head_only("A"), true},   // tp
  };
  EvalReport r = eval_pairs(m, pairs, head_head, 0.5);
  CHECK(r.tp == 3);
  CHECK(r.fn == 2);
  CHECK(r.fp == 1);
  CHECK(r.tn == 2);
  // (3*2 - 1*2) / sqrt(4*5*3*4) = 4/sqrt(240)
  CHECK(r.mcc.value == doctest::Approx(4.0 / std::sqrt(240.0)).epsilon(1e-9));
  CHECK(r.mcc.value == doctest::Approx(0.2581988897).epsilon(1e-6));
  // quartiles of the coreferent class scores {1,1,0,0,1}
  CHECK(r.coreferent.pairs == 5);
  CHECK(r.coreferent.min == doctest::Approx(0.0));
  CHECK(r.coreferent.q1 == doctest::Approx(0.0));
  CHECK(r.coreferent.median == doctest::Approx(1.0));
  CHECK(r.coreferent.q3 == doctest::Approx(1.0));
  CHECK(r.coreferent.max == doctest::Approx(1.0));
  // non-coreferent scores {0,1,0}
  CHECK(r.non_coreferent.q1 == doctest::Approx(0.0));
  CHECK(r.non_coreferent.median == doctest::Approx(0.0));
  CHECK(r.non_coreferent.q3 == doctest::Approx(0.5));
}

TEST_CASE("raising the threshold never increases tp or fp") {
  EmbeddingModel m = feature_model();
  Rng rng(31);
  std::vector<const char*> heads{"A", "B", "C", "iceberg", "ship", "nonexistent"};
  std::vector<LabeledPair> pairs;
  for (int i = 0; i < 40; ++i)
    pairs.push_back({head_only(heads[rng.below(heads.size())]),
                     head_only(heads[rng.below(heads.size())]), rng.below(2) == 0});
  std::uint64_t prev_tp = ~0ull, prev_fp = ~0ull;
  for (double th : {-1.0, -0.5, 0.0, 0.3, 0.7, 1.0}) {
    EvalReport r = eval_pairs(m, pairs, {}, th);
    CHECK(r.tp <= prev_tp);
    CHECK(r.fp <= prev_fp);
    prev_tp = r.tp;
    prev_fp = r.fp;
  }
}

TEST_CASE("empty evaluation input is an error") {
  EmbeddingModel m = feature_model();
  std::vector<LabeledPair> none;
  CHECK_THROWS_AS(eval_pairs(m, none, {}, 0.0), data_error);
}

TEST_CASE("channel selector parsing") {
  CHECK(parse_channel_selector("all").channels.empty());
  CHECK(parse_channel_selector("").channels.empty());
  ChannelSelector sel = parse_channel_selector("2,2;3,3");
  REQUIRE(sel.channels.size() == 2);
  CHECK(sel.channels[0] == std::pair{Property::Head, Property::Head});
  CHECK(sel.channels[1] == std::pair{Property::ContextSlot, Property::ContextSlot});
  CHECK_THROWS_AS(parse_channel_selector("5,0"), config_error);
  CHECK_THROWS_AS(parse_channel_selector("x"), config_error);
}

TEST_CASE("mention pair file parsing names offending columns") {
  std::string good =
      "doc1\t0-1\tthe ship\tship\tsank\tnsubj\t/product/ship\t2-2\tit\tit\tstruck\tdobj\t_\t1";
  LabeledPair lp = parse_mention_pair_line(good, 1);
  CHECK(lp.antecedent.mention_string == "the ship");
  CHECK(lp.antecedent.entity_type == "/product/ship");
  CHECK(lp.anaphor.governor == "struck");
  CHECK(lp.anaphor.entity_type.empty());
  CHECK(lp.coreferent);

  auto expect_error = [](const std::string& line, const std::string& needle) {
    try {
      parse_mention_pair_line(line, 3);
      FAIL("expected parse_error for: " << line);
    } catch (const parse_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("doc1\t0-1\tship\tship\tsank\tnsubj\t_", "14 tab-separated columns");
  expect_error("doc1\t0-1\tship\t_\tsank\tnsubj\t_\t2-2\tit\tit\t_\t_\t_\t1",
               "column 4 (head_a)");
  expect_error("doc1\t0-1\tship\tship\tsank\t_\t_\t2-2\tit\tit\t_\t_\t_\t1",
               "column 6 (deprel_a)");
  expect_error("doc1\t0-1\tship\tship\t_\t_\t_\t2-2\tit\t_\tstruck\tdobj\t_\t1",
               "column 10 (head_b)");
  expect_error("doc1\t0-1\tship\tship\t_\t_\tship\t2-2\tit\tit\t_\t_\t_\t1",
               "column 7 (type_a)");
  expect_error("doc1\t0-1\tship\tship\t_\t_\t_\t2-2\tit\tit\t_\t_\t_\tmaybe",
               "column 14 (label)");
}

TEST_CASE("eval report writers") {
  EmbeddingModel m = feature_model();
  std::vector<LabeledPair> pairs{{head_only("A"), head_only("A"), true},
                                 {head_only("A"), head_only("C"), false}};
  EvalReport r = eval_pairs(m, pairs, {}, 0.0);
  std::ostringstream text, kv;
  write_eval_report_text(text, r);
  write_eval_report_kv(kv, r);
  CHECK(text.str().find("mcc: 1") != std::string::npos);
  CHECK(kv.str().find("mcc=1") != std::string::npos);
  CHECK(kv.str().find("tp=1\n") != std::string::npos);
  CHECK(kv.str().find("tn=1\n") != std::string::npos);
}
