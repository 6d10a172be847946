// Mention-pair selectional-preference features: five mention properties,
// binned pairwise similarities, and the MCC-based evaluation report.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "selpref/errors.hpp"
#include "selpref/model.hpp"

namespace selpref {

struct MentionRecord {
  std::string mention_string;  // surface tokens, space-separated
  std::string head;
  std::string governor;     // empty = absent
  std::string deprel;       // empty = absent
  std::string entity_type;  // empty = absent
  std::string doc_id;
  std::string span;
};

// The five embedding keys per mention. ContextSlot resolves against the
// context matrix, everything else against the term matrix.
enum class Property : std::uint8_t {
  FullString = 0,
  NoArticles = 1,
  Head = 2,
  ContextSlot = 3,
  EntityType = 4,
};
inline constexpr std::size_t kNumProperties = 5;
inline constexpr std::size_t kNumChannels = kNumProperties * kNumProperties;

inline const char* property_name(Property p) {
  switch (p) {
    case Property::FullString: return "full_string";
    case Property::NoArticles: return "string_no_articles";
    case Property::Head: return "head";
    case Property::ContextSlot: return "context_slot";
    case Property::EntityType: return "entity_type";
  }
  return "?";
}

struct PropertySet {
  // Key text per property; nullopt when the property cannot be built at all.
  std::array<std::optional<std::string>, kNumProperties> key;
  // Row index (W for terms, C for ContextSlot); nullopt = unknown.
  std::array<std::optional<std::uint32_t>, kNumProperties> index;

  bool known(Property p) const { return index[static_cast<std::size_t>(p)].has_value(); }
};

namespace detail {

inline bool is_article(std::string_view tok) {
  std::string t = lowercase(tok);
  return t == "a" || t == "an" || t == "the";
}

inline std::vector<std::string_view> whitespace_tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::string join_underscore(const std::vector<std::string_view>& toks, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < toks.size(); ++i) {
    if (!out.empty()) out += '_';
    out += std::string(toks[i]);
  }
  return out;
}

}  // namespace detail

inline PropertySet mention_properties(const MentionRecord& m, const EmbeddingModel& model) {
  PropertySet ps;
  auto toks = detail::whitespace_tokens(m.mention_string);
  if (!toks.empty()) ps.key[0] = detail::join_underscore(toks, 0);
  std::size_t skip = 0;
  while (skip < toks.size() && detail::is_article(toks[skip])) ++skip;
  if (skip < toks.size()) ps.key[1] = detail::join_underscore(toks, skip);
  if (!m.head.empty()) ps.key[2] = m.head;
  if (!m.governor.empty() && !m.deprel.empty()) ps.key[3] = m.governor + "@" + m.deprel;
  if (!m.entity_type.empty()) ps.key[4] = m.entity_type;

  for (std::size_t i = 0; i < kNumProperties; ++i) {
    if (!ps.key[i]) continue;
    ps.index[i] = i == static_cast<std::size_t>(Property::ContextSlot)
                      ? model.vocab.context_index(*ps.key[i])
                      : model.vocab.term_index(*ps.key[i]);
  }
  return ps;
}

// 5x5 similarity matrix; entry (i,j) compares antecedent property i with
// anaphor property j. Unknown when either side is unknown or zero-norm.
using SimMatrix = std::array<std::optional<double>, kNumChannels>;

namespace detail {

inline std::span<const float> property_vector(const EmbeddingModel& model, const PropertySet& ps,
                                              std::size_t i) {
  std::uint32_t row = *ps.index[i];
  return i == static_cast<std::size_t>(Property::ContextSlot) ? model.context_vector(row)
                                                              : model.term_vector(row);
}

}  // namespace detail

inline SimMatrix pair_similarities(const PropertySet& antecedent, const PropertySet& anaphor,
                                   const EmbeddingModel& model) {
  SimMatrix sims;
  for (std::size_t i = 0; i < kNumProperties; ++i) {
    for (std::size_t j = 0; j < kNumProperties; ++j) {
      std::optional<double>& out = sims[i * kNumProperties + j];
      out = std::nullopt;
      if (!antecedent.index[i] || !anaphor.index[j]) continue;
      out = cosine(detail::property_vector(model, antecedent, i),
                   detail::property_vector(model, anaphor, j));
    }
  }
  return sims;
}

// One-hot bin assignment per channel over B = |boundaries|+1 score bins plus
// a distinguished unknown bin (index B).
struct BinnedFeatureVector {
  std::uint32_t num_bins = 0;                    // score bins, excluding unknown
  std::array<std::uint32_t, kNumChannels> bin{};  // per channel; num_bins = unknown

  std::uint32_t unknown_bin() const { return num_bins; }
  std::size_t dense_size() const { return kNumChannels * (num_bins + 1); }
};

inline void validate_boundaries(const std::vector<double>& boundaries) {
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (boundaries[i] <= -1.0 || boundaries[i] >= 1.0)
      throw std::invalid_argument("bin boundaries must lie inside (-1, 1)");
    if (i > 0 && boundaries[i] <= boundaries[i - 1])
      throw std::invalid_argument("bin boundaries must be strictly ascending");
  }
}

// Half-open intervals [lo, hi); the last bin is closed above. score < b0 maps
// to bin 0, score >= b_last to bin B-1, unknown to the unknown bin (index B).
inline std::uint32_t bin_of(std::optional<double> score, const std::vector<double>& boundaries) {
  if (!score) return static_cast<std::uint32_t>(boundaries.size()) + 1;
  std::uint32_t b = 0;
  while (b < boundaries.size() && *score >= boundaries[b]) ++b;
  return b;
}

inline BinnedFeatureVector binarize(const SimMatrix& sims, const std::vector<double>& boundaries) {
  validate_boundaries(boundaries);
  BinnedFeatureVector v;
  v.num_bins = static_cast<std::uint32_t>(boundaries.size()) + 1;
  for (std::size_t ch = 0; ch < kNumChannels; ++ch)
    v.bin[ch] = sims[ch] ? bin_of(sims[ch], boundaries) : v.unknown_bin();
  return v;
}

inline void write_sparse_features(std::ostream& out, const BinnedFeatureVector& v) {
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    if (ch) out << ' ';
    out << ch << ':' << v.bin[ch];
  }
  out << '\n';
}

inline void write_dense_features(std::ostream& out, const BinnedFeatureVector& v) {
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    for (std::uint32_t b = 0; b <= v.num_bins; ++b) {
      if (ch || b) out << ' ';
      out << (v.bin[ch] == b ? 1 : 0);
    }
  }
  out << '\n';
}

// Matthews correlation coefficient. A zero denominator is reported as 0 with
// the undefined flag set rather than silently.
struct MccResult {
  double value = 0.0;
  bool undefined = false;
};

inline MccResult mcc(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  double a = static_cast<double>(tp) + fp;
  double b = static_cast<double>(tp) + fn;
  double c = static_cast<double>(tn) + fp;
  double d = static_cast<double>(tn) + fn;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) return {0.0, true};
  double num = static_cast<double>(tp) * tn - static_cast<double>(fp) * fn;
  return {num / std::sqrt(a * b * c * d), false};
}

struct LabeledPair {
  MentionRecord antecedent;
  MentionRecord anaphor;
  bool coreferent = false;
};

// Which of the 25 channels drive the evaluation score; empty = all. The pair
// score is the max over the selected channels that are known.
struct ChannelSelector {
  std::vector<std::pair<Property, Property>> channels;
};

inline ChannelSelector parse_channel_selector(const std::string& s) {
  ChannelSelector sel;
  if (s.empty() || s == "all") return sel;
  for (auto part : detail::split(std::string_view(s), ';')) {
    auto comma = part.find(',');
    if (comma == std::string_view::npos)
      throw config_error("channel selector entries look like 'i,j' with i,j in 0..4: '" +
                         std::string(part) + "'");
    std::string_view a = part.substr(0, comma), b = part.substr(comma + 1);
    if (!detail::all_digits(a) || !detail::all_digits(b))
      throw config_error("channel selector indices must be numeric: '" + std::string(part) + "'");
    unsigned long i = std::stoul(std::string(a)), j = std::stoul(std::string(b));
    if (i >= kNumProperties || j >= kNumProperties)
      throw config_error("channel selector indices must be in 0..4");
    sel.channels.emplace_back(static_cast<Property>(i), static_cast<Property>(j));
  }
  return sel;
}

inline std::optional<double> pair_score(const SimMatrix& sims, const ChannelSelector& sel) {
  std::optional<double> best;
  auto consider = [&](std::size_t ch) {
    if (sims[ch] && (!best || *sims[ch] > *best)) best = *sims[ch];
  };
  if (sel.channels.empty()) {
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) consider(ch);
  } else {
    for (auto [i, j] : sel.channels)
      consider(static_cast<std::size_t>(i) * kNumProperties + static_cast<std::size_t>(j));
  }
  return best;
}

// Five-number summary of the known scores of one class, Figure-style box
// statistics. Quantiles interpolate linearly between order statistics.
struct ClassStats {
  std::uint64_t pairs = 0;
  std::uint64_t unknown = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

namespace detail {

inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  double pos = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

inline ClassStats class_stats(std::vector<double>& scores, std::uint64_t pairs,
                              std::uint64_t unknown) {
  ClassStats cs;
  cs.pairs = pairs;
  cs.unknown = unknown;
  if (scores.empty()) return cs;
  std::sort(scores.begin(), scores.end());
  cs.min = scores.front();
  cs.q1 = quantile(scores, 0.25);
  cs.median = quantile(scores, 0.5);
  cs.q3 = quantile(scores, 0.75);
  cs.max = scores.back();
  return cs;
}

}  // namespace detail

struct EvalReport {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t unknown_scores = 0;  // pairs predicted negative for lack of a score
  MccResult mcc;
  ClassStats coreferent;
  ClassStats non_coreferent;
  double threshold = 0.0;
};

// Predicts coreferent iff score >= threshold; unknown scores predict
// negative. Reports MCC, the confusion matrix, and per-class quartiles.
inline EvalReport eval_pairs(const EmbeddingModel& model, const std::vector<LabeledPair>& pairs,
                             const ChannelSelector& sel, double threshold) {
  if (pairs.empty()) throw data_error("no mention pairs to evaluate");
  EvalReport r;
  r.threshold = threshold;
  std::vector<double> pos_scores, neg_scores;
  std::uint64_t pos_pairs = 0, neg_pairs = 0, pos_unknown = 0, neg_unknown = 0;
  for (const LabeledPair& lp : pairs) {
    PropertySet a = mention_properties(lp.antecedent, model);
    PropertySet b = mention_properties(lp.anaphor, model);
    std::optional<double> score = pair_score(pair_similarities(a, b, model), sel);
    bool predicted = score && *score >= threshold;
    if (!score) ++r.unknown_scores;
    if (lp.coreferent) {
      ++pos_pairs;
      if (score) pos_scores.push_back(*score);
      else ++pos_unknown;
      predicted ? ++r.tp : ++r.fn;
    } else {
      ++neg_pairs;
      if (score) neg_scores.push_back(*score);
      else ++neg_unknown;
      predicted ? ++r.fp : ++r.tn;
    }
  }
  r.mcc = mcc(r.tp, r.fp, r.fn, r.tn);
  r.coreferent = detail::class_stats(pos_scores, pos_pairs, pos_unknown);
  r.non_coreferent = detail::class_stats(neg_scores, neg_pairs, neg_unknown);
  return r;
}

// ---- Mention-pair file -------------------------------------------------
// Tab-separated, one (antecedent, anaphor) pair per line:
//   doc_id  span_a mention_a head_a governor_a deprel_a type_a
//           span_b mention_b head_b governor_b deprel_b type_b  label
// "_" marks an absent governor/deprel/type; label is 1/0/true/false.

namespace detail {

inline const char* mention_pair_column_name(std::size_t c) {
  static const char* names[] = {"doc_id",     "span_a",   "mention_a", "head_a", "governor_a",
                                "deprel_a",   "type_a",   "span_b",    "mention_b", "head_b",
                                "governor_b", "deprel_b", "type_b",    "label"};
  return c < 14 ? names[c] : "?";
}

inline std::string unescape_underscore(std::string_view v) {
  return v == "_" ? std::string() : std::string(v);
}

}  // namespace detail

inline LabeledPair parse_mention_pair_line(std::string_view line, std::size_t line_no) {
  auto cols = detail::split(line, '\t');
  if (cols.size() != 14)
    throw parse_error(line_no, "expected 14 tab-separated columns, got " +
                                   std::to_string(cols.size()));
  auto field_error = [&](std::size_t c, const std::string& msg) {
    throw parse_error(line_no, "column " + std::to_string(c + 1) + " (" +
                                   detail::mention_pair_column_name(c) + "): " + msg);
  };
  auto read_mention = [&](std::size_t base, const std::string& doc) {
    MentionRecord m;
    m.doc_id = doc;
    m.span = std::string(cols[base]);
    m.mention_string = detail::unescape_underscore(cols[base + 1]);
    m.head = detail::unescape_underscore(cols[base + 2]);
    m.governor = detail::unescape_underscore(cols[base + 3]);
    m.deprel = detail::unescape_underscore(cols[base + 4]);
    m.entity_type = detail::unescape_underscore(cols[base + 5]);
    if (m.head.empty()) field_error(base + 2, "mention head must be non-empty");
    if (!m.governor.empty() && m.deprel.empty())
      field_error(base + 4, "deprel required when governor is present");
    if (!m.entity_type.empty() && m.entity_type.front() != '/')
      field_error(base + 5, "entity type must start with '/'");
    return m;
  };
  LabeledPair lp;
  std::string doc = std::string(cols[0]);
  lp.antecedent = read_mention(1, doc);
  lp.anaphor = read_mention(7, doc);
  std::string_view label = cols[13];
  if (label == "1" || label == "true") lp.coreferent = true;
  else if (label == "0" || label == "false") lp.coreferent = false;
  else field_error(13, "label must be 1/0/true/false, got '" + std::string(label) + "'");
  return lp;
}

inline std::vector<LabeledPair> read_mention_pairs(std::istream& in) {
  std::vector<LabeledPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_mention_pair_line(line, line_no));
  }
  return out;
}

inline void write_eval_report_text(std::ostream& out, const EvalReport& r) {
  auto box = [&](const char* name, const ClassStats& cs) {
    out << name << ": pairs=" << cs.pairs << " unknown=" << cs.unknown;
    if (cs.pairs > cs.unknown)
      out << " min=" << cs.min << " q1=" << cs.q1 << " median=" << cs.median << " q3=" << cs.q3
          << " max=" << cs.max;
    out << '\n';
  };
  out << "threshold: " << r.threshold << '\n';
  out << "confusion: tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << " tn=" << r.tn
      << " unknown_scores=" << r.unknown_scores << '\n';
  out << "mcc: " << r.mcc.value << (r.mcc.undefined ? " (undefined)" : "") << '\n';
  box("coreferent", r.coreferent);
  box("non-coreferent", r.non_coreferent);
}

inline void write_eval_report_kv(std::ostream& out, const EvalReport& r) {
  out << "threshold=" << r.threshold << '\n'
      << "tp=" << r.tp << '\n'
      << "fp=" << r.fp << '\n'
      << "fn=" << r.fn << '\n'
      << "tn=" << r.tn << '\n'
      << "unknown_scores=" << r.unknown_scores << '\n'
      << "mcc=" << r.mcc.value << '\n'
      << "mcc_undefined=" << (r.mcc.undefined ? 1 : 0) << '\n';
  auto box = [&](const char* prefix, const ClassStats& cs) {
    out << prefix << "_pairs=" << cs.pairs << '\n' << prefix << "_unknown=" << cs.unknown << '\n';
    if (cs.pairs > cs.unknown)
      out << prefix << "_min=" << cs.min << '\n'
          << prefix << "_q1=" << cs.q1 << '\n'
          << prefix << "_median=" << cs.median << '\n'
          << prefix << "_q3=" << cs.q3 << '\n'
          << prefix << "_max=" << cs.max << '\n';
  };
  box("coref", r.coreferent);
  box("noncoref", r.non_coreferent);
}

}  // namespace selpref
