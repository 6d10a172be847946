// Term/context vocabularies with frequency thresholds, subsampling
// probabilities, and the smoothed negative-sampling distribution.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "selpref/errors.hpp"
#include "selpref/pairs.hpp"
#include "selpref/rng.hpp"

namespace selpref {

struct VocabEntry {
  std::string key;
  std::uint64_t count = 0;
  bool operator==(const VocabEntry&) const = default;
};

struct Vocabulary {
  std::vector<VocabEntry> terms;     // sorted by count desc, key asc
  std::vector<VocabEntry> contexts;  // same order
  std::uint64_t total_term_tokens = 0;     // kept + dropped mass
  std::uint64_t total_context_tokens = 0;
  std::uint64_t dropped_term_tokens = 0;
  std::uint64_t dropped_context_tokens = 0;
  std::uint64_t dropped_term_types = 0;
  std::uint64_t dropped_context_types = 0;
  std::uint64_t min_count_term = 1;
  std::uint64_t min_count_context = 1;

  std::optional<std::uint32_t> term_index(const std::string& key) const {
    auto it = term_index_.find(key);
    if (it == term_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::uint32_t> context_index(const std::string& key) const {
    auto it = context_index_.find(key);
    if (it == context_index_.end()) return std::nullopt;
    return it->second;
  }

  void rebuild_index() {
    term_index_.clear();
    context_index_.clear();
    term_index_.reserve(terms.size());
    context_index_.reserve(contexts.size());
    for (std::uint32_t i = 0; i < terms.size(); ++i) term_index_.emplace(terms[i].key, i);
    for (std::uint32_t i = 0; i < contexts.size(); ++i) context_index_.emplace(contexts[i].key, i);
  }

  bool operator==(const Vocabulary& o) const {
    return terms == o.terms && contexts == o.contexts &&
           total_term_tokens == o.total_term_tokens &&
           total_context_tokens == o.total_context_tokens &&
           dropped_term_tokens == o.dropped_term_tokens &&
           dropped_context_tokens == o.dropped_context_tokens &&
           dropped_term_types == o.dropped_term_types &&
           dropped_context_types == o.dropped_context_types &&
           min_count_term == o.min_count_term && min_count_context == o.min_count_context;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> term_index_;
  std::unordered_map<std::string, std::uint32_t> context_index_;
};

namespace detail {

inline std::vector<VocabEntry> threshold_and_sort(
    std::unordered_map<std::string, std::uint64_t>& counts, std::uint64_t min_count,
    std::uint64_t& dropped_tokens, std::uint64_t& dropped_types) {
  std::vector<VocabEntry> kept;
  kept.reserve(counts.size());
  for (auto& [key, count] : counts) {
    if (count >= min_count) {
      kept.push_back({key, count});
    } else {
      dropped_tokens += count;
      ++dropped_types;
    }
  }
  std::sort(kept.begin(), kept.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  return kept;
}

}  // namespace detail

// Hash-count construction; indices are deterministic (count desc, key asc).
// Invariant to the order of the input pair multiset.
template <typename PairRange>
Vocabulary build_vocab(const PairRange& pairs, std::uint64_t min_count_term,
                       std::uint64_t min_count_context) {
  std::unordered_map<std::string, std::uint64_t> term_counts, context_counts;
  std::uint64_t total = 0;
  for (const TermContextPair& p : pairs) {
    term_counts[p.term] += p.weight;
    context_counts[p.context] += p.weight;
    total += p.weight;
  }
  if (total == 0) throw data_error("empty corpus");
  Vocabulary v;
  v.min_count_term = min_count_term;
  v.min_count_context = min_count_context;
  v.total_term_tokens = total;
  v.total_context_tokens = total;
  v.terms = detail::threshold_and_sort(term_counts, min_count_term, v.dropped_term_tokens,
                                       v.dropped_term_types);
  v.contexts = detail::threshold_and_sort(context_counts, min_count_context,
                                          v.dropped_context_tokens, v.dropped_context_types);
  v.rebuild_index();
  return v;
}

// Probability of keeping an occurrence of a term with the given count:
// p = min(1, sqrt(t/f) + t/f) with f = count/total. Monotonically
// decreasing in f; rare words (f <= t) are always kept.
inline double subsample_keep_prob(std::uint64_t count, std::uint64_t total, double t) {
  double f = static_cast<double>(count) / static_cast<double>(total);
  double p = std::sqrt(t / f) + t / f;
  return p < 1.0 ? p : 1.0;
}

// Exact sampler over context indices with P(i) proportional to count_i^alpha
// (Vose alias method; no table quantization).
class NegativeTable {
 public:
  NegativeTable() = default;

  NegativeTable(const std::vector<VocabEntry>& contexts, double alpha) : alpha_(alpha) {
    if (contexts.empty()) throw data_error("negative table: no contexts");
    prob_.resize(contexts.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      prob_[i] = std::pow(static_cast<double>(contexts[i].count), alpha);
      sum += prob_[i];
    }
    for (double& p : prob_) p /= sum;
    build_alias();
  }

  const std::vector<double>& probabilities() const { return prob_; }
  double alpha() const { return alpha_; }
  std::size_t size() const { return prob_.size(); }

  std::uint32_t sample(Rng& rng) const {
    std::uint32_t i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform01() < accept_[i] ? i : alias_[i];
  }

 private:
  void build_alias() {
    std::size_t n = prob_.size();
    accept_.assign(n, 1.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = prob_[i] * static_cast<double>(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    while (!small.empty() && !large.empty()) {
      std::uint32_t s = small.back();
      small.pop_back();
      std::uint32_t l = large.back();
      large.pop_back();
      accept_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    while (!large.empty()) {
      accept_[large.back()] = 1.0;
      large.pop_back();
    }
    while (!small.empty()) {
      accept_[small.back()] = 1.0;
      small.pop_back();
    }
  }

  std::vector<double> prob_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
  double alpha_ = 0.75;
};

inline NegativeTable build_negative_table(const Vocabulary& vocab, double alpha = 0.75) {
  return NegativeTable(vocab.contexts, alpha);
}

// Vocab files: one header line per section ("#terms ..." / "#contexts ...")
// followed by "key \t count" lines.
inline void save_vocab(std::ostream& out, const Vocabulary& v) {
  out << "#terms kept=" << v.terms.size() << " dropped_types=" << v.dropped_term_types
      << " dropped_tokens=" << v.dropped_term_tokens << " total=" << v.total_term_tokens
      << " min_count=" << v.min_count_term << '\n';
  for (const VocabEntry& e : v.terms) out << e.key << '\t' << e.count << '\n';
  out << "#contexts kept=" << v.contexts.size() << " dropped_types=" << v.dropped_context_types
      << " dropped_tokens=" << v.dropped_context_tokens << " total=" << v.total_context_tokens
      << " min_count=" << v.min_count_context << '\n';
  for (const VocabEntry& e : v.contexts) out << e.key << '\t' << e.count << '\n';
}

namespace detail {

struct VocabHeader {
  std::uint64_t kept = 0, dropped_types = 0, dropped_tokens = 0, total = 0, min_count = 1;
};

inline VocabHeader parse_vocab_header(const std::string& line, std::size_t line_no,
                                      std::string_view section) {
  VocabHeader h;
  std::string expect = "#" + std::string(section);
  auto fields = split(std::string_view(line), ' ');
  if (fields.empty() || fields[0] != expect)
    throw parse_error(line_no, "expected vocab section header '" + expect + "'");
  for (std::size_t i = 1; i < fields.size(); ++i) {
    auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) throw parse_error(line_no, "bad header field");
    std::string_view k = fields[i].substr(0, eq), val = fields[i].substr(eq + 1);
    auto parsed = parse_u64(val);
    if (!parsed) throw parse_error(line_no, "bad header value");
    std::uint64_t n = *parsed;
    if (k == "kept") h.kept = n;
    else if (k == "dropped_types") h.dropped_types = n;
    else if (k == "dropped_tokens") h.dropped_tokens = n;
    else if (k == "total") h.total = n;
    else if (k == "min_count") h.min_count = n;
    else throw parse_error(line_no, "unknown header field '" + std::string(k) + "'");
  }
  return h;
}

}  // namespace detail

inline Vocabulary load_vocab(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  auto read_section = [&](std::string_view section, std::vector<VocabEntry>& entries,
                          detail::VocabHeader& header) {
    if (!std::getline(in, line)) throw parse_error(line_no + 1, "missing vocab section header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = detail::parse_vocab_header(line, line_no, section);
    entries.reserve(header.kept);
    for (std::uint64_t i = 0; i < header.kept; ++i) {
      if (!std::getline(in, line)) throw parse_error(line_no + 1, "vocab file truncated");
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0)
        throw parse_error(line_no, "vocab line needs 'key<TAB>count'");
      auto count = detail::parse_u64(std::string_view(line).substr(tab + 1));
      if (!count) throw parse_error(line_no, "bad count");
      entries.push_back({line.substr(0, tab), *count});
    }
  };
  detail::VocabHeader terms_h, contexts_h;
  read_section("terms", v.terms, terms_h);
  read_section("contexts", v.contexts, contexts_h);
  v.dropped_term_types = terms_h.dropped_types;
  v.dropped_term_tokens = terms_h.dropped_tokens;
  v.total_term_tokens = terms_h.total;
  v.min_count_term = terms_h.min_count;
  v.dropped_context_types = contexts_h.dropped_types;
  v.dropped_context_tokens = contexts_h.dropped_tokens;
  v.total_context_tokens = contexts_h.total;
  v.min_count_context = contexts_h.min_count;
  v.rebuild_index();
  return v;
}

}  // namespace selpref
