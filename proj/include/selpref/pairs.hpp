// Term-context pair extraction: turns dependency graphs into (argument,
// predicate@relation) training pairs, with noun-phrase terms and
// entity-type-augmented duplicates.
#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selpref/conllu.hpp"
#include "selpref/errors.hpp"

namespace selpref {

struct TermContextPair {
  std::string term;
  std::string context;  // "predicate@relation"
  std::uint64_t weight = 1;
  bool operator==(const TermContextPair&) const = default;
  auto operator<=>(const TermContextPair&) const = default;
};

enum class PredicateKey { Form, Lemma };

struct ExtractionConfig {
  std::set<std::string> argument_pos_whitelist{"NOUN", "PROPN", "PRON"};
  std::set<std::string> relation_blacklist{"punct", "det", "case", "cc", "mark"};
  PredicateKey predicate_key = PredicateKey::Form;
  bool emit_phrase_terms = true;
  bool emit_head_terms = false;
  bool include_pronouns = false;  // PRON stays filtered even while whitelisted
  std::uint32_t max_phrase_tokens = 4;

  void validate() const {
    if (!emit_phrase_terms && !emit_head_terms)
      throw config_error("extraction: at least one of phrase terms / head terms must be enabled");
    if (max_phrase_tokens == 0) throw config_error("extraction: max_phrase_tokens must be >= 1");
  }
};

// Maps entity surface strings (underscore-joined) to fine-grained type paths.
class Gazetteer {
 public:
  void add(const std::string& surface, std::vector<std::string> types) {
    entries_.push_back({surface, std::move(types)});
    std::size_t idx = entries_.size() - 1;
    exact_.emplace(surface, idx);
    lower_.emplace(detail::lowercase(surface), idx);  // first occurrence wins
  }

  // Exact match first, case-insensitive fallback.
  const std::vector<std::string>* lookup(const std::string& surface) const {
    if (auto it = exact_.find(surface); it != exact_.end()) return &entries_[it->second].types;
    if (auto it = lower_.find(detail::lowercase(surface)); it != lower_.end())
      return &entries_[it->second].types;
    return nullptr;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string surface;
    std::vector<std::string> types;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::size_t> lower_;
};

// Gazetteer file: "surface \t /type[,/type...]" per line, '#' comments.
inline Gazetteer load_gazetteer(std::istream& in) {
  Gazetteer g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw parse_error(line_no, "gazetteer line needs 'surface<TAB>/type[,/type...]'");
    std::string surface = line.substr(0, tab);
    std::vector<std::string> types;
    for (auto part : detail::split(std::string_view(line).substr(tab + 1), ',')) {
      part = detail::trim(part);
      if (part.empty() || part.front() != '/')
        throw parse_error(line_no, "type path must start with '/': '" + std::string(part) + "'");
      types.push_back(std::string(part));
    }
    g.add(surface, std::move(types));
  }
  return g;
}

namespace detail {

inline std::string_view base_relation(std::string_view rel) {
  auto colon = rel.find(':');
  return colon == std::string_view::npos ? rel : rel.substr(0, colon);
}

inline bool relation_blacklisted(const std::set<std::string>& blacklist, std::string_view rel) {
  if (blacklist.count(std::string(rel))) return true;
  return blacklist.count(std::string(base_relation(rel))) > 0;
}

inline bool np_internal_relation(std::string_view rel) {
  std::string_view base = base_relation(rel);
  return base == "amod" || base == "compound" || base == "nummod" || base == "flat";
}

// Keys and terms never carry whitespace; multiword content joins with '_'.
inline std::string sanitize(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c == ' ' || c == '\t') c = '_';
  return out;
}

}  // namespace detail

// Underscore-joined yield of the head's contiguous noun-phrase subtree.
// Only amod/compound/nummod/flat dependents are phrase-internal; det is
// excluded. Falls back to the head form alone when the phrase would exceed
// max_tokens.
inline std::string noun_phrase_yield(const DepGraph& graph, const Sentence& sentence,
                                     std::uint32_t head, std::uint32_t max_tokens) {
  std::vector<std::vector<std::uint32_t>> children(graph.num_tokens + 1);
  for (const DepEdge& e : graph.edges)
    if (e.governor != 0 && detail::np_internal_relation(e.relation))
      children[e.governor].push_back(e.dependent);

  std::vector<bool> in_phrase(graph.num_tokens + 1, false);
  std::vector<std::uint32_t> stack{head};
  in_phrase[head] = true;
  while (!stack.empty()) {
    std::uint32_t idx = stack.back();
    stack.pop_back();
    for (std::uint32_t child : children[idx]) {
      if (!in_phrase[child]) {
        in_phrase[child] = true;
        stack.push_back(child);
      }
    }
  }

  // Keep the contiguous index run around the head.
  std::uint32_t lo = head, hi = head;
  while (lo > 1 && in_phrase[lo - 1]) --lo;
  while (hi < graph.num_tokens && in_phrase[hi + 1]) ++hi;

  if (hi - lo + 1 > max_tokens) return detail::sanitize(sentence.tokens[head - 1].form);

  std::string out;
  for (std::uint32_t i = lo; i <= hi; ++i) {
    if (!out.empty()) out += '_';
    out += detail::sanitize(sentence.tokens[i - 1].form);
  }
  return out;
}

// One pass over the graph edges in sentence order (by dependent position).
// Per kept edge emits the head-lemma term and/or the phrase term, each paired
// with "predicate@relation".
inline std::vector<TermContextPair> extract_pairs(const DepGraph& graph, const Sentence& sentence,
                                                  const ExtractionConfig& config) {
  config.validate();
  std::vector<TermContextPair> out;
  for (const DepEdge& e : graph.edges) {
    if (e.governor == 0) continue;  // root attachment has no predicate
    const Token& dep = sentence.tokens[e.dependent - 1];
    const Token& gov = sentence.tokens[e.governor - 1];
    if (!config.argument_pos_whitelist.count(dep.upos)) continue;
    if (dep.upos == "PRON" && !config.include_pronouns) continue;
    if (detail::relation_blacklisted(config.relation_blacklist, e.relation)) continue;
    std::string key = detail::sanitize(config.predicate_key == PredicateKey::Form ? gov.form
                                                                                  : gov.lemma);
    if (key.empty() || key.find('@') != std::string::npos) continue;
    std::string context = key + "@" + e.relation;
    if (config.emit_head_terms) {
      std::string term = detail::sanitize(dep.lemma);
      if (!term.empty()) out.push_back({std::move(term), context, 1});
    }
    if (config.emit_phrase_terms) {
      std::string term = noun_phrase_yield(graph, sentence, e.dependent, config.max_phrase_tokens);
      if (!term.empty()) out.push_back({std::move(term), context, 1});
    }
  }
  return out;
}

// Adds one extra pair per resolved entity type, keeping every original pair.
// Resolution prefers per-token entity_type annotations (matched on form or
// lemma), then the gazetteer. Type pairs follow their source pair.
inline std::vector<TermContextPair> augment_with_types(const std::vector<TermContextPair>& pairs,
                                                       const Sentence& sentence,
                                                       const Gazetteer& gazetteer) {
  std::unordered_map<std::string, const std::string*> annotated;
  for (const Token& t : sentence.tokens) {
    if (t.entity_type.empty()) continue;
    annotated.emplace(detail::sanitize(t.form), &t.entity_type);
    annotated.emplace(detail::sanitize(t.lemma), &t.entity_type);
  }
  std::vector<TermContextPair> out;
  out.reserve(pairs.size());
  for (const TermContextPair& p : pairs) {
    out.push_back(p);
    if (auto it = annotated.find(p.term); it != annotated.end()) {
      out.push_back({*it->second, p.context, p.weight});
      continue;
    }
    if (const auto* types = gazetteer.lookup(p.term)) {
      for (const std::string& type : *types) out.push_back({type, p.context, p.weight});
    }
  }
  return out;
}

// Pair files: "term \t context \t count" per line, UTF-8, optionally gzipped.
inline void write_pairs(std::ostream& out, const std::vector<TermContextPair>& pairs) {
  for (const TermContextPair& p : pairs)
    out << p.term << '\t' << p.context << '\t' << p.weight << '\n';
}

inline TermContextPair parse_pair_line(std::string_view line, std::size_t line_no) {
  auto cols = detail::split(line, '\t');
  if (cols.size() != 3) throw parse_error(line_no, "pair line needs 'term<TAB>context<TAB>count'");
  TermContextPair p;
  p.term = std::string(cols[0]);
  p.context = std::string(cols[1]);
  if (p.term.empty()) throw parse_error(line_no, "empty term");
  if (std::count(p.context.begin(), p.context.end(), '@') != 1 || p.context.front() == '@' ||
      p.context.back() == '@')
    throw parse_error(line_no, "context must be 'predicate@relation': '" + p.context + "'");
  auto weight = detail::parse_u64(cols[2]);
  if (!weight || *weight == 0) throw parse_error(line_no, "count must be a positive integer");
  p.weight = *weight;
  return p;
}

// Calls fn(TermContextPair) per line; returns the number of pairs read.
template <typename Fn>
std::uint64_t for_each_pair(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(parse_pair_line(line, line_no));
    ++count;
  }
  return count;
}

inline std::vector<TermContextPair> read_pairs(std::istream& in) {
  std::vector<TermContextPair> out;
  for_each_pair(in, [&](TermContextPair p) { out.push_back(std::move(p)); });
  return out;
}

// Merges several pair streams into one training order. Interleaving is
// proportional to source size: the next pair comes from the source with the
// smallest schedule time (emitted + 0.5) / size, ties to the earlier source.
inline std::vector<TermContextPair> merge_pair_sources(
    std::vector<std::vector<TermContextPair>> sources, bool interleave) {
  if (sources.size() == 1) return std::move(sources.front());
  std::vector<TermContextPair> merged;
  std::size_t total = 0;
  for (const auto& s : sources) total += s.size();
  merged.reserve(total);
  if (!interleave) {
    for (auto& s : sources)
      merged.insert(merged.end(), std::make_move_iterator(s.begin()),
                    std::make_move_iterator(s.end()));
    return merged;
  }
  std::vector<std::size_t> emitted(sources.size(), 0);
  for (std::size_t step = 0; step < total; ++step) {
    std::size_t best = sources.size();
    double best_time = 0.0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (emitted[s] >= sources[s].size()) continue;
      double time = (static_cast<double>(emitted[s]) + 0.5) /
                    static_cast<double>(sources[s].size());
      if (best == sources.size() || time < best_time) {
        best = s;
        best_time = time;
      }
    }
    merged.push_back(std::move(sources[best][emitted[best]++]));
  }
  return merged;
}

// Sorted, merged view of a pair multiset; used by --aggregate and by tests.
inline std::vector<TermContextPair> aggregate_pairs(std::vector<TermContextPair> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const TermContextPair& a, const TermContextPair& b) {
    return std::tie(a.term, a.context) < std::tie(b.term, b.context);
  });
  std::vector<TermContextPair> out;
  for (TermContextPair& p : pairs) {
    if (!out.empty() && out.back().term == p.term && out.back().context == p.context)
      out.back().weight += p.weight;
    else
      out.push_back(std::move(p));
  }
  return out;
}

}  // namespace selpref
