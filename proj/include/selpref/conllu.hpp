// CoNLL-U reader/writer for dependency-annotated corpora, plus dependency
// graph construction over the basic and enhanced layers.
#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "selpref/errors.hpp"

namespace selpref {

struct EnhancedHead {
  std::uint32_t governor = 0;  // 0 = root
  std::string relation;
  bool operator==(const EnhancedHead&) const = default;
};

struct Token {
  std::uint32_t index = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;          // empty when annotated "_"
  std::uint32_t head = 0;    // 0 = root
  std::string deprel;
  std::vector<EnhancedHead> enhanced_heads;  // from the DEPS column
  std::string entity_type;   // fine-grained type path, empty when absent
  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string sentence_id;
  std::string doc_id;
  bool operator==(const Sentence&) const = default;
};

struct DepEdge {
  std::uint32_t governor = 0;  // 0 = root attachment
  std::uint32_t dependent = 0;
  std::string relation;
  auto operator<=>(const DepEdge&) const = default;
};

enum class GraphLayer { Basic, Enhanced };

struct DepGraph {
  std::uint32_t num_tokens = 0;
  GraphLayer layer = GraphLayer::Basic;
  std::vector<DepEdge> edges;  // sorted by (dependent, governor, relation), unique
};

struct ParseOptions {
  // false: throw parse_error on the first malformed line. true: skip the
  // whole offending sentence and count.
  bool skip_malformed = false;
};

struct ParseStats {
  std::uint64_t sentences = 0;
  std::uint64_t malformed_lines = 0;
  std::uint64_t skipped_sentences = 0;
  std::uint64_t multiword_lines = 0;
  std::uint64_t empty_node_lines = 0;
  std::uint64_t dropped_enhanced_refs = 0;  // DEPS edges naming empty nodes
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

// Overflow-checked digit parsing; nullopt on overflow or non-digits.
inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (!all_digits(s)) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
    if (v > (UINT64_MAX - digit) / 10) return std::nullopt;
    v = v * 10 + digit;
  }
  return v;
}

inline std::optional<std::uint32_t> parse_u32(std::string_view s) {
  auto v = parse_u64(s);
  if (!v || *v > UINT32_MAX) return std::nullopt;
  return static_cast<std::uint32_t>(*v);
}

inline bool is_multiword_id(std::string_view s) {
  auto dash = s.find('-');
  if (dash == std::string_view::npos) return false;
  return all_digits(s.substr(0, dash)) && all_digits(s.substr(dash + 1));
}

inline bool is_empty_node_id(std::string_view s) {
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return false;
  return all_digits(s.substr(0, dot)) && all_digits(s.substr(dot + 1));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Streaming CoNLL-U reader. One Sentence per blank-line-separated block;
// multiword ranges ("1-2") and empty nodes ("5.1") are tolerated but not kept.
class ConlluReader {
 public:
  explicit ConlluReader(std::istream& in, ParseOptions opts = {}) : in_(in), opts_(opts) {}

  const ParseStats& stats() const { return stats_; }

  std::optional<Sentence> next() {
    while (true) {
      auto block = read_block();
      if (!block) return std::nullopt;
      if (block->tokens.empty()) {
        if (block->bad) ++stats_.skipped_sentences;
        continue;  // comment-only block or fully skipped
      }
      if (block->bad) {
        ++stats_.skipped_sentences;
        continue;
      }
      if (!validate(*block)) {
        ++stats_.skipped_sentences;
        continue;
      }
      ++stats_.sentences;
      Sentence s;
      s.tokens = std::move(block->tokens);
      s.sentence_id = std::move(block->sent_id);
      s.doc_id = doc_id_;
      return s;
    }
  }

 private:
  struct Block {
    std::vector<Token> tokens;
    std::vector<std::size_t> lines;  // source line per token, for diagnostics
    std::string sent_id;
    bool bad = false;
    bool saw_content = false;
  };

  void fail(std::size_t line, const std::string& msg, Block& b) {
    ++stats_.malformed_lines;
    if (!opts_.skip_malformed) throw parse_error(line, msg);
    b.bad = true;
  }

  std::optional<Block> read_block() {
    Block b;
    std::string line;
    bool in_block = false;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        if (in_block) return b;
        continue;
      }
      in_block = true;
      b.saw_content = true;
      if (line[0] == '#') {
        handle_comment(line, b);
        continue;
      }
      parse_token_line(line, b);
    }
    if (!in_block) return std::nullopt;
    return b;
  }

  void handle_comment(const std::string& line, Block& b) {
    std::string_view s(line);
    s.remove_prefix(1);
    s = detail::trim(s);
    auto keyed = [&](std::string_view key) {
      if (s.substr(0, key.size()) != key) return false;
      std::string_view rest = detail::trim(s.substr(key.size()));
      return rest.empty() || rest.front() == '=';
    };
    auto value = [&] {
      auto eq = s.find('=');
      return eq == std::string_view::npos ? std::string()
                                          : std::string(detail::trim(s.substr(eq + 1)));
    };
    if (keyed("sent_id")) b.sent_id = value();
    else if (keyed("newdoc id")) doc_id_ = value();
    else if (s == "newdoc") doc_id_.clear();
  }

  void parse_token_line(const std::string& line, Block& b) {
    auto cols = detail::split(line, '\t');
    if (cols.size() != 10) {
      fail(line_no_, "expected 10 tab-separated columns, got " + std::to_string(cols.size()), b);
      return;
    }
    std::string_view id = cols[0];
    if (detail::is_multiword_id(id)) {
      ++stats_.multiword_lines;
      return;
    }
    if (detail::is_empty_node_id(id)) {
      ++stats_.empty_node_lines;
      return;
    }
    auto id_val = detail::parse_u32(id);
    if (!id_val || *id_val == 0) {
      fail(line_no_, "bad token id '" + std::string(id) + "'", b);
      return;
    }
    Token t;
    t.index = *id_val;
    t.form = std::string(cols[1]);
    // Lemma "_" falls back to the lowercased form; lemmas are context keys.
    t.lemma = cols[2] == "_" ? detail::lowercase(cols[1]) : std::string(cols[2]);
    t.upos = cols[3] == "_" ? std::string() : std::string(cols[3]);
    auto head_val = detail::parse_u32(cols[6]);
    if (!head_val) {
      fail(line_no_, "non-numeric head '" + std::string(cols[6]) + "'", b);
      return;
    }
    t.head = *head_val;
    if (cols[7] == "_" || cols[7].empty()) {
      fail(line_no_, "missing deprel", b);
      return;
    }
    t.deprel = std::string(cols[7]);
    if (t.head == t.index) {
      fail(line_no_, "token " + std::string(id) + " is its own head", b);
      return;
    }
    if (cols[8] != "_" && !cols[8].empty()) {
      for (auto item : detail::split(cols[8], '|')) {
        auto colon = item.find(':');
        if (colon == std::string_view::npos || colon + 1 == item.size()) {
          fail(line_no_, "malformed DEPS entry '" + std::string(item) + "'", b);
          return;
        }
        std::string_view gov = item.substr(0, colon);
        std::string_view rel = item.substr(colon + 1);
        if (detail::is_empty_node_id(gov)) {
          ++stats_.dropped_enhanced_refs;  // cannot reference a skipped node
          continue;
        }
        auto gov_val = detail::parse_u32(gov);
        if (!gov_val) {
          fail(line_no_, "bad DEPS governor '" + std::string(gov) + "'", b);
          return;
        }
        EnhancedHead eh;
        eh.governor = *gov_val;
        eh.relation = std::string(rel);
        if (eh.governor == t.index) {
          fail(line_no_, "DEPS self-loop on token " + std::string(id), b);
          return;
        }
        t.enhanced_heads.push_back(std::move(eh));
      }
    }
    if (cols[9] != "_" && !cols[9].empty()) {
      for (auto item : detail::split(cols[9], '|')) {
        constexpr std::string_view kKey = "EntityType=";
        if (item.substr(0, kKey.size()) == kKey) t.entity_type = std::string(item.substr(kKey.size()));
      }
    }
    b.tokens.push_back(std::move(t));
    b.lines.push_back(line_no_);
  }

  bool validate(Block& b) {
    std::uint32_t n = static_cast<std::uint32_t>(b.tokens.size());
    for (std::size_t i = 0; i < b.tokens.size(); ++i) {
      const Token& t = b.tokens[i];
      std::size_t line = b.lines[i];
      if (t.index != i + 1) {
        fail(line, "token indices not consecutive (expected " + std::to_string(i + 1) + ", got " +
                       std::to_string(t.index) + ")",
             b);
        return false;
      }
      if (t.head > n) {
        fail(line, "head " + std::to_string(t.head) + " out of range (sentence has " +
                       std::to_string(n) + " tokens)",
             b);
        return false;
      }
      for (const EnhancedHead& eh : t.enhanced_heads) {
        if (eh.governor > n) {
          fail(line, "DEPS governor " + std::to_string(eh.governor) + " out of range", b);
          return false;
        }
      }
    }
    return true;
  }

  std::istream& in_;
  ParseOptions opts_;
  ParseStats stats_;
  std::string doc_id_;
  std::size_t line_no_ = 0;
};

inline std::vector<Sentence> parse_conllu(std::istream& in, ParseOptions opts = {},
                                          ParseStats* stats = nullptr) {
  ConlluReader reader(in, opts);
  std::vector<Sentence> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  if (stats) *stats = reader.stats();
  return out;
}

// Debug serializer. Emits the kept tokens back as 10-column CoNLL-U so that
// parse -> write -> parse is the identity on Sentence values.
inline void write_conllu(std::ostream& out, const Sentence& s) {
  if (!s.doc_id.empty()) out << "# newdoc id = " << s.doc_id << '\n';
  if (!s.sentence_id.empty()) out << "# sent_id = " << s.sentence_id << '\n';
  for (const Token& t : s.tokens) {
    out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << (t.upos.empty() ? "_" : t.upos)
        << '\t' << "_\t_\t" << t.head << '\t' << t.deprel << '\t';
    if (t.enhanced_heads.empty()) {
      out << '_';
    } else {
      for (std::size_t i = 0; i < t.enhanced_heads.size(); ++i) {
        if (i) out << '|';
        out << t.enhanced_heads[i].governor << ':' << t.enhanced_heads[i].relation;
      }
    }
    out << '\t' << (t.entity_type.empty() ? "_" : "EntityType=" + t.entity_type) << '\n';
  }
  out << '\n';
}

namespace detail {

inline void check_edge(const Sentence& s, const Token& t, std::uint32_t governor) {
  if (governor > s.tokens.size())
    throw data_error("token " + std::to_string(t.index) + " ('" + t.form + "'): governor " +
                     std::to_string(governor) + " out of range");
  if (governor == t.index)
    throw data_error("token " + std::to_string(t.index) + " ('" + t.form + "'): self-loop");
}

inline void finish_edges(DepGraph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

}  // namespace detail

inline DepGraph basic_graph(const Sentence& s) {
  DepGraph g;
  g.num_tokens = static_cast<std::uint32_t>(s.tokens.size());
  g.layer = GraphLayer::Basic;
  for (const Token& t : s.tokens) {
    detail::check_edge(s, t, t.head);
    g.edges.push_back({t.head, t.index, t.deprel});
  }
  detail::finish_edges(g);
  return g;
}

// Union of all DEPS edges when any token carries them; otherwise the basic
// tree. No edges are invented beyond what the input encodes.
inline DepGraph enhanced_graph(const Sentence& s) {
  bool any = false;
  for (const Token& t : s.tokens)
    if (!t.enhanced_heads.empty()) {
      any = true;
      break;
    }
  if (!any) return basic_graph(s);
  DepGraph g;
  g.num_tokens = static_cast<std::uint32_t>(s.tokens.size());
  g.layer = GraphLayer::Enhanced;
  for (const Token& t : s.tokens) {
    for (const EnhancedHead& eh : t.enhanced_heads) {
      detail::check_edge(s, t, eh.governor);
      if (eh.relation.empty())
        throw data_error("token " + std::to_string(t.index) + ": empty enhanced relation");
      g.edges.push_back({eh.governor, t.index, eh.relation});
    }
  }
  detail::finish_edges(g);
  return g;
}

}  // namespace selpref
