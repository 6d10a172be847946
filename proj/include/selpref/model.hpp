// Embedding model persistence and query surface: plausibility scores and
// exhaustive nearest-neighbor search over the trained space.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "selpref/errors.hpp"
#include "selpref/hyperparams.hpp"
#include "selpref/io.hpp"
#include "selpref/vocab.hpp"

namespace selpref {

struct ModelMetadata {
  Hyperparams hp;
  double neg_alpha = 0.75;
  std::uint64_t corpus_fingerprint = 0;
};

struct EmbeddingModel {
  std::uint32_t d = 0;
  Vocabulary vocab;
  std::vector<float> w;  // |terms| x d, row-major: argument/phrase/type vectors
  std::vector<float> c;  // |contexts| x d: predicate-slot vectors
  ModelMetadata meta;

  std::span<const float> term_vector(std::uint32_t i) const {
    return {w.data() + static_cast<std::size_t>(i) * d, d};
  }
  std::span<const float> context_vector(std::uint32_t i) const {
    return {c.data() + static_cast<std::size_t>(i) * d, d};
  }
};

// Cosine similarity clamped to [-1, 1]; nullopt on zero-norm input (a
// sentinel distinct from any score).
template <typename A, typename B>
std::optional<double> cosine(const A& u, const B& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  auto iu = std::begin(u);
  auto iv = std::begin(v);
  for (; iu != std::end(u) && iv != std::end(v); ++iu, ++iv) {
    double a = static_cast<double>(*iu), b = static_cast<double>(*iv);
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) return std::nullopt;
  double s = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(s, -1.0, 1.0);
}

// cosine(W[term], C[slot]); nullopt = "unknown" (out of vocabulary or
// zero-norm vector). A slot without '@' is a caller error.
inline std::optional<double> plausibility(const EmbeddingModel& model, const std::string& term,
                                          const std::string& slot) {
  if (slot.find('@') == std::string::npos)
    throw std::invalid_argument("slot must be 'predicate@relation': '" + slot + "'");
  auto ti = model.vocab.term_index(term);
  auto ci = model.vocab.context_index(slot);
  if (!ti || !ci) return std::nullopt;
  return cosine(model.term_vector(*ti), model.context_vector(*ci));
}

// Partition of the term vocabulary by key shape. Slot-shaped keys never come
// out of the extractor, so for models built by this toolkit `slots` is empty
// and the slot catalog of a query is served from the context matrix.
struct Catalog {
  std::vector<std::uint32_t> slots;         // term keys containing '@'
  std::vector<std::uint32_t> entity_types;  // keys starting with '/'
  std::vector<std::uint32_t> phrases;       // everything else
};

inline Catalog build_catalog(const Vocabulary& vocab) {
  Catalog cat;
  for (std::uint32_t i = 0; i < vocab.terms.size(); ++i) {
    const std::string& key = vocab.terms[i].key;
    if (key.find('@') != std::string::npos)
      cat.slots.push_back(i);
    else if (!key.empty() && key.front() == '/')
      cat.entity_types.push_back(i);
    else
      cat.phrases.push_back(i);
  }
  return cat;
}

struct ScoredKey {
  std::string key;
  double score = 0.0;
  bool operator==(const ScoredKey&) const = default;
};

struct NeighborResult {
  std::string query;
  std::vector<ScoredKey> slots;
  std::vector<ScoredKey> entity_types;
  std::vector<ScoredKey> phrases;
};

namespace detail {

// Exhaustive scan of `rows` against the query vector; top-k by (score desc,
// key asc), query key and zero-norm rows excluded.
template <typename KeyOf, typename RowOf>
std::vector<ScoredKey> top_k(std::span<const float> query, const std::vector<std::uint32_t>& rows,
                             KeyOf&& key_of, RowOf&& row_of, const std::string& exclude,
                             std::size_t k) {
  std::vector<ScoredKey> scored;
  scored.reserve(rows.size());
  for (std::uint32_t r : rows) {
    const std::string& key = key_of(r);
    if (key == exclude) continue;
    auto s = cosine(query, row_of(r));
    if (!s) continue;
    scored.push_back({key, *s});
  }
  auto cmp = [](const ScoredKey& a, const ScoredKey& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  };
  if (scored.size() > k) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), cmp);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), cmp);
  }
  return scored;
}

}  // namespace detail

// Three-catalog neighbor query. A slot query ranks fellow slots within C and
// plausible fillers across W; a term query ranks plausible slots across C and
// similar terms within W.
inline NeighborResult neighbors(const EmbeddingModel& model, const std::string& query,
                                std::size_t k) {
  Catalog cat = build_catalog(model.vocab);
  std::vector<std::uint32_t> all_contexts(model.vocab.contexts.size());
  for (std::uint32_t i = 0; i < all_contexts.size(); ++i) all_contexts[i] = i;

  auto term_key = [&](std::uint32_t i) -> const std::string& { return model.vocab.terms[i].key; };
  auto context_key = [&](std::uint32_t i) -> const std::string& {
    return model.vocab.contexts[i].key;
  };
  auto term_row = [&](std::uint32_t i) { return model.term_vector(i); };
  auto context_row = [&](std::uint32_t i) { return model.context_vector(i); };

  NeighborResult res;
  res.query = query;

  auto ci = model.vocab.context_index(query);
  if (ci) {
    std::span<const float> q = model.context_vector(*ci);
    res.slots = detail::top_k(q, all_contexts, context_key, context_row, query, k);
    res.entity_types = detail::top_k(q, cat.entity_types, term_key, term_row, query, k);
    res.phrases = detail::top_k(q, cat.phrases, term_key, term_row, query, k);
    return res;
  }
  auto ti = model.vocab.term_index(query);
  if (ti) {
    std::span<const float> q = model.term_vector(*ti);
    res.slots = detail::top_k(q, all_contexts, context_key, context_row, query, k);
    res.entity_types = detail::top_k(q, cat.entity_types, term_key, term_row, query, k);
    res.phrases = detail::top_k(q, cat.phrases, term_key, term_row, query, k);
    return res;
  }
  throw data_error("query '" + query +
                   "' not found in any catalog (predicate slots, entity types, phrases)");
}

// ---- Binary model format ----------------------------------------------
// magic "SPEM", u32 version, u32 d, u64 |terms|, u64 |contexts|,
// length-prefixed metadata string, vocab entries (u32 key length, key bytes,
// u64 count) for terms then contexts, W then C as little-endian f32 rows,
// trailing CRC32 of everything before it.

inline constexpr char kModelMagic[4] = {'S', 'P', 'E', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline std::string metadata_to_string(const Vocabulary& v, const ModelMetadata& m) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << "dimension=" << m.hp.dimension << "\nnegatives=" << m.hp.negatives
     << "\nepochs=" << m.hp.epochs << "\ninitial_lr=" << m.hp.initial_lr
     << "\nmin_lr=" << m.hp.resolved_min_lr() << "\nseed=" << m.hp.seed
     << "\nmode=" << to_string(m.hp.mode) << "\nthreads=" << m.hp.threads
     << "\nsubsample_t=" << m.hp.subsample_t << "\nneg_alpha=" << m.neg_alpha
     << "\ncorpus_fingerprint=" << m.corpus_fingerprint
     << "\ntotal_term_tokens=" << v.total_term_tokens
     << "\ntotal_context_tokens=" << v.total_context_tokens
     << "\ndropped_term_tokens=" << v.dropped_term_tokens
     << "\ndropped_context_tokens=" << v.dropped_context_tokens
     << "\ndropped_term_types=" << v.dropped_term_types
     << "\ndropped_context_types=" << v.dropped_context_types
     << "\nmin_count_term=" << v.min_count_term << "\nmin_count_context=" << v.min_count_context
     << "\n";
  return os.str();
}

inline void metadata_from_string(const std::string& s, Vocabulary& v, ModelMetadata& m) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "dimension") m.hp.dimension = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "negatives") m.hp.negatives = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "epochs") m.hp.epochs = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "initial_lr") m.hp.initial_lr = std::stod(val);
    else if (key == "min_lr") m.hp.min_lr = std::stod(val);
    else if (key == "seed") m.hp.seed = std::stoull(val);
    else if (key == "mode") m.hp.mode = train_mode_from_string(val);
    else if (key == "threads") m.hp.threads = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "subsample_t") m.hp.subsample_t = std::stod(val);
    else if (key == "neg_alpha") m.neg_alpha = std::stod(val);
    else if (key == "corpus_fingerprint") m.corpus_fingerprint = std::stoull(val);
    else if (key == "total_term_tokens") v.total_term_tokens = std::stoull(val);
    else if (key == "total_context_tokens") v.total_context_tokens = std::stoull(val);
    else if (key == "dropped_term_tokens") v.dropped_term_tokens = std::stoull(val);
    else if (key == "dropped_context_tokens") v.dropped_context_tokens = std::stoull(val);
    else if (key == "dropped_term_types") v.dropped_term_types = std::stoull(val);
    else if (key == "dropped_context_types") v.dropped_context_types = std::stoull(val);
    else if (key == "min_count_term") v.min_count_term = std::stoull(val);
    else if (key == "min_count_context") v.min_count_context = std::stoull(val);
  }
}

inline void put_entries(std::string& out, const std::vector<VocabEntry>& entries) {
  for (const VocabEntry& e : entries) {
    le::put_u32(out, static_cast<std::uint32_t>(e.key.size()));
    le::put_bytes(out, e.key.data(), e.key.size());
    le::put_u64(out, e.count);
  }
}

}  // namespace detail

inline void save_model(std::ostream& out, const EmbeddingModel& m) {
  std::string buf;
  buf.reserve(64 + m.w.size() * 4 + m.c.size() * 4);
  buf.append(kModelMagic, 4);
  le::put_u32(buf, kModelVersion);
  le::put_u32(buf, m.d);
  le::put_u64(buf, m.vocab.terms.size());
  le::put_u64(buf, m.vocab.contexts.size());
  std::string meta = detail::metadata_to_string(m.vocab, m.meta);
  le::put_u32(buf, static_cast<std::uint32_t>(meta.size()));
  buf += meta;
  detail::put_entries(buf, m.vocab.terms);
  detail::put_entries(buf, m.vocab.contexts);
  for (float f : m.w) le::put_f32(buf, f);
  for (float f : m.c) le::put_f32(buf, f);
  std::uint32_t crc = crc32_update(0, buf.data(), buf.size());
  le::put_u32(buf, crc);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw io_error("model write failed");
}

inline void save_model(const std::string& path, const EmbeddingModel& m) {
  auto out = open_output(path);
  save_model(*out, m);
}

inline EmbeddingModel load_model(std::istream& in) {
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + 4 + 4) throw model_truncation_error("model file truncated");
  if (buf.compare(0, 4, kModelMagic, 4) != 0)
    throw model_version_error("not a model file (bad magic)");
  // Checksum first: a bad trailer invalidates everything else.
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4 + i]))
              << (8 * i);
  std::uint32_t computed = crc32_update(0, buf.data(), buf.size() - 4);
  if (stored != computed) throw model_checksum_error("model checksum mismatch");

  le::Cursor cur{buf.data() + 4, buf.data() + buf.size() - 4};
  std::uint32_t version = cur.u32();
  if (version != kModelVersion)
    throw model_version_error("unsupported model version " + std::to_string(version));
  EmbeddingModel m;
  m.d = cur.u32();
  std::uint64_t n_terms = cur.u64();
  std::uint64_t n_contexts = cur.u64();
  std::uint32_t meta_len = cur.u32();
  detail::metadata_from_string(cur.bytes(meta_len), m.vocab, m.meta);
  auto read_entries = [&](std::uint64_t n, std::vector<VocabEntry>& entries) {
    entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint32_t len = cur.u32();
      std::string key = cur.bytes(len);
      std::uint64_t count = cur.u64();
      entries.push_back({std::move(key), count});
    }
  };
  read_entries(n_terms, m.vocab.terms);
  read_entries(n_contexts, m.vocab.contexts);
  m.vocab.rebuild_index();
  m.w.resize(n_terms * m.d);
  for (float& f : m.w) f = cur.f32();
  m.c.resize(n_contexts * m.d);
  for (float& f : m.c) f = cur.f32();
  if (cur.p != cur.end) throw model_truncation_error("model file has trailing bytes");
  return m;
}

inline EmbeddingModel load_model(const std::string& path) {
  auto in = open_input(path);
  return load_model(*in);
}

// word2vec-style text export: per section a "<rows> <dim>" header, then
// "key v1 ... vd" lines; W rows under "#terms", C rows under "#contexts".
inline void export_text(std::ostream& out, const EmbeddingModel& m) {
  out << std::setprecision(9);
  auto dump = [&](const char* name, const std::vector<VocabEntry>& entries,
                  const std::vector<float>& mat) {
    out << name << ' ' << entries.size() << ' ' << m.d << '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out << entries[i].key;
      for (std::uint32_t j = 0; j < m.d; ++j) out << ' ' << mat[i * m.d + j];
      out << '\n';
    }
  };
  dump("#terms", m.vocab.terms, m.w);
  dump("#contexts", m.vocab.contexts, m.c);
}

// Reads the text export back into a queryable model. Counts and training
// metadata are not part of the text format and default to 1 / empty.
inline EmbeddingModel import_text(std::istream& in) {
  EmbeddingModel m;
  std::string line;
  std::size_t line_no = 0;
  auto read_section = [&](const char* name, std::vector<VocabEntry>& entries,
                          std::vector<float>& mat) {
    if (!std::getline(in, line)) throw parse_error(line_no + 1, "missing text model header");
    ++line_no;
    std::istringstream hs(line);
    std::string tag;
    std::uint64_t rows = 0;
    std::uint32_t dim = 0;
    if (!(hs >> tag >> rows >> dim) || tag != name)
      throw parse_error(line_no, std::string("expected '") + name + " <rows> <dim>' header");
    if (m.d == 0) m.d = dim;
    if (dim != m.d) throw parse_error(line_no, "dimension mismatch between sections");
    entries.reserve(rows);
    mat.reserve(rows * m.d);
    for (std::uint64_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw parse_error(line_no + 1, "text model truncated");
      ++line_no;
      std::istringstream ls(line);
      std::string key;
      if (!(ls >> key)) throw parse_error(line_no, "missing key");
      entries.push_back({key, 1});
      for (std::uint32_t j = 0; j < m.d; ++j) {
        float v;
        if (!(ls >> v)) throw parse_error(line_no, "expected " + std::to_string(m.d) + " values");
        mat.push_back(v);
      }
    }
  };
  read_section("#terms", m.vocab.terms, m.w);
  read_section("#contexts", m.vocab.contexts, m.c);
  m.vocab.total_term_tokens = m.vocab.terms.size();
  m.vocab.total_context_tokens = m.vocab.contexts.size();
  m.vocab.rebuild_index();
  return m;
}

}  // namespace selpref
