// Skip-gram negative-sampling trainer over (term, context) pairs. Two
// contracts: a bit-reproducible single-threaded deterministic mode, and a
// hogwild-style parallel mode with unsynchronized lock-free updates.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "selpref/errors.hpp"
#include "selpref/hyperparams.hpp"
#include "selpref/model.hpp"
#include "selpref/rng.hpp"
#include "selpref/vocab.hpp"

namespace selpref {

// Numerically stable pieces; saturated inputs never produce NaN/Inf.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Loss and exact analytic gradients of the SGNS objective
//   loss = -log s(w.c) - sum_i log s(-w.c_i)
// for one positive context c and drawn negatives c_i.
struct SgnsGradients {
  double loss = 0.0;
  std::vector<double> grad_w;
  std::vector<double> grad_c;
  std::vector<std::vector<double>> grad_negs;
};

inline SgnsGradients sgns_loss_and_grad(std::span<const double> w, std::span<const double> c,
                                        const std::vector<std::vector<double>>& negs) {
  std::size_t d = w.size();
  SgnsGradients g;
  g.grad_w.assign(d, 0.0);
  g.grad_c.assign(d, 0.0);
  g.grad_negs.resize(negs.size());

  double dot = 0.0;
  for (std::size_t j = 0; j < d; ++j) dot += w[j] * c[j];
  g.loss = -log_sigmoid(dot);
  double coef = sigmoid(dot) - 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    g.grad_w[j] = coef * c[j];
    g.grad_c[j] = coef * w[j];
  }
  for (std::size_t i = 0; i < negs.size(); ++i) {
    const std::vector<double>& cn = negs[i];
    double dn = 0.0;
    for (std::size_t j = 0; j < d; ++j) dn += w[j] * cn[j];
    g.loss -= log_sigmoid(-dn);
    double cf = sigmoid(dn);
    g.grad_negs[i].assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      g.grad_negs[i][j] = cf * w[j];
      g.grad_w[j] += cf * cn[j];
    }
  }
  return g;
}

// One fused SGD step applying the gradients above to float rows in place.
// All c updates read the pre-update w; w is updated last. Returns the loss at
// the pre-update parameters. Dot products accumulate in double.
inline double sgns_step(std::uint32_t d, float* w, float* c, float* const* negs,
                        std::size_t n_negs, double lr, std::vector<double>& wdelta) {
  wdelta.assign(d, 0.0);
  double dot = 0.0;
  for (std::uint32_t j = 0; j < d; ++j) dot += static_cast<double>(w[j]) * c[j];
  double loss = -log_sigmoid(dot);
  double g_pos = (sigmoid(dot) - 1.0) * lr;
  for (std::uint32_t j = 0; j < d; ++j) {
    wdelta[j] += g_pos * c[j];
    c[j] -= static_cast<float>(g_pos * w[j]);
  }
  for (std::size_t i = 0; i < n_negs; ++i) {
    float* cn = negs[i];
    double dn = 0.0;
    for (std::uint32_t j = 0; j < d; ++j) dn += static_cast<double>(w[j]) * cn[j];
    loss -= log_sigmoid(-dn);
    double g_neg = sigmoid(dn) * lr;
    for (std::uint32_t j = 0; j < d; ++j) {
      wdelta[j] += g_neg * cn[j];
      cn[j] -= static_cast<float>(g_neg * w[j]);
    }
  }
  for (std::uint32_t j = 0; j < d; ++j) w[j] -= static_cast<float>(wdelta[j]);
  return loss;
}

struct IndexedPair {
  std::uint32_t term = 0;
  std::uint32_t context = 0;
  std::uint64_t weight = 1;
};

struct ResolvedPairs {
  std::vector<IndexedPair> pairs;
  std::uint64_t skipped = 0;       // pairs with an out-of-vocabulary side
  std::uint64_t total_weight = 0;  // occurrences per epoch
};

template <typename PairRange>
ResolvedPairs resolve_pairs(const Vocabulary& vocab, const PairRange& raw) {
  ResolvedPairs out;
  for (const TermContextPair& p : raw) {
    auto ti = vocab.term_index(p.term);
    auto ci = vocab.context_index(p.context);
    if (!ti || !ci) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back({*ti, *ci, p.weight});
    out.total_weight += p.weight;
  }
  return out;
}

// FNV-1a over the raw pair stream; identifies the corpus in model metadata.
class CorpusFingerprint {
 public:
  void update(const TermContextPair& p) {
    hash_bytes(p.term.data(), p.term.size());
    hash_byte(0xff);
    hash_bytes(p.context.data(), p.context.size());
    hash_byte(0xff);
    std::uint64_t w = p.weight;
    for (int i = 0; i < 8; ++i) hash_byte(static_cast<unsigned char>((w >> (8 * i)) & 0xff));
  }
  std::uint64_t digest() const { return h_; }

 private:
  void hash_byte(unsigned char b) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  void hash_bytes(const char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) hash_byte(static_cast<unsigned char>(p[i]));
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

template <typename PairRange>
std::uint64_t fingerprint_pairs(const PairRange& pairs) {
  CorpusFingerprint fp;
  for (const TermContextPair& p : pairs) fp.update(p);
  return fp.digest();
}

// Seeded uniform init in [-0.5/d, +0.5/d]; the context matrix starts at zero.
inline std::vector<float> init_term_matrix(std::size_t n_terms, std::uint32_t d,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> w(n_terms * static_cast<std::size_t>(d));
  for (float& f : w) f = static_cast<float>((rng.uniform01() - 0.5) / d);
  return w;
}

struct TrainStats {
  std::vector<double> epoch_mean_loss;
  std::uint64_t updates = 0;           // SGD steps actually performed
  std::uint64_t occurrences = 0;       // scheduled pair occurrences seen
  std::uint64_t subsampled_away = 0;
  std::uint64_t skipped_pairs = 0;     // out-of-vocabulary inputs
  double seconds = 0.0;
};

struct TrainOptions {
  std::ostream* progress = nullptr;  // pairs/sec, lr, epoch loss
  std::uint64_t checkpoint_every_updates = 0;
  std::function<void(const EmbeddingModel&, std::uint64_t)> on_checkpoint;
};

namespace detail {

struct TrainContext {
  const Vocabulary& vocab;
  const NegativeTable& table;
  const Hyperparams& hp;
  std::vector<float>& w;
  std::vector<float>& c;
  std::vector<double> keep_prob;  // per term; 1.0 when subsampling is off
  std::uint64_t total_scheduled = 0;
  double min_lr = 0.0;

  double lr_at(std::uint64_t processed) const {
    double frac = total_scheduled == 0
                      ? 1.0
                      : static_cast<double>(processed) / static_cast<double>(total_scheduled);
    double lr = hp.initial_lr - (hp.initial_lr - min_lr) * frac;
    return lr < min_lr ? min_lr : lr;
  }
};

// Processes one occurrence of (term, context): subsampling draw, negative
// draws (a negative equal to the positive is redrawn up to 3 times, then
// skipped), one SGD step. Returns the loss, or a negative value when the
// occurrence was subsampled away.
inline double train_one(TrainContext& ctx, std::uint32_t term, std::uint32_t context, double lr,
                        Rng& rng, std::vector<std::uint32_t>& neg_idx,
                        std::vector<float*>& neg_rows, std::vector<double>& wdelta) {
  if (ctx.keep_prob[term] < 1.0 && rng.uniform01() > ctx.keep_prob[term]) return -1.0;
  neg_idx.clear();
  for (std::uint32_t i = 0; i < ctx.hp.negatives; ++i) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::uint32_t n = ctx.table.sample(rng);
      if (n != context) {
        neg_idx.push_back(n);
        break;
      }
    }
  }
  std::uint32_t d = ctx.hp.dimension;
  neg_rows.clear();
  for (std::uint32_t n : neg_idx) neg_rows.push_back(ctx.c.data() + static_cast<std::size_t>(n) * d);
  return sgns_step(d, ctx.w.data() + static_cast<std::size_t>(term) * d,
                   ctx.c.data() + static_cast<std::size_t>(context) * d, neg_rows.data(),
                   neg_rows.size(), lr, wdelta);
}

}  // namespace detail

// Trains the embedding space. Deterministic mode is a single ordered pass,
// bit-reproducible for a fixed seed; parallel mode shards each epoch across
// workers that update shared W/C without synchronization.
inline EmbeddingModel train(const std::vector<IndexedPair>& pairs, const Vocabulary& vocab,
                            const NegativeTable& table, const Hyperparams& hp,
                            std::uint64_t corpus_fingerprint = 0, TrainStats* stats = nullptr,
                            const TrainOptions& opts = {}) {
  hp.validate();
  std::uint64_t per_epoch_weight = 0;
  for (const IndexedPair& p : pairs) per_epoch_weight += p.weight;
  if (per_epoch_weight == 0) throw data_error("empty effective training stream");

  EmbeddingModel model;
  model.d = hp.dimension;
  model.vocab = vocab;
  model.meta.hp = hp;
  model.meta.neg_alpha = table.alpha();
  model.meta.corpus_fingerprint = corpus_fingerprint;
  model.w = init_term_matrix(vocab.terms.size(), hp.dimension, hp.seed);
  model.c.assign(vocab.contexts.size() * static_cast<std::size_t>(hp.dimension), 0.0f);

  detail::TrainContext ctx{vocab, table, hp, model.w, model.c, {}, 0, hp.resolved_min_lr()};
  ctx.total_scheduled = per_epoch_weight * hp.epochs;
  ctx.keep_prob.assign(vocab.terms.size(), 1.0);
  if (hp.subsample_t > 0.0) {
    for (std::size_t i = 0; i < vocab.terms.size(); ++i)
      ctx.keep_prob[i] =
          subsample_keep_prob(vocab.terms[i].count, vocab.total_term_tokens, hp.subsample_t);
  }

  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st = TrainStats{};
  auto t0 = std::chrono::steady_clock::now();

  // Fires whenever the update counter crosses the next interval boundary, so
  // parallel mode (which checks once per epoch) still checkpoints.
  std::uint64_t next_checkpoint = opts.checkpoint_every_updates;
  auto maybe_checkpoint = [&](std::uint64_t updates) {
    if (!opts.checkpoint_every_updates || !opts.on_checkpoint) return;
    if (updates >= next_checkpoint) {
      opts.on_checkpoint(model, updates);
      while (next_checkpoint <= updates) next_checkpoint += opts.checkpoint_every_updates;
    }
  };

  if (hp.mode == TrainMode::Deterministic) {
    Rng rng(Rng::mix(hp.seed, 1));
    std::vector<std::uint32_t> neg_idx;
    std::vector<float*> neg_rows;
    std::vector<double> wdelta;
    std::uint64_t processed = 0;
    for (std::uint32_t epoch = 0; epoch < hp.epochs; ++epoch) {
      double epoch_loss = 0.0;
      std::uint64_t epoch_updates = 0;
      for (const IndexedPair& p : pairs) {
        for (std::uint64_t rep = 0; rep < p.weight; ++rep) {
          double lr = ctx.lr_at(processed);
          ++processed;
          double loss = detail::train_one(ctx, p.term, p.context, lr, rng, neg_idx, neg_rows,
                                          wdelta);
          if (loss < 0.0) {
            ++st.subsampled_away;
            continue;
          }
          epoch_loss += loss;
          ++epoch_updates;
          ++st.updates;
          maybe_checkpoint(st.updates);
        }
      }
      st.occurrences = processed;
      st.epoch_mean_loss.push_back(epoch_updates ? epoch_loss / epoch_updates : 0.0);
      if (opts.progress) {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        *opts.progress << "epoch " << (epoch + 1) << "/" << hp.epochs
                       << ": updates=" << epoch_updates
                       << " mean_loss=" << st.epoch_mean_loss.back()
                       << " lr=" << ctx.lr_at(processed)
                       << " pairs/s=" << static_cast<std::uint64_t>(processed / (dt > 0 ? dt : 1))
                       << '\n';
      }
    }
  } else {
    std::uint32_t n_threads = hp.threads;
    std::atomic<std::uint64_t> processed{0};
    for (std::uint32_t epoch = 0; epoch < hp.epochs; ++epoch) {
      std::atomic<std::uint64_t> epoch_updates{0}, subsampled{0};
      std::atomic<double> epoch_loss{0.0};
      auto worker = [&](std::uint32_t tid) {
        Rng rng(Rng::mix(hp.seed, 2 + static_cast<std::uint64_t>(epoch) * n_threads + tid));
        std::vector<std::uint32_t> neg_idx;
        std::vector<float*> neg_rows;
        std::vector<double> wdelta;
        std::size_t begin = pairs.size() * tid / n_threads;
        std::size_t end = pairs.size() * (tid + 1) / n_threads;
        double loss_sum = 0.0;
        std::uint64_t updates = 0, skipped = 0;
        for (std::size_t i = begin; i < end; ++i) {
          const IndexedPair& p = pairs[i];
          for (std::uint64_t rep = 0; rep < p.weight; ++rep) {
            std::uint64_t pos = processed.fetch_add(1, std::memory_order_relaxed);
            double lr = ctx.lr_at(pos);
            double loss =
                detail::train_one(ctx, p.term, p.context, lr, rng, neg_idx, neg_rows, wdelta);
            if (loss < 0.0) {
              ++skipped;
              continue;
            }
            loss_sum += loss;
            ++updates;
          }
        }
        epoch_updates.fetch_add(updates, std::memory_order_relaxed);
        subsampled.fetch_add(skipped, std::memory_order_relaxed);
        double expected = epoch_loss.load();
        while (!epoch_loss.compare_exchange_weak(expected, expected + loss_sum)) {
        }
      };
      std::vector<std::thread> threads;
      threads.reserve(n_threads);
      for (std::uint32_t t = 0; t < n_threads; ++t) threads.emplace_back(worker, t);
      for (std::thread& t : threads) t.join();
      st.updates += epoch_updates.load();
      st.subsampled_away += subsampled.load();
      st.occurrences = processed.load();
      st.epoch_mean_loss.push_back(
          epoch_updates.load() ? epoch_loss.load() / epoch_updates.load() : 0.0);
      if (opts.progress) {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        *opts.progress << "epoch " << (epoch + 1) << "/" << hp.epochs
                       << ": updates=" << epoch_updates.load()
                       << " mean_loss=" << st.epoch_mean_loss.back()
                       << " lr=" << ctx.lr_at(processed.load())
                       << " pairs/s=" << static_cast<std::uint64_t>(processed.load() / (dt > 0 ? dt : 1))
                       << '\n';
      }
      maybe_checkpoint(st.updates);
    }
  }

  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opts.progress)
    *opts.progress << "training done: " << st.updates << " updates in " << st.seconds << "s\n";
  return model;
}

// Convenience wrapper over raw string pairs; unresolvable pairs are skipped
// and counted.
template <typename PairRange>
EmbeddingModel train_pairs(const PairRange& raw, const Vocabulary& vocab,
                           const NegativeTable& table, const Hyperparams& hp,
                           TrainStats* stats = nullptr, const TrainOptions& opts = {}) {
  ResolvedPairs resolved = resolve_pairs(vocab, raw);
  std::uint64_t fp = fingerprint_pairs(raw);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  EmbeddingModel m = train(resolved.pairs, vocab, table, hp, fp, &st, opts);
  st.skipped_pairs = resolved.skipped;
  return m;
}

}  // namespace selpref
