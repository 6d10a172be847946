// Whole-pipeline configuration: one JSON file covering extraction, vocab,
// training, and feature knobs plus file paths. Unknown keys are rejected and
// every run logs the fully resolved config.
#pragma once

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "selpref/errors.hpp"
#include "selpref/features.hpp"
#include "selpref/hyperparams.hpp"
#include "selpref/pairs.hpp"

namespace selpref {

struct PipelineConfig {
  std::uint64_t seed = 1;  // single source of all randomness

  ExtractionConfig extraction;
  bool extract_skip_malformed = false;
  bool extract_aggregate = false;

  std::uint64_t min_count_term = 10;
  std::uint64_t min_count_context = 10;
  double neg_alpha = 0.75;

  Hyperparams training;
  bool interleave_sources = true;  // vs. concatenate, for multiple pair files
  std::uint64_t checkpoint_every_updates = 0;

  std::vector<double> bin_boundaries{-0.1, 0.0, 0.1, 0.25, 0.5};
  std::string channels = "all";
  double threshold = 0.0;
  bool dense_features = false;

  std::vector<std::string> corpus_paths;
  std::string gazetteer_path;
  std::vector<std::string> pair_paths;
  std::string vocab_path;
  std::string model_path;
  std::string mentions_path;
  std::string output_path;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& known,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw config_error("config: unknown key '" + where + it.key() + "'");
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

inline void parse_extraction(const json& j, PipelineConfig& c) {
  reject_unknown(j,
                 {"argument_pos_whitelist", "relation_blacklist", "predicate_key",
                  "emit_phrase_terms", "emit_head_terms", "include_pronouns", "max_phrase_tokens",
                  "on_error", "aggregate"},
                 "extraction.");
  if (auto it = j.find("argument_pos_whitelist"); it != j.end())
    c.extraction.argument_pos_whitelist =
        std::set<std::string>(it->begin(), it->end());
  if (auto it = j.find("relation_blacklist"); it != j.end())
    c.extraction.relation_blacklist = std::set<std::string>(it->begin(), it->end());
  if (auto it = j.find("predicate_key"); it != j.end()) {
    std::string v = it->get<std::string>();
    if (v == "form") c.extraction.predicate_key = PredicateKey::Form;
    else if (v == "lemma") c.extraction.predicate_key = PredicateKey::Lemma;
    else throw config_error("config: predicate_key must be form|lemma, got '" + v + "'");
  }
  maybe(j, "emit_phrase_terms", c.extraction.emit_phrase_terms);
  maybe(j, "emit_head_terms", c.extraction.emit_head_terms);
  maybe(j, "include_pronouns", c.extraction.include_pronouns);
  maybe(j, "max_phrase_tokens", c.extraction.max_phrase_tokens);
  if (auto it = j.find("on_error"); it != j.end()) {
    std::string v = it->get<std::string>();
    if (v == "skip") c.extract_skip_malformed = true;
    else if (v == "abort") c.extract_skip_malformed = false;
    else throw config_error("config: on_error must be skip|abort, got '" + v + "'");
  }
  maybe(j, "aggregate", c.extract_aggregate);
}

inline void parse_vocab(const json& j, PipelineConfig& c) {
  reject_unknown(j, {"min_count_term", "min_count_context", "neg_alpha"}, "vocab.");
  maybe(j, "min_count_term", c.min_count_term);
  maybe(j, "min_count_context", c.min_count_context);
  maybe(j, "neg_alpha", c.neg_alpha);
}

inline void parse_training(const json& j, PipelineConfig& c) {
  reject_unknown(j,
                 {"dimension", "negatives", "epochs", "initial_lr", "min_lr", "mode", "threads",
                  "subsample_t", "order", "checkpoint_every_updates"},
                 "training.");
  maybe(j, "dimension", c.training.dimension);
  maybe(j, "negatives", c.training.negatives);
  maybe(j, "epochs", c.training.epochs);
  maybe(j, "initial_lr", c.training.initial_lr);
  maybe(j, "min_lr", c.training.min_lr);
  if (auto it = j.find("mode"); it != j.end())
    c.training.mode = train_mode_from_string(it->get<std::string>());
  maybe(j, "threads", c.training.threads);
  maybe(j, "subsample_t", c.training.subsample_t);
  if (auto it = j.find("order"); it != j.end()) {
    std::string v = it->get<std::string>();
    if (v == "interleave") c.interleave_sources = true;
    else if (v == "concat") c.interleave_sources = false;
    else throw config_error("config: order must be interleave|concat, got '" + v + "'");
  }
  maybe(j, "checkpoint_every_updates", c.checkpoint_every_updates);
}

inline void parse_features(const json& j, PipelineConfig& c) {
  reject_unknown(j, {"bin_boundaries", "channels", "threshold", "dense"}, "features.");
  if (auto it = j.find("bin_boundaries"); it != j.end())
    c.bin_boundaries = it->get<std::vector<double>>();
  maybe(j, "channels", c.channels);
  maybe(j, "threshold", c.threshold);
  maybe(j, "dense", c.dense_features);
}

inline void parse_paths(const json& j, PipelineConfig& c) {
  reject_unknown(j, {"corpus", "gazetteer", "pairs", "vocab", "model", "mentions", "output"},
                 "paths.");
  if (auto it = j.find("corpus"); it != j.end())
    c.corpus_paths = it->get<std::vector<std::string>>();
  maybe(j, "gazetteer", c.gazetteer_path);
  if (auto it = j.find("pairs"); it != j.end()) c.pair_paths = it->get<std::vector<std::string>>();
  maybe(j, "vocab", c.vocab_path);
  maybe(j, "model", c.model_path);
  maybe(j, "mentions", c.mentions_path);
  maybe(j, "output", c.output_path);
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  PipelineConfig c;
  detail::reject_unknown(j, {"seed", "extraction", "vocab", "training", "features", "paths"}, "");
  detail::maybe(j, "seed", c.seed);
  if (auto it = j.find("extraction"); it != j.end()) detail::parse_extraction(*it, c);
  if (auto it = j.find("vocab"); it != j.end()) detail::parse_vocab(*it, c);
  if (auto it = j.find("training"); it != j.end()) detail::parse_training(*it, c);
  if (auto it = j.find("features"); it != j.end()) detail::parse_features(*it, c);
  if (auto it = j.find("paths"); it != j.end()) detail::parse_paths(*it, c);
  c.training.seed = c.seed;
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw config_error("config file must hold a JSON object");
  return parse_pipeline_config(j);
}

// The fully resolved view logged at the start of every run.
inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  auto& e = j["extraction"];
  e["argument_pos_whitelist"] = c.extraction.argument_pos_whitelist;
  e["relation_blacklist"] = c.extraction.relation_blacklist;
  e["predicate_key"] = c.extraction.predicate_key == PredicateKey::Form ? "form" : "lemma";
  e["emit_phrase_terms"] = c.extraction.emit_phrase_terms;
  e["emit_head_terms"] = c.extraction.emit_head_terms;
  e["include_pronouns"] = c.extraction.include_pronouns;
  e["max_phrase_tokens"] = c.extraction.max_phrase_tokens;
  e["on_error"] = c.extract_skip_malformed ? "skip" : "abort";
  e["aggregate"] = c.extract_aggregate;
  auto& v = j["vocab"];
  v["min_count_term"] = c.min_count_term;
  v["min_count_context"] = c.min_count_context;
  v["neg_alpha"] = c.neg_alpha;
  auto& t = j["training"];
  t["dimension"] = c.training.dimension;
  t["negatives"] = c.training.negatives;
  t["epochs"] = c.training.epochs;
  t["initial_lr"] = c.training.initial_lr;
  t["min_lr"] = c.training.resolved_min_lr();
  t["mode"] = to_string(c.training.mode);
  t["threads"] = c.training.threads;
  t["subsample_t"] = c.training.subsample_t;
  t["order"] = c.interleave_sources ? "interleave" : "concat";
  t["checkpoint_every_updates"] = c.checkpoint_every_updates;
  auto& f = j["features"];
  f["bin_boundaries"] = c.bin_boundaries;
  f["channels"] = c.channels;
  f["threshold"] = c.threshold;
  f["dense"] = c.dense_features;
  auto& p = j["paths"];
  p["corpus"] = c.corpus_paths;
  p["gazetteer"] = c.gazetteer_path;
  p["pairs"] = c.pair_paths;
  p["vocab"] = c.vocab_path;
  p["model"] = c.model_path;
  p["mentions"] = c.mentions_path;
  p["output"] = c.output_path;
  return j;
}

}  // namespace selpref
