// selpref: selectional-preference embedding pipeline over files.
// Subcommands: extract, build-vocab, train, query, plausibility, features,
// eval, export, import-text. Logs to stderr, data to files or stdout.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "selpref/pipeline_config.hpp"
#include "selpref/selpref.hpp"

namespace {

using namespace selpref;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve_config(const CommonOpts& common) {
  PipelineConfig cfg;
  if (!common.config_path.empty()) cfg = load_pipeline_config(common.config_path);
  if (common.seed) {
    cfg.seed = *common.seed;
    cfg.training.seed = *common.seed;
  }
  return cfg;
}

void log_resolved_config(const PipelineConfig& cfg) {
  std::cerr << "config: " << pipeline_config_to_json(cfg).dump() << '\n';
}

template <typename T>
void apply(const std::optional<T>& src, T& dst) {
  if (src) dst = src.value();
}

// ---- extract -----------------------------------------------------------

struct ExtractOpts {
  CommonOpts common;
  std::vector<std::string> corpus;
  std::string gazetteer;
  std::string out;
  std::optional<std::string> predicate_key;
  std::optional<bool> phrase_terms, head_terms, include_pronouns, aggregate;
  std::optional<std::uint32_t> max_phrase_tokens;
  std::optional<std::vector<std::string>> pos_whitelist, relation_blacklist;
  std::optional<std::string> on_error;
};

int cmd_extract(const ExtractOpts& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.corpus.empty()) cfg.corpus_paths = o.corpus;
  if (!o.gazetteer.empty()) cfg.gazetteer_path = o.gazetteer;
  if (!o.out.empty()) cfg.output_path = o.out;
  if (o.predicate_key) {
    if (*o.predicate_key == "form") cfg.extraction.predicate_key = PredicateKey::Form;
    else if (*o.predicate_key == "lemma") cfg.extraction.predicate_key = PredicateKey::Lemma;
    else throw config_error("--predicate-key must be form|lemma");
  }
  apply(o.phrase_terms, cfg.extraction.emit_phrase_terms);
  apply(o.head_terms, cfg.extraction.emit_head_terms);
  apply(o.include_pronouns, cfg.extraction.include_pronouns);
  apply(o.max_phrase_tokens, cfg.extraction.max_phrase_tokens);
  if (o.pos_whitelist)
    cfg.extraction.argument_pos_whitelist =
        std::set<std::string>(o.pos_whitelist->begin(), o.pos_whitelist->end());
  if (o.relation_blacklist)
    cfg.extraction.relation_blacklist =
        std::set<std::string>(o.relation_blacklist->begin(), o.relation_blacklist->end());
  if (o.on_error) {
    if (*o.on_error == "skip") cfg.extract_skip_malformed = true;
    else if (*o.on_error == "abort") cfg.extract_skip_malformed = false;
    else throw config_error("--on-error must be skip|abort");
  }
  apply(o.aggregate, cfg.extract_aggregate);

  if (cfg.corpus_paths.empty()) throw config_error("extract: no corpus files given");
  if (cfg.output_path.empty()) throw config_error("extract: no output path given");
  cfg.extraction.validate();
  log_resolved_config(cfg);

  Gazetteer gaz;
  if (!cfg.gazetteer_path.empty()) {
    auto in = open_input(cfg.gazetteer_path);
    gaz = load_gazetteer(*in);
    std::cerr << "gazetteer: " << gaz.size() << " entries\n";
  }

  std::uint64_t candidates = 0, extracted = 0, augmented = 0, sentences = 0;
  ParseStats total_stats;
  std::vector<TermContextPair> all;  // only kept when aggregating
  auto out = open_output(cfg.output_path);
  ParseOptions popts{cfg.extract_skip_malformed};
  for (const std::string& path : cfg.corpus_paths) {
    auto in = open_input(path);
    ConlluReader reader(*in, popts);
    while (auto sentence = reader.next()) {
      ++sentences;
      DepGraph graph = enhanced_graph(*sentence);
      for (const DepEdge& e : graph.edges)
        if (e.governor != 0) ++candidates;
      std::vector<TermContextPair> pairs = extract_pairs(graph, *sentence, cfg.extraction);
      extracted += pairs.size();
      pairs = augment_with_types(pairs, *sentence, gaz);
      augmented += pairs.size();
      if (cfg.extract_aggregate)
        all.insert(all.end(), std::make_move_iterator(pairs.begin()),
                   std::make_move_iterator(pairs.end()));
      else
        write_pairs(*out, pairs);
    }
    const ParseStats& st = reader.stats();
    total_stats.sentences += st.sentences;
    total_stats.malformed_lines += st.malformed_lines;
    total_stats.skipped_sentences += st.skipped_sentences;
    total_stats.multiword_lines += st.multiword_lines;
    total_stats.empty_node_lines += st.empty_node_lines;
    total_stats.dropped_enhanced_refs += st.dropped_enhanced_refs;
  }
  if (cfg.extract_aggregate) write_pairs(*out, aggregate_pairs(std::move(all)));
  if (sentences == 0) throw data_error("empty corpus");
  std::cerr << "sentences=" << sentences << " candidate_edges=" << candidates
            << " pairs_after_filtering=" << extracted << " pairs_after_types=" << augmented
            << '\n';
  if (total_stats.malformed_lines)
    std::cerr << "malformed_lines=" << total_stats.malformed_lines
              << " skipped_sentences=" << total_stats.skipped_sentences << '\n';
  return exit_code::ok;
}

// ---- pair file loading shared by build-vocab and train ------------------

std::vector<TermContextPair> load_pair_sources(const std::vector<std::string>& paths,
                                               bool interleave) {
  if (paths.empty()) throw config_error("no pair files given");
  std::vector<std::vector<TermContextPair>> sources;
  sources.reserve(paths.size());
  for (const std::string& path : paths) {
    auto in = open_input(path);
    sources.push_back(read_pairs(*in));
  }
  return merge_pair_sources(std::move(sources), interleave);
}

// ---- build-vocab ---------------------------------------------------------

struct BuildVocabOpts {
  CommonOpts common;
  std::vector<std::string> pairs;
  std::string out;
  std::optional<std::uint64_t> min_count_term, min_count_context;
};

int cmd_build_vocab(const BuildVocabOpts& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.pairs.empty()) cfg.pair_paths = o.pairs;
  if (!o.out.empty()) cfg.vocab_path = o.out;
  apply(o.min_count_term, cfg.min_count_term);
  apply(o.min_count_context, cfg.min_count_context);
  if (cfg.vocab_path.empty()) throw config_error("build-vocab: no output path given");
  log_resolved_config(cfg);

  std::vector<TermContextPair> pairs = load_pair_sources(cfg.pair_paths, cfg.interleave_sources);
  Vocabulary v = build_vocab(pairs, cfg.min_count_term, cfg.min_count_context);
  auto out = open_output(cfg.vocab_path);
  save_vocab(*out, v);
  std::cerr << "terms=" << v.terms.size() << " (dropped " << v.dropped_term_types
            << " types) contexts=" << v.contexts.size() << " (dropped "
            << v.dropped_context_types << " types)\n";
  return exit_code::ok;
}

// ---- train ---------------------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::vector<std::string> pairs;
  std::string out;
  std::optional<std::uint32_t> dimension, negatives, epochs, threads;
  std::optional<double> initial_lr, min_lr, subsample_t, alpha;
  std::optional<std::string> mode, order;
  std::optional<std::uint64_t> min_count_term, min_count_context, checkpoint_every;
  std::string checkpoint_prefix;
};

int cmd_train(const TrainOpts& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.pairs.empty()) cfg.pair_paths = o.pairs;
  if (!o.out.empty()) cfg.model_path = o.out;
  apply(o.dimension, cfg.training.dimension);
  apply(o.negatives, cfg.training.negatives);
  apply(o.epochs, cfg.training.epochs);
  apply(o.threads, cfg.training.threads);
  apply(o.initial_lr, cfg.training.initial_lr);
  apply(o.min_lr, cfg.training.min_lr);
  apply(o.subsample_t, cfg.training.subsample_t);
  apply(o.alpha, cfg.neg_alpha);
  if (o.mode) cfg.training.mode = train_mode_from_string(*o.mode);
  if (o.order) {
    if (*o.order == "interleave") cfg.interleave_sources = true;
    else if (*o.order == "concat") cfg.interleave_sources = false;
    else throw config_error("--order must be interleave|concat");
  }
  apply(o.min_count_term, cfg.min_count_term);
  apply(o.min_count_context, cfg.min_count_context);
  apply(o.checkpoint_every, cfg.checkpoint_every_updates);
  if (cfg.model_path.empty()) throw config_error("train: no model output path given");
  cfg.training.validate();
  log_resolved_config(cfg);

  std::vector<TermContextPair> raw = load_pair_sources(cfg.pair_paths, cfg.interleave_sources);
  Vocabulary vocab = build_vocab(raw, cfg.min_count_term, cfg.min_count_context);
  NegativeTable table = build_negative_table(vocab, cfg.neg_alpha);
  ResolvedPairs resolved = resolve_pairs(vocab, raw);
  std::uint64_t fp = fingerprint_pairs(raw);
  std::cerr << "pairs=" << raw.size() << " resolved=" << resolved.pairs.size()
            << " skipped_oov=" << resolved.skipped << " terms=" << vocab.terms.size()
            << " contexts=" << vocab.contexts.size() << '\n';

  TrainOptions topts;
  topts.progress = &std::cerr;
  std::string prefix = o.checkpoint_prefix.empty() ? cfg.model_path : o.checkpoint_prefix;
  if (cfg.checkpoint_every_updates) {
    topts.checkpoint_every_updates = cfg.checkpoint_every_updates;
    topts.on_checkpoint = [&prefix](const EmbeddingModel& m, std::uint64_t updates) {
      std::string path = prefix + ".ckpt-" + std::to_string(updates);
      save_model(path, m);
      std::cerr << "checkpoint: " << path << '\n';
    };
  }
  TrainStats stats;
  EmbeddingModel model = train(resolved.pairs, vocab, table, cfg.training, fp, &stats, topts);
  save_model(cfg.model_path, model);
  std::cerr << "model written: " << cfg.model_path << " (" << vocab.terms.size() << " terms, "
            << vocab.contexts.size() << " contexts, d=" << cfg.training.dimension << ")\n";
  return exit_code::ok;
}

// ---- query / plausibility -------------------------------------------------

void print_section(const char* name, const std::vector<ScoredKey>& list) {
  std::cout << name << ":\n";
  for (const ScoredKey& sk : list)
    std::cout << "  " << sk.key << '\t' << std::fixed << std::setprecision(6) << sk.score << '\n';
}

int cmd_query(const std::string& model_path, const std::string& query, std::size_t k) {
  EmbeddingModel model = load_model(model_path);
  NeighborResult res = neighbors(model, query, k);
  std::cout << "query: " << res.query << '\n';
  print_section("predicate slots", res.slots);
  print_section("entity types", res.entity_types);
  print_section("phrases", res.phrases);
  return exit_code::ok;
}

int cmd_plausibility(const std::string& model_path, const std::string& term,
                     const std::string& slot) {
  EmbeddingModel model = load_model(model_path);
  auto score = plausibility(model, term, slot);
  if (score)
    std::cout << std::fixed << std::setprecision(6) << *score << '\n';
  else
    std::cout << "unknown\n";
  return exit_code::ok;
}

// ---- features / eval -------------------------------------------------------

struct FeatureOpts {
  CommonOpts common;
  std::string model, mentions, out;
  std::optional<std::vector<double>> boundaries;
  std::optional<bool> dense;
};

int cmd_features(const FeatureOpts& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.model.empty()) cfg.model_path = o.model;
  if (!o.mentions.empty()) cfg.mentions_path = o.mentions;
  if (!o.out.empty()) cfg.output_path = o.out;
  apply(o.boundaries, cfg.bin_boundaries);
  apply(o.dense, cfg.dense_features);
  if (cfg.model_path.empty()) throw config_error("features: no model given");
  if (cfg.mentions_path.empty()) throw config_error("features: no mention-pair file given");
  validate_boundaries(cfg.bin_boundaries);
  log_resolved_config(cfg);

  EmbeddingModel model = load_model(cfg.model_path);
  auto in = open_input(cfg.mentions_path);
  std::vector<LabeledPair> pairs = read_mention_pairs(*in);
  if (pairs.empty()) throw data_error("no mention pairs in " + cfg.mentions_path);
  std::unique_ptr<std::ostream> owned;
  std::ostream* out = &std::cout;
  if (!cfg.output_path.empty()) {
    owned = open_output(cfg.output_path);
    out = owned.get();
  }
  for (const LabeledPair& lp : pairs) {
    PropertySet a = mention_properties(lp.antecedent, model);
    PropertySet b = mention_properties(lp.anaphor, model);
    BinnedFeatureVector v = binarize(pair_similarities(a, b, model), cfg.bin_boundaries);
    cfg.dense_features ? write_dense_features(*out, v) : write_sparse_features(*out, v);
  }
  std::cerr << "features written for " << pairs.size() << " pairs\n";
  return exit_code::ok;
}

struct EvalOpts {
  CommonOpts common;
  std::string model, mentions, out;
  std::optional<double> threshold;
  std::optional<std::string> channels;
};

int cmd_eval(const EvalOpts& o) {
  PipelineConfig cfg = resolve_config(o.common);
  if (!o.model.empty()) cfg.model_path = o.model;
  if (!o.mentions.empty()) cfg.mentions_path = o.mentions;
  if (!o.out.empty()) cfg.output_path = o.out;
  apply(o.threshold, cfg.threshold);
  apply(o.channels, cfg.channels);
  if (cfg.model_path.empty()) throw config_error("eval: no model given");
  if (cfg.mentions_path.empty()) throw config_error("eval: no mention-pair file given");
  ChannelSelector sel = parse_channel_selector(cfg.channels);
  log_resolved_config(cfg);

  EmbeddingModel model = load_model(cfg.model_path);
  auto in = open_input(cfg.mentions_path);
  std::vector<LabeledPair> pairs = read_mention_pairs(*in);
  EvalReport report = eval_pairs(model, pairs, sel, cfg.threshold);
  std::unique_ptr<std::ostream> owned;
  std::ostream* out = &std::cout;
  if (!cfg.output_path.empty()) {
    owned = open_output(cfg.output_path);
    out = owned.get();
  }
  write_eval_report_text(*out, report);
  write_eval_report_kv(*out, report);
  return exit_code::ok;
}

int cmd_export(const std::string& model_path, const std::string& out_path) {
  EmbeddingModel model = load_model(model_path);
  auto out = open_output(out_path);
  export_text(*out, model);
  return exit_code::ok;
}

int cmd_import_text(const std::string& text_path, const std::string& out_path) {
  auto in = open_input(text_path);
  EmbeddingModel model = import_text(*in);
  save_model(out_path, model);
  return exit_code::ok;
}

void add_common(CLI::App* app, CommonOpts& common) {
  app->add_option("--config", common.config_path, "pipeline config file (JSON)");
  app->add_option("--seed", common.seed, "seed for all randomness (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selectional-preference embedding pipeline"};
  app.require_subcommand(1);

  ExtractOpts xo;
  CLI::App* extract = app.add_subcommand("extract", "CoNLL-U corpora -> pair file");
  add_common(extract, xo.common);
  extract->add_option("--corpus", xo.corpus, "CoNLL-U files (.gz ok)");
  extract->add_option("--gazetteer", xo.gazetteer, "entity -> /type mapping file");
  extract->add_option("--out", xo.out, "output pair file");
  extract->add_option("--predicate-key", xo.predicate_key, "form|lemma");
  extract->add_option("--phrase-terms", xo.phrase_terms, "emit noun-phrase terms");
  extract->add_option("--head-terms", xo.head_terms, "emit head-lemma terms");
  extract->add_option("--include-pronouns", xo.include_pronouns, "keep PRON arguments");
  extract->add_option("--max-phrase-tokens", xo.max_phrase_tokens, "phrase length limit");
  extract->add_option("--pos-whitelist", xo.pos_whitelist, "argument POS tags");
  extract->add_option("--relation-blacklist", xo.relation_blacklist, "relations to drop");
  extract->add_option("--on-error", xo.on_error, "skip|abort on malformed input");
  extract->add_option("--aggregate", xo.aggregate, "merge duplicate pairs before writing");

  BuildVocabOpts bo;
  CLI::App* build_vocab_cmd = app.add_subcommand("build-vocab", "pair file -> vocab file");
  add_common(build_vocab_cmd, bo.common);
  build_vocab_cmd->add_option("--pairs", bo.pairs, "pair files");
  build_vocab_cmd->add_option("--out", bo.out, "output vocab file");
  build_vocab_cmd->add_option("--min-count-term", bo.min_count_term, "term threshold");
  build_vocab_cmd->add_option("--min-count-context", bo.min_count_context, "context threshold");

  TrainOpts to;
  CLI::App* train_cmd = app.add_subcommand("train", "pair file -> model file");
  add_common(train_cmd, to.common);
  train_cmd->add_option("--pairs", to.pairs, "pair files");
  train_cmd->add_option("--out", to.out, "output model file");
  train_cmd->add_option("--dim", to.dimension, "embedding dimension");
  train_cmd->add_option("--negatives", to.negatives, "negative samples per update");
  train_cmd->add_option("--epochs", to.epochs, "training epochs");
  train_cmd->add_option("--lr", to.initial_lr, "initial learning rate");
  train_cmd->add_option("--min-lr", to.min_lr, "learning rate floor");
  train_cmd->add_option("--subsample", to.subsample_t, "term subsampling threshold (<=0 off)");
  train_cmd->add_option("--alpha", to.alpha, "negative-sampling smoothing exponent");
  train_cmd->add_option("--mode", to.mode, "deterministic|parallel");
  train_cmd->add_option("--threads", to.threads, "workers in parallel mode");
  train_cmd->add_option("--order", to.order, "interleave|concat for multiple pair files");
  train_cmd->add_option("--min-count-term", to.min_count_term, "term threshold");
  train_cmd->add_option("--min-count-context", to.min_count_context, "context threshold");
  train_cmd->add_option("--checkpoint-every", to.checkpoint_every, "updates between checkpoints");
  train_cmd->add_option("--checkpoint-prefix", to.checkpoint_prefix, "checkpoint path prefix");

  std::string q_model, q_query;
  std::size_t q_k = 10;
  CLI::App* query_cmd = app.add_subcommand("query", "nearest neighbors in three catalogs");
  query_cmd->add_option("--model", q_model, "model file")->required();
  query_cmd->add_option("query", q_query, "slot, phrase, or /entity/type")->required();
  query_cmd->add_option("-k,--top-k", q_k, "results per catalog");

  std::string p_model, p_term, p_slot;
  CLI::App* plaus_cmd = app.add_subcommand("plausibility", "cosine of term vs. predicate slot");
  plaus_cmd->add_option("--model", p_model, "model file")->required();
  plaus_cmd->add_option("term", p_term, "argument term")->required();
  plaus_cmd->add_option("slot", p_slot, "predicate@relation")->required();

  FeatureOpts fo;
  CLI::App* features_cmd = app.add_subcommand("features", "mention pairs -> binned features");
  add_common(features_cmd, fo.common);
  features_cmd->add_option("--model", fo.model, "model file");
  features_cmd->add_option("--mentions", fo.mentions, "mention-pair file");
  features_cmd->add_option("--out", fo.out, "output file (default stdout)");
  features_cmd->add_option("--boundaries", fo.boundaries, "bin boundaries, ascending");
  features_cmd->add_option("--dense", fo.dense, "emit dense 0/1 vectors");

  EvalOpts eo;
  CLI::App* eval_cmd = app.add_subcommand("eval", "similarity/coreference evaluation report");
  add_common(eval_cmd, eo.common);
  eval_cmd->add_option("--model", eo.model, "model file");
  eval_cmd->add_option("--mentions", eo.mentions, "labeled mention-pair file");
  eval_cmd->add_option("--out", eo.out, "output file (default stdout)");
  eval_cmd->add_option("--threshold", eo.threshold, "coreference decision threshold");
  eval_cmd->add_option("--channels", eo.channels, "'all' or 'i,j[;i,j...]'");

  std::string ex_model, ex_out;
  CLI::App* export_cmd = app.add_subcommand("export", "model file -> text vectors");
  export_cmd->add_option("--model", ex_model, "model file")->required();
  export_cmd->add_option("--out", ex_out, "output text file")->required();

  std::string im_text, im_out;
  CLI::App* import_cmd = app.add_subcommand("import-text", "text vectors -> model file");
  import_cmd->add_option("--text", im_text, "text vectors file")->required();
  import_cmd->add_option("--out", im_out, "output model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? selpref::exit_code::ok : selpref::exit_code::config;
  }

  try {
    if (extract->parsed()) return cmd_extract(xo);
    if (build_vocab_cmd->parsed()) return cmd_build_vocab(bo);
    if (train_cmd->parsed()) return cmd_train(to);
    if (query_cmd->parsed()) return cmd_query(q_model, q_query, q_k);
    if (plaus_cmd->parsed()) return cmd_plausibility(p_model, p_term, p_slot);
    if (features_cmd->parsed()) return cmd_features(fo);
    if (eval_cmd->parsed()) return cmd_eval(eo);
    if (export_cmd->parsed()) return cmd_export(ex_model, ex_out);
    if (import_cmd->parsed()) return cmd_import_text(im_text, im_out);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const io_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_code::input;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_code::data;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::input;
  }
  return exit_code::ok;
}
