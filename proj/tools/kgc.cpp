// kgc: command-line driver for the knowledge-graph construction toolkit.
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kgc/corpus.hpp"
#include "kgc/dataset.hpp"
#include "kgc/encoder.hpp"
#include "kgc/error.hpp"
#include "kgc/graph_service.hpp"
#include "kgc/graph_store.hpp"
#include "kgc/oie.hpp"
#include "kgc/pipeline.hpp"
#include "kgc/relation.hpp"
#include "kgc/schema.hpp"
#include "kgc/tagger.hpp"

using namespace kgc;

namespace {

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

AbbreviationList abbreviations_from(const std::string& path) {
  auto list = AbbreviationList::defaults();
  if (!path.empty()) list.merge(AbbreviationList::load(path));
  return list;
}

std::shared_ptr<const TokenEncoder> encoder_for(const CrfModel& model, const std::string& override_spec) {
  std::string spec = override_spec;
  if (spec.empty()) spec = model.manifest.value("encoder_spec", "hashed");
  auto enc = make_token_encoder(spec);
  if (enc->id() != model.encoder_id) {
    fail(ErrorCode::DimensionMismatch, "encoder '" + enc->id() + "' does not match the model's '" + model.encoder_id + "'");
  }
  return enc;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_pattern("%^[%l]%$ %v");
  spdlog::set_default_logger(spdlog::stderr_color_st("kgc"));
  CLI::App app{"Knowledge graph construction from scientific abstracts"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Clean and validate raw abstract records");
  std::string ingest_in, ingest_format = "jsonl", ingest_out;
  ingest_cmd->add_option("--in", ingest_in, "Input file")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--format", ingest_format, "jsonl or inverted")->check(CLI::IsMember({"jsonl", "inverted"}));
  ingest_cmd->add_option("--out", ingest_out, "Output corpus.jsonl")->required();

  // preextract
  auto* pre_cmd = app.add_subcommand("preextract", "Pattern-based open extraction of candidate triples");
  std::string pre_corpus, pre_out, pre_import, pre_abbr;
  bool pre_best = false;
  std::size_t pre_sample = 0;
  std::uint64_t pre_seed = 0;
  pre_cmd->add_option("--corpus", pre_corpus, "corpus.jsonl");
  pre_cmd->add_option("--import", pre_import, "TSV output of an external open extractor");
  pre_cmd->add_option("--abbreviations", pre_abbr, "Extra abbreviation list");
  pre_cmd->add_option("--out", pre_out, "candidates.jsonl")->required();
  pre_cmd->add_flag("--best-only", pre_best, "Keep the highest-confidence triple per sentence");
  pre_cmd->add_option("--sample", pre_sample, "Use a seeded sample of this many abstracts (0 = all)");
  pre_cmd->add_option("--seed", pre_seed, "Sampling seed");

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "Induce the relation schema by clustering");
  std::string schema_candidates, schema_provider = "hashed", schema_out, schema_embedding = "whole";
  SchemaOptions schema_opts;
  schema_cmd->add_option("--candidates", schema_candidates, "candidates.jsonl")->required()->check(CLI::ExistingFile);
  schema_cmd->add_option("--k-entities", schema_opts.k_entities, "Entity clusters");
  schema_cmd->add_option("--k-relations", schema_opts.k_relations, "Relation clusters");
  schema_cmd->add_option("--provider", schema_provider, "hashed | hashed:<d> | mean | table:<path>");
  schema_cmd->add_option("--seed", schema_opts.seed, "Seed");
  schema_cmd->add_option("--restarts", schema_opts.restarts, "k-means restarts");
  schema_cmd->add_option("--triple-embedding", schema_embedding, "whole or mean")->check(CLI::IsMember({"whole", "mean"}));
  schema_cmd->add_option("--out", schema_out, "schema.json")->required();

  // dataset
  auto* ds_cmd = app.add_subcommand("dataset", "Annotated dataset tools");
  ds_cmd->require_subcommand(1);
  auto* brat_cmd = ds_cmd->add_subcommand("import-brat", "Convert brat standoff to RC and NER instances");
  std::string brat_txt, brat_ann, brat_out;
  std::size_t lint_cap = 8;
  brat_cmd->add_option("--txt-dir", brat_txt, "Directory of .txt files")->required()->check(CLI::ExistingDirectory);
  brat_cmd->add_option("--ann-dir", brat_ann, "Directory of .ann files")->required()->check(CLI::ExistingDirectory);
  brat_cmd->add_option("--out", brat_out, "rc.jsonl,ner.jsonl")->required();
  brat_cmd->add_option("--max-entity-tokens", lint_cap, "Length warning threshold");
  auto* diff_cmd = ds_cmd->add_subcommand("diff", "Report changes between two passes of RC annotations");
  std::string diff_before, diff_after;
  diff_cmd->add_option("--before", diff_before, "First-pass rc.jsonl")->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("--after", diff_after, "Reviewed rc.jsonl")->required()->check(CLI::ExistingFile);
  auto* split_cmd = ds_cmd->add_subcommand("split", "Seeded train/validation/test split");
  std::string split_kind, split_data, split_out_dir = ".";
  std::uint64_t split_seed = 0;
  std::size_t split_per_relation = 50, split_expected = 2000;
  split_cmd->add_option("--kind", split_kind, "rc or ner")->required()->check(CLI::IsMember({"rc", "ner"}));
  split_cmd->add_option("--data", split_data, "Input jsonl")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--seed", split_seed, "Seed");
  split_cmd->add_option("--per-relation", split_per_relation, "Required instances per relation (0 = any)");
  split_cmd->add_option("--expected", split_expected, "Required NER instance count (0 = any)");
  split_cmd->add_option("--out-dir", split_out_dir, "Output directory");
  auto* ep_cmd = ds_cmd->add_subcommand("episode", "Sample one N-way K-shot episode");
  std::string ep_data;
  std::size_t ep_n = 5, ep_k = 1, ep_q = 1;
  std::uint64_t ep_seed = 0;
  ep_cmd->add_option("--data", ep_data, "rc.jsonl")->required()->check(CLI::ExistingFile);
  ep_cmd->add_option("--n", ep_n, "Ways");
  ep_cmd->add_option("--k", ep_k, "Shots");
  ep_cmd->add_option("--q", ep_q, "Queries per relation");
  ep_cmd->add_option("--seed", ep_seed, "Seed");

  // ner
  auto* ner_cmd = app.add_subcommand("ner", "CRF entity tagger");
  ner_cmd->require_subcommand(1);
  std::string ner_data, ner_val, ner_encoder = "hashed", ner_model, ner_out;
  TrainConfig ner_cfg = TrainConfig::practical();
  bool ner_fine_tune_lr = false, ner_unconstrained = false;
  std::size_t ner_k = 5;
  auto add_train_opts = [&](CLI::App* c) {
    c->add_option("--data", ner_data, "ner.jsonl")->required()->check(CLI::ExistingFile);
    c->add_option("--encoder", ner_encoder, "hashed | hashed:<d> | table:<path>");
    c->add_option("--epochs", ner_cfg.epochs, "Epochs");
    c->add_option("--batch", ner_cfg.batch_size, "Batch size");
    c->add_option("--lr", ner_cfg.learning_rate, "Adam learning rate");
    c->add_option("--dropout", ner_cfg.dropout, "Feature dropout during training");
    c->add_option("--seed", ner_cfg.seed, "Seed");
    c->add_flag("--fine-tune-lr", ner_fine_tune_lr, "Use the 5e-8 fine-tuning learning rate");
    c->add_flag("--unconstrained", ner_unconstrained, "Allow O->I and start->I transitions");
  };
  auto* ner_train = ner_cmd->add_subcommand("train", "Train a tagger");
  add_train_opts(ner_train);
  ner_train->add_option("--validation", ner_val, "Validation ner.jsonl")->check(CLI::ExistingFile);
  ner_train->add_option("--out", ner_out, "model.crf.json")->required();
  auto* ner_eval = ner_cmd->add_subcommand("eval", "Evaluate a tagger");
  ner_eval->add_option("--model", ner_model, "model.crf.json")->required()->check(CLI::ExistingFile);
  ner_eval->add_option("--data", ner_data, "ner.jsonl")->required()->check(CLI::ExistingFile);
  ner_eval->add_option("--encoder", ner_encoder, "Override the encoder stored with the model");
  auto* ner_kfold = ner_cmd->add_subcommand("kfold", "k-fold cross-validation");
  add_train_opts(ner_kfold);
  ner_kfold->add_option("--k", ner_k, "Folds");

  // rc
  auto* rc_cmd = app.add_subcommand("rc", "Few-shot relation classification");
  rc_cmd->require_subcommand(1);
  std::string rc_data, rc_scorer = "default", rc_provider = "hashed";
  RotationConfig rc_cfg;
  auto add_rc_opts = [&](CLI::App* c) {
    c->add_option("--data", rc_data, "rc.jsonl")->required()->check(CLI::ExistingFile);
    c->add_option("--n", rc_cfg.n_way, "Ways");
    c->add_option("--k", rc_cfg.k_shot, "Shots");
    c->add_option("--q", rc_cfg.q_query, "Queries per relation");
    c->add_option("--iters", rc_cfg.iterations, "Episodes");
    c->add_option("--seed", rc_cfg.seed, "Seed");
    c->add_option("--scorer", rc_scorer, "default | table:<path> | external:<cmd>");
    c->add_option("--provider", rc_provider, "Encoder provider of the default scorer");
  };
  auto* rc_eval = rc_cmd->add_subcommand("eval", "Episode accuracy");
  add_rc_opts(rc_eval);
  auto* rc_cv = rc_cmd->add_subcommand("cv", "Rotation cross-validation over relations");
  add_rc_opts(rc_cv);
  std::size_t rc_per_relation = 50;
  rc_cv->add_option("--folds", rc_cfg.folds, "Folds (1..5)");
  rc_cv->add_option("--per-relation", rc_per_relation, "Required instances per relation (0 = any)");

  // extract
  auto* ex_cmd = app.add_subcommand("extract", "Run the extraction pipeline over a corpus");
  std::string ex_corpus, ex_ner, ex_encoder, ex_scorer = "default", ex_provider = "hashed", ex_schema, ex_support,
      ex_out, ex_stats, ex_candidates, ex_hist, ex_checkpoint, ex_store, ex_mode = "forward", ex_manifest;
  double ex_theta = 0.0, ex_bin = 0.05;
  PipelineConfig ex_cfg;
  ex_cmd->add_option("--corpus", ex_corpus, "corpus.jsonl")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--ner", ex_ner, "model.crf.json")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--encoder", ex_encoder, "Override the tagger's token encoder");
  ex_cmd->add_option("--scorer", ex_scorer, "default | table:<path> | external:<cmd>");
  ex_cmd->add_option("--provider", ex_provider, "Encoder provider of the default scorer");
  ex_cmd->add_option("--schema", ex_schema, "schema.json")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--support", ex_support, "Annotated rc.jsonl for the support bank")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--theta", ex_theta, "Score threshold")->required();
  ex_cmd->add_option("--k", ex_cfg.extraction.k, "Support instances per relation");
  ex_cmd->add_option("--seed", ex_cfg.extraction.seed, "Support draw seed");
  ex_cmd->add_option("--mode", ex_mode, "forward or both")->check(CLI::IsMember({"forward", "both"}));
  ex_cmd->add_option("--max-pairs", ex_cfg.extraction.max_pairs_per_sentence, "Per-sentence pair cap");
  ex_cmd->add_option("--out", ex_out, "triples.jsonl")->required();
  ex_cmd->add_option("--stats", ex_stats, "stats.json");
  ex_cmd->add_option("--manifest", ex_manifest, "manifest.json");
  ex_cmd->add_option("--candidates-out", ex_candidates, "All classified pairs before thresholding");
  ex_cmd->add_option("--histogram", ex_hist, "Threshold sweep CSV");
  ex_cmd->add_option("--bin-width", ex_bin, "Histogram step");
  ex_cmd->add_option("--checkpoint", ex_checkpoint, "Resumable progress file");
  ex_cmd->add_option("--store", ex_store, "Also load the triples into this graph store");

  // validate
  auto* val_cmd = app.add_subcommand("validate", "Human validation of extracted triples");
  val_cmd->require_subcommand(1);
  auto* val_sample = val_cmd->add_subcommand("sample", "Sample triples per relation for examiners");
  std::string val_triples, val_out, val_records;
  std::size_t val_per = 100;
  std::uint64_t val_seed = 0;
  val_sample->add_option("--triples", val_triples, "triples.jsonl")->required()->check(CLI::ExistingFile);
  val_sample->add_option("--per-relation", val_per, "Sample size per relation");
  val_sample->add_option("--seed", val_seed, "Seed");
  val_sample->add_option("--out", val_out, "Sample as validation-record template jsonl")->required();
  auto* val_adj = val_cmd->add_subcommand("adjudicate", "Accuracy from two votes plus adjudication");
  val_adj->add_option("--records", val_records, "Validation records jsonl")->required()->check(CLI::ExistingFile);

  // graph
  auto* g_cmd = app.add_subcommand("graph", "Graph store and HTTP service");
  g_cmd->require_subcommand(1);
  std::string g_triples, g_store, g_bind = "127.0.0.1:8080", g_out, g_in;
  ServiceOptions g_opts;
  auto* g_load = g_cmd->add_subcommand("load", "Append triples to a store");
  g_load->add_option("--triples", g_triples, "triples.jsonl")->required()->check(CLI::ExistingFile);
  g_load->add_option("--store", g_store, "Store directory")->required();
  auto* g_serve = g_cmd->add_subcommand("serve", "Serve the read-only JSON API");
  g_serve->add_option("--store", g_store, "Store directory")->required()->check(CLI::ExistingDirectory);
  g_serve->add_option("--bind", g_bind, "host:port");
  g_serve->add_option("--cors-origin", g_opts.cors_origin, "Allowed browser origin");
  auto* g_export = g_cmd->add_subcommand("export", "Write the store as one JSON document");
  g_export->add_option("--store", g_store, "Store directory")->required()->check(CLI::ExistingDirectory);
  g_export->add_option("--out", g_out, "export.json")->required();
  auto* g_import = g_cmd->add_subcommand("import", "Load an export into a store");
  g_import->add_option("--in", g_in, "export.json")->required()->check(CLI::ExistingFile);
  g_import->add_option("--store", g_store, "Store directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest_cmd->parsed()) {
      const auto r = ingest(ingest_in, ingest_format == "jsonl" ? CorpusFormat::Jsonl : CorpusFormat::Inverted);
      if (r.dropped_empty) spdlog::warn("dropped {} records with empty text", r.dropped_empty);
      save_corpus(ingest_out, r.records);
      print({{"records", r.records.size()}, {"dropped_empty", r.dropped_empty}});
    } else if (pre_cmd->parsed()) {
      if (pre_corpus.empty() == pre_import.empty()) fail(ErrorCode::InvalidArgument, "give exactly one of --corpus or --import");
      std::vector<CandidateTriple> out;
      std::size_t sentences = 0;
      const auto keep = [&](std::vector<CandidateTriple> cands) {
        if (pre_best) {
          if (auto b = select_best(cands)) out.push_back(*b);
        } else {
          for (auto& c : cands) out.push_back(std::move(c));
        }
      };
      if (!pre_corpus.empty()) {
        const auto abbr = abbreviations_from(pre_abbr);
        auto records = load_corpus(pre_corpus);
        if (pre_sample) records = sample_records(records, pre_sample, pre_seed);
        for (const auto& rec : records) {
          for (const auto& s : segment(rec, abbr)) {
            ++sentences;
            keep(extract_candidates(s));
          }
        }
      } else {
        auto imported = import_external(pre_import);
        if (imported.unresolved) spdlog::warn("{} external triples could not be aligned to their sentence", imported.unresolved);
        sentences = imported.sentences.size();
        std::map<SentenceRef, std::vector<CandidateTriple>> by_sentence;
        for (auto& c : imported.candidates) by_sentence[c.sentence].push_back(std::move(c));
        for (auto& [ref, cands] : by_sentence) keep(std::move(cands));
      }
      std::vector<json> rows;
      for (const auto& c : out) rows.push_back(to_json(c));
      write_jsonl(pre_out, rows);
      print({{"sentences", sentences}, {"candidates", out.size()}});
    } else if (schema_cmd->parsed()) {
      std::vector<CandidateTriple> cands;
      for_each_jsonl(schema_candidates, [&](std::size_t, const json& j) { cands.push_back(candidate_from_json(j)); });
      schema_opts.triple_embedding = schema_embedding == "whole" ? TripleEmbedding::WholeText : TripleEmbedding::ComponentMean;
      const auto provider = make_provider(schema_provider);
      const auto induced = induce_schema(cands, *provider, schema_opts);
      if (induced.truncated) spdlog::warn("{} inputs truncated to the encoder limit", induced.truncated);
      write_file(schema_out, to_json(induced).dump(2) + "\n");
      print({{"relations", induced.relations.size()},
             {"entity_clusters", induced.entity_clusters.size()},
             {"distinct_triples", induced.distinct.size()},
             {"entity_objective", induced.entity_objective},
             {"relation_objective", induced.relation_objective}});
    } else if (brat_cmd->parsed()) {
      const auto parts = split(brat_out, ',');
      if (parts.size() != 2) fail(ErrorCode::InvalidArgument, "--out takes rc.jsonl,ner.jsonl");
      const auto doc = import_brat_dir(brat_txt, brat_ann);
      for (const auto& w : lint_annotations(doc.ner, doc.rc, lint_cap)) {
        spdlog::warn("{} [{}, {}) {}: {}", w.instance_id, w.span.begin, w.span.end, w.kind, w.message);
      }
      save_rc(parts[0], doc.rc);
      save_ner(parts[1], doc.ner);
      print({{"rc", doc.rc.size()}, {"ner", doc.ner.size()}});
    } else if (diff_cmd->parsed()) {
      const auto d = diff_annotations(load_rc(diff_before), load_rc(diff_after));
      print({{"added", d.added}, {"removed", d.removed}, {"changed", d.changed}});
    } else if (split_cmd->parsed()) {
      const std::filesystem::path dir = split_out_dir;
      std::filesystem::create_directories(dir);
      if (split_kind == "rc") {
        const auto s = split_rc(load_rc(split_data), split_seed, {},
                                split_per_relation ? std::optional<std::size_t>(split_per_relation) : std::nullopt);
        save_rc(dir / "rc_train.jsonl", s.train);
        save_rc(dir / "rc_val.jsonl", s.validation);
        save_rc(dir / "rc_test.jsonl", s.test);
        print({{"order", s.order},
               {"train", s.relations.train},
               {"validation", s.relations.validation},
               {"test", s.relations.test}});
      } else {
        const auto s = split_ner(load_ner(split_data), split_seed, 0.8,
                                 split_expected ? std::optional<std::size_t>(split_expected) : std::nullopt);
        save_ner(dir / "ner_train.jsonl", s.train);
        save_ner(dir / "ner_val.jsonl", s.validation);
        if (!s.test.empty()) save_ner(dir / "ner_test.jsonl", s.test);
        print({{"train", s.train.size()}, {"validation", s.validation.size()}, {"test", s.test.size()}});
      }
    } else if (ep_cmd->parsed()) {
      const auto ep = sample_episode(group_by_relation(load_rc(ep_data)), ep_n, ep_k, ep_q, ep_seed);
      json support = json::array(), queries = json::array();
      for (std::size_t n = 0; n < ep.n_way; ++n) {
        json s = json::array(), q = json::array();
        for (const auto& r : ep.support[n]) s.push_back(r.id);
        for (const auto& r : ep.queries[n]) q.push_back(r.id);
        support.push_back(std::move(s));
        queries.push_back(std::move(q));
      }
      print({{"relations", ep.relations}, {"support", support}, {"queries", queries}});
    } else if (ner_train->parsed() || ner_kfold->parsed()) {
      if (ner_fine_tune_lr) ner_cfg.learning_rate = TrainConfig{}.learning_rate;
      ner_cfg.constrained = !ner_unconstrained;
      const auto encoder = make_token_encoder(ner_encoder);
      const auto data = load_ner(ner_data);
      if (ner_train->parsed()) {
        const auto val = ner_val.empty() ? std::vector<NerInstance>{} : load_ner(ner_val);
        auto result = train(data, val, *encoder, ner_cfg);
        result.model.manifest["encoder_spec"] = ner_encoder;
        result.model.manifest["train_loss"] = result.train_loss;
        result.model.manifest["validation_loss"] = result.validation_loss;
        save_model(ner_out, result.model);
        json report = {{"train_loss", result.train_loss}, {"validation_loss", result.validation_loss}};
        if (!val.empty()) report["validation"] = to_json(evaluate(result.model, *encoder, val));
        print(report);
      } else {
        const auto r = kfold(data, *encoder, ner_cfg, ner_k, ner_cfg.seed);
        json folds = json::array();
        for (const auto& f : r.folds) folds.push_back(to_json(f));
        print({{"folds", folds}, {"mean", to_json(r.mean)}, {"stddev", to_json(r.stddev)}});
      }
    } else if (ner_eval->parsed()) {
      const auto model = load_model(ner_model);
      const auto encoder = encoder_for(model, ner_encoder == "hashed" ? std::string() : ner_encoder);
      print(to_json(evaluate(model, *encoder, load_ner(ner_data))));
    } else if (rc_eval->parsed() || rc_cv->parsed()) {
      const auto data = load_rc(rc_data);
      const auto provider = make_provider(rc_provider);
      if (rc_eval->parsed()) {
        const auto scorer = make_scorer(rc_scorer, provider);
        const auto r = evaluate_episodes(*scorer, group_by_relation(data), rc_cfg.n_way, rc_cfg.k_shot, rc_cfg.q_query,
                                         rc_cfg.iterations, rc_cfg.seed);
        if (r.truncated_pairs) spdlog::warn("{} pairs truncated to {} tokens", r.truncated_pairs, scorer->max_tokens());
        print(to_json(r));
      } else {
        const auto split = split_rc(data, rc_cfg.seed, rc_cfg.counts,
                                    rc_per_relation ? std::optional<std::size_t>(rc_per_relation) : std::nullopt);
        const auto factory = [&](const std::vector<RcInstance>&) { return make_scorer(rc_scorer, provider); };
        const auto r = rotation_cv(factory, data, split.order, rc_cfg);
        json folds = json::array();
        for (const auto& f : r.folds) {
          folds.push_back({{"fold", f.fold},
                           {"validation", to_json(f.validation)},
                           {"test", to_json(f.test)},
                           {"validation_relations", f.relations.validation},
                           {"test_relations", f.relations.test}});
        }
        print({{"folds", folds},
               {"validation", {{"mean", r.validation.mean}, {"stddev", r.validation.stddev}}},
               {"test", {{"mean", r.test.mean}, {"stddev", r.test.stddev}}}});
      }
    } else if (ex_cmd->parsed()) {
      const auto corpus = load_corpus(ex_corpus);
      const auto model = load_model(ex_ner);
      const auto encoder = encoder_for(model, ex_encoder);
      const auto scorer = make_scorer(ex_scorer, make_provider(ex_provider));
      const auto relations = load_schema_relations(ex_schema);
      const auto bank = SupportBank::draw(relations, group_by_relation(load_rc(ex_support)), ex_cfg.extraction.k,
                                          ex_cfg.extraction.seed);
      ex_cfg.theta = ex_theta;
      ex_cfg.extraction.mode = pair_mode_from_string(ex_mode);
      if (!ex_checkpoint.empty()) ex_cfg.checkpoint = ex_checkpoint;
      std::optional<GraphStore> store;
      if (!ex_store.empty()) store = GraphStore::open(ex_store, true);
      const auto result = run_pipeline(corpus, {&model, encoder.get(), scorer.get(), &bank}, ex_cfg,
                                       store ? &*store : nullptr);
      if (store) store->close();
      if (result.stats.dropped_pairs) spdlog::warn("{} entity pairs dropped by the per-sentence cap", result.stats.dropped_pairs);
      if (result.stats.truncated_pairs) spdlog::warn("{} pairs truncated to {} tokens", result.stats.truncated_pairs, scorer->max_tokens());
      save_triples(ex_out, result.triples);
      if (!ex_candidates.empty()) save_triples(ex_candidates, result.candidates);
      if (!ex_stats.empty()) write_file(ex_stats, to_json(result.stats).dump(2) + "\n");
      if (!ex_manifest.empty()) write_file(ex_manifest, result.manifest.dump(2) + "\n");
      if (!ex_hist.empty()) {
        std::vector<double> scores;
        for (const auto& t : result.candidates) scores.push_back(t.score);
        write_file(ex_hist, histogram_csv(score_histogram(scores, ex_bin)));
      }
      print(to_json(result.stats));
    } else if (val_sample->parsed()) {
      const auto s = sample_validation(load_triples(val_triples), val_per, val_seed);
      for (const auto& [rel, n] : s.shortfalls) spdlog::warn("relation {} has only {} triples (wanted {})", rel, n, val_per);
      std::vector<json> rows;
      for (const auto& t : s.triples) {
        json row = to_json(t);
        row["triple_id"] = t.id();
        row["votes"] = {nullptr, nullptr};
        row["adjudication"] = nullptr;
        rows.push_back(std::move(row));
      }
      write_jsonl(val_out, rows);
      print({{"sampled", s.triples.size()}, {"shortfalls", s.shortfalls}});
    } else if (val_adj->parsed()) {
      const auto records = load_validation_records(val_records);
      json per = json::object();
      for (const auto& [rel, b] : per_relation_accuracy(records)) per[rel] = to_json(b);
      json report = to_json(adjudicate(records));
      report["per_relation"] = std::move(per);
      print(report);
    } else if (g_load->parsed()) {
      auto store = GraphStore::open(g_store, true);
      std::size_t added = 0;
      const auto triples = load_triples(g_triples);
      for (const auto& t : triples) added += store.upsert(t).added_evidence;
      store.close();
      print({{"triples", triples.size()}, {"new_evidence", added}, {"stats", stats_json(store.stats())}});
    } else if (g_serve->parsed()) {
      const auto [host, port] = parse_bind_address(g_bind);
      auto store = std::make_shared<const GraphStore>(GraphStore::open(g_store, false));
      GraphService service(store, g_opts);
      const int bound = service.bind(host, port);
      spdlog::info("serving {} nodes, {} edges on http://{}:{}", store->nodes().size(), store->edges().size(), host, bound);
      service.run();
    } else if (g_export->parsed()) {
      const auto store = GraphStore::open(g_store, false);
      store.export_to(g_out);
      print(stats_json(store.stats()));
    } else if (g_import->parsed()) {
      auto store = GraphStore::open(g_store, true);
      store.import_from(g_in);
      store.close();
      print(stats_json(store.stats()));
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
