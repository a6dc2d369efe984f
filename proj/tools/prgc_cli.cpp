// prgc: train, run and evaluate a potential-relation + global-correspondence
// triple extractor from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "prgc/config.hpp"
#include "prgc/prgc.hpp"

namespace fs = std::filesystem;
using namespace prgc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1; // usage or configuration problem
constexpr int kExitData = 2;  // unreadable or inconsistent data
constexpr int kExitRuntime = 3;

/// flag > config file > built-in default, logged at startup.
struct Resolver {
  KvConfig cfg;
  std::ostream& log;

  template <class T, class Get>
  T pick(const CLI::Option* opt, const T& flag_value, const std::string& key, T def,
         Get getter) const {
    T v = def;
    const char* source = "default";
    if (cfg.has(key)) {
      v = getter(key);
      source = "config";
    }
    if (opt && opt->count() > 0) {
      v = flag_value;
      source = "flag";
    }
    log << "  " << key << " = " << v << "  (" << source << ")\n";
    return v;
  }

  double num(const CLI::Option* o, double fv, const std::string& k, double d) const {
    return pick(o, fv, k, d, [&](const std::string& key) { return cfg.get_double(key); });
  }
  long long integer(const CLI::Option* o, long long fv, const std::string& k, long long d) const {
    return pick(o, fv, k, d, [&](const std::string& key) { return cfg.get_int(key); });
  }
  std::string str(const CLI::Option* o, const std::string& fv, const std::string& k,
                  const std::string& d) const {
    return pick(o, fv, k, d, [&](const std::string& key) { return cfg.get_string(key); });
  }
  bool boolean(const CLI::Option* o, bool fv, const std::string& k, bool d) const {
    return pick(o, fv, k, d, [&](const std::string& key) { return cfg.get_bool(key); });
  }
};

struct ResolvedTrain {
  EncoderConfig enc;
  TrainConfig train;
  TaggingMode tagging = TaggingMode::Dual;
  SpanMode mode = SpanMode::FullSpan;
};

void write_resolved_config(const std::string& path, const ResolvedTrain& r) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write resolved config: " + path);
  os << "# resolved configuration; feed back via --config to reproduce the run\n";
  os << "seed = " << r.train.seed << "\n";
  os << "epochs = " << r.train.epochs << "\n";
  os << "batch_size = " << r.train.batch_size << "\n";
  os << "encoder_lr = " << r.train.encoder_lr << "\n";
  os << "decoder_lr = " << r.train.decoder_lr << "\n";
  os << "weight_decay = " << r.train.weight_decay << "\n";
  os << "clip_norm = " << r.train.clip_norm << "\n";
  os << "alpha = " << r.train.alpha << "\n";
  os << "beta = " << r.train.beta << "\n";
  os << "gamma = " << r.train.gamma << "\n";
  os << "negative_relation_samples = " << r.train.negative_relation_samples << "\n";
  os << "keep_best = " << (r.train.keep_best ? 1 : 0) << "\n";
  os << "lambda1 = " << r.train.lambda1 << "\n";
  os << "lambda2 = " << r.train.lambda2 << "\n";
  os << "tagging = " << to_string(r.tagging) << "\n";
  os << "mode = " << to_string(r.mode) << "\n";
  os << "d = " << r.enc.d << "\n";
  os << "layers = " << r.enc.layers << "\n";
  os << "max_len = " << r.enc.max_len << "\n";
}

void report_skips(const LoadResult& loaded, const std::string& label) {
  for (const auto& s : loaded.skipped)
    std::cerr << "warning: " << label << " record " << s.index << " skipped: " << s.reason
              << "\n";
}

int map_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InfeasibleConfig*>(&e))
    return kExitUsage;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IdMismatch*>(&e) ||
      dynamic_cast<const UnresolvableEntity*>(&e) || dynamic_cast<const CheckpointError*>(&e))
    return kExitData;
  return kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"prgc - joint relational triple extraction "
               "(potential relations, relation-specific tagging, global correspondence)"};
  app.require_subcommand(1);

  // shared flag storage
  std::string config_path, train_path, valid_path, test_path, out_path, checkpoint_path;
  std::string pred_path, gold_path, relations_path, json_path;
  std::string mode_s = "full_span", tagging_s = "dual";
  double lambda1 = 0.5, lambda2 = 0.5;
  std::uint64_t seed = 0;
  long long epochs = 100, batch_size = 0;

  // train ---------------------------------------------------------------
  auto* cmd_train = app.add_subcommand("train", "train a model and write a checkpoint");
  cmd_train->add_option("--config", config_path, "key = value configuration file");
  cmd_train->add_option("--train", train_path, "training dataset (JSON lines)")->required();
  cmd_train->add_option("--valid", valid_path, "validation dataset");
  cmd_train->add_option("--relations", relations_path, "relation vocabulary, one name per line");
  cmd_train->add_option("--out", out_path, "output directory")->required();
  auto* o_seed = cmd_train->add_option("--seed", seed, "root RNG seed");
  auto* o_epochs = cmd_train->add_option("--epochs", epochs, "training epochs");
  auto* o_batch = cmd_train->add_option("--batch-size", batch_size, "0 = auto");
  auto* o_l1_t = cmd_train->add_option("--lambda1", lambda1, "relation threshold");
  auto* o_l2_t = cmd_train->add_option("--lambda2", lambda2, "correspondence threshold");
  auto* o_tagging = cmd_train->add_option("--tagging", tagging_s, "dual|single");
  auto* o_mode_t = cmd_train->add_option("--mode", mode_s, "last_word|full_span");

  // predict -------------------------------------------------------------
  auto* cmd_predict = app.add_subcommand("predict", "extract triples with a trained model");
  cmd_predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  cmd_predict->add_option("--test", test_path, "input dataset (triples optional)")->required();
  cmd_predict->add_option("--out", out_path, "prediction file (JSON lines)")->required();
  auto* o_l1_p = cmd_predict->add_option("--lambda1", lambda1, "relation threshold");
  auto* o_l2_p = cmd_predict->add_option("--lambda2", lambda2, "correspondence threshold");
  cmd_predict->add_option("--seed", seed, "accepted for interface uniformity; inference is deterministic");

  // eval ----------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("eval", "score predictions against gold");
  cmd_eval->add_option("--pred", pred_path, "prediction file from `prgc predict`")->required();
  cmd_eval->add_option("--gold", gold_path, "gold dataset")->required();
  cmd_eval->add_option("--mode", mode_s, "last_word|full_span matching");
  cmd_eval->add_option("--relations", relations_path, "relation vocabulary for the gold file");
  cmd_eval->add_option("--json", json_path, "also write all reports as JSON");
  cmd_eval->add_option("--seed", seed, "accepted for interface uniformity");

  // stats ---------------------------------------------------------------
  auto* cmd_stats = app.add_subcommand("stats", "dataset statistics (patterns, triples)");
  cmd_stats->add_option("--data", test_path, "dataset file")->required();
  cmd_stats->add_option("--relations", relations_path, "relation vocabulary");
  cmd_stats->add_option("--json", json_path, "also write the report as JSON");
  cmd_stats->add_option("--mode", mode_s, "last_word|full_span annotation");
  bool cross_soo = false;
  cmd_stats->add_flag("--cross-triple-soo", cross_soo,
                      "count cross-triple subject/object overlap as SOO");
  cmd_stats->add_option("--seed", seed, "accepted for interface uniformity");

  // generate ------------------------------------------------------------
  auto* cmd_gen = app.add_subcommand("generate", "write a synthetic corpus");
  std::string gen_out;
  SynthConfig synth;
  cmd_gen->add_option("--out", gen_out, "output dataset file")->required();
  cmd_gen->add_option("--seed", synth.seed, "generator seed");
  cmd_gen->add_option("--nr", synth.n_r, "relation count");
  cmd_gen->add_option("--normal", synth.normal, "Normal sentences");
  cmd_gen->add_option("--seo", synth.seo, "SEO sentences");
  cmd_gen->add_option("--epo", synth.epo, "EPO sentences");
  cmd_gen->add_option("--soo", synth.soo, "SOO sentences");
  cmd_gen->add_option("--len-min", synth.len_min, "shortest sentence");
  cmd_gen->add_option("--len-max", synth.len_max, "longest sentence");
  cmd_gen->add_option("--triples-min", synth.triples_min, "fewest triples per sentence");
  cmd_gen->add_option("--triples-max", synth.triples_max, "most triples per sentence");
  cmd_gen->add_option("--entity-vocab", synth.entity_vocab, "entity token pool size");
  cmd_gen->add_option("--filler-vocab", synth.filler_vocab, "filler token pool size");
  auto* o_tagging_g = cmd_gen->add_option("--tagging", tagging_s, "dual|single");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_train->parsed()) {
      KvConfig cfg = config_path.empty() ? KvConfig() : KvConfig::from_file(config_path);
      std::cerr << "resolved options:\n";
      Resolver rv{cfg, std::cerr};

      ResolvedTrain r;
      r.train.seed = static_cast<std::uint64_t>(rv.integer(o_seed, static_cast<long long>(seed), "seed", 0));
      r.train.epochs = static_cast<int>(rv.integer(o_epochs, epochs, "epochs", 100));
      r.train.batch_size = static_cast<int>(rv.integer(o_batch, batch_size, "batch_size", 0));
      r.train.encoder_lr = rv.num(nullptr, 0, "encoder_lr", 5e-5);
      r.train.decoder_lr = rv.num(nullptr, 0, "decoder_lr", 1e-3);
      r.train.weight_decay = rv.num(nullptr, 0, "weight_decay", 0.01);
      r.train.clip_norm = rv.num(nullptr, 0, "clip_norm", 1.0);
      r.train.alpha = rv.num(nullptr, 0, "alpha", 1.0);
      r.train.beta = rv.num(nullptr, 0, "beta", 1.0);
      r.train.gamma = rv.num(nullptr, 0, "gamma", 1.0);
      r.train.negative_relation_samples =
          static_cast<int>(rv.integer(nullptr, 0, "negative_relation_samples", 0));
      r.train.keep_best = rv.boolean(nullptr, false, "keep_best", false);
      r.train.lambda1 = rv.num(o_l1_t, lambda1, "lambda1", 0.5);
      r.train.lambda2 = rv.num(o_l2_t, lambda2, "lambda2", 0.5);
      r.tagging = tagging_mode_from(rv.str(o_tagging, tagging_s, "tagging", "dual"));
      r.mode = span_mode_from(rv.str(o_mode_t, mode_s, "mode", "full_span"));
      r.train.eval_mode = r.mode;
      r.enc.d = static_cast<int>(rv.integer(nullptr, 0, "d", 32));
      r.enc.layers = static_cast<int>(rv.integer(nullptr, 0, "layers", 2));
      r.enc.max_len = static_cast<int>(rv.integer(nullptr, 0, "max_len", 100));

      LoadResult train_data = load_dataset(train_path, r.mode, relations_path, r.enc.max_len);
      report_skips(train_data, "train");
      std::vector<AnnotatedSentence> valid;
      if (!valid_path.empty()) {
        LoadResult valid_data =
            load_dataset(valid_path, r.mode, relations_path, r.enc.max_len, &train_data.relations);
        report_skips(valid_data, "valid");
        valid = std::move(valid_data.sentences);
      }

      fs::create_directories(out_path);
      write_resolved_config((fs::path(out_path) / "config.resolved").string(), r);

      TrainResult result = train(train_data.sentences, valid, train_data.relations, r.enc,
                                 r.tagging, r.train, &std::cerr);

      std::ofstream metrics(fs::path(out_path) / "metrics.jsonl");
      for (const EpochMetrics& em : result.history)
        metrics << nlohmann::json{{"epoch", em.epoch},
                                  {"loss_rel", em.loss_rel},
                                  {"loss_seq", em.loss_seq},
                                  {"loss_global", em.loss_global},
                                  {"loss_total", em.loss_total},
                                  {"val_f1", em.val_f1}}
                       .dump()
                << "\n";
      save_checkpoint((fs::path(out_path) / "checkpoint.prgc").string(), result.checkpoint);
      std::cerr << "wrote " << (fs::path(out_path) / "checkpoint.prgc").string() << "\n";
      return kExitOk;
    }

    if (cmd_predict->parsed()) {
      Checkpoint ckpt = load_checkpoint(checkpoint_path);
      double l1 = o_l1_p->count() ? lambda1 : ckpt.config.lambda1;
      double l2 = o_l2_p->count() ? lambda2 : ckpt.config.lambda2;
      ExtractOptions opt;
      opt.lambda1 = l1;
      opt.lambda2 = l2;

      std::vector<RawRecord> records = read_raw_records(test_path);
      std::ofstream os(out_path);
      if (!os) throw ConfigError("cannot write predictions: " + out_path);
      int skipped = 0;
      for (int idx = 0; idx < static_cast<int>(records.size()); ++idx) {
        std::vector<std::string> tokens = tokenize(records[idx].text);
        if (tokens.empty() || static_cast<int>(tokens.size()) > ckpt.model.encoder.max_len()) {
          std::cerr << "warning: record " << idx << " skipped (empty or longer than max_len)\n";
          ++skipped;
          continue;
        }
        Sentence sentence("s" + std::to_string(idx), std::move(tokens));
        SentencePrediction pred =
            extract_detailed(ckpt.model.encoder, ckpt.model.decoder, sentence, opt);
        write_prediction(os, sentence, pred, ckpt.model.relations);
      }
      std::cerr << "predicted " << (records.size() - skipped) << " sentences (" << skipped
                << " skipped) with lambda1=" << l1 << " lambda2=" << l2 << "\n";
      return kExitOk;
    }

    if (cmd_eval->parsed()) {
      SpanMode mode = span_mode_from(mode_s);
      std::vector<PredictionRecord> preds = read_predictions(pred_path);
      LoadResult gold = load_dataset(gold_path, mode, relations_path);
      report_skips(gold, "gold");

      std::map<std::string, const PredictionRecord*> by_id;
      for (const auto& p : preds) by_id[p.id] = &p;

      std::vector<std::set<TripleKey>> pred_keys, gold_keys;
      std::vector<SubtaskView> pred_views, gold_views;
      bool intermediates = true;
      for (const AnnotatedSentence& ann : gold.sentences) {
        auto it = by_id.find(ann.sentence.id);
        if (it == by_id.end())
          throw IdMismatch("no prediction for gold sentence '" + ann.sentence.id + "'");
        pred_keys.push_back(record_triple_keys(*it->second, mode));
        gold_keys.push_back(triple_keys(ann.sentence, ann.triples, mode, gold.relations));
        intermediates = intermediates && it->second->has_intermediates;
        pred_views.push_back(record_subtask_view(*it->second, mode));
        gold_views.push_back(subtask_view_gold(ann, mode, gold.relations));
      }
      if (preds.size() > gold.sentences.size())
        std::cerr << "warning: " << (preds.size() - gold.sentences.size())
                  << " prediction(s) without a gold sentence were ignored\n";

      ScoreReport overall = score_triples(pred_keys, gold_keys);
      std::cout << "== triples (" << to_string(mode) << ") ==\n";
      std::cout << score_to_text("overall", overall) << "\n";

      nlohmann::json out_json;
      out_json["mode"] = to_string(mode);
      out_json["overall"] = score_to_json(overall);

      if (intermediates) {
        SubtaskReports sub = score_subtasks(pred_views, gold_views);
        std::cout << "== subtasks ==\n";
        std::cout << score_to_text("relation", sub.relation) << "\n";
        std::cout << score_to_text("entity", sub.entity) << "\n";
        std::cout << score_to_text("alignment", sub.alignment) << "\n";
        out_json["subtasks"] = {{"relation", score_to_json(sub.relation)},
                                {"entity", score_to_json(sub.entity)},
                                {"alignment", score_to_json(sub.alignment)}};
      } else {
        std::cout << "(prediction file lacks intermediates; subtask reports skipped)\n";
      }

      BreakdownReport bd = breakdown(pred_keys, gold_keys, gold.sentences);
      std::cout << "== by pattern ==\n";
      for (const auto& [pat, score] : bd.by_pattern)
        std::cout << score_to_text(to_string(pat), score) << "\n";
      std::cout << "== by triple count ==\n";
      for (const auto& [bucket, score] : bd.by_count)
        std::cout << score_to_text(bucket == 5 ? "N>=5" : "N=" + std::to_string(bucket), score)
                  << "\n";
      for (const auto& [pat, score] : bd.by_pattern)
        out_json["by_pattern"][to_string(pat)] = score_to_json(score);
      for (const auto& [bucket, score] : bd.by_count)
        out_json["by_count"][std::to_string(bucket)] = score_to_json(score);

      if (!json_path.empty()) {
        std::ofstream js(json_path);
        if (!js) throw ConfigError("cannot write JSON report: " + json_path);
        js << out_json.dump(2) << "\n";
      }
      return kExitOk;
    }

    if (cmd_stats->parsed()) {
      SpanMode mode = span_mode_from(mode_s);
      LoadResult data = load_dataset(test_path, mode, relations_path);
      report_skips(data, "data");
      StatsReport st = dataset_stats(data.sentences, data.relations, cross_soo);
      std::cout << stats_to_text(st);
      if (!json_path.empty()) {
        std::ofstream js(json_path);
        if (!js) throw ConfigError("cannot write JSON report: " + json_path);
        js << stats_to_json(st).dump(2) << "\n";
      }
      return kExitOk;
    }

    if (cmd_gen->parsed()) {
      if (o_tagging_g->count()) synth.tagging = tagging_mode_from(tagging_s);
      SynthResult result = gen_synthetic(synth);
      std::ofstream os(gen_out);
      if (!os) throw ConfigError("cannot write dataset: " + gen_out);
      write_dataset(os, result.sentences, result.relations);
      std::ofstream rs(gen_out + ".relations");
      if (!rs) throw ConfigError("cannot write relations: " + gen_out + ".relations");
      write_relations(rs, result.relations);
      std::cerr << "wrote " << result.sentences.size() << " sentences to " << gen_out << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    return map_error(e);
  }
  return kExitUsage;
}
