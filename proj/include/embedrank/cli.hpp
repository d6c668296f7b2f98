#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embedrank/embedrank.hpp"
#include "embedrank/model_io.hpp"

namespace embedrank {
namespace cli_detail {

struct OutDir {
  std::filesystem::path dir;

  explicit OutDir(const std::string& d) : dir(d) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + d + "': " + ec.message());
  }

  std::string file(const std::string& name) const { return (dir / name).string(); }
};

// Every run leaves a manifest with the resolved configuration and the argv it
// was launched with, so any output can be regenerated from the manifest alone.
inline void write_manifest(const OutDir& out, const std::string& subcommand,
                           const std::vector<std::string>& argv, const nlohmann::json& resolved,
                           const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["argv"] = argv;
  m["resolved"] = resolved;
  m["outputs"] = outputs;
  std::ofstream f(out.file("manifest.json"));
  if (!f) throw IoError("cannot write manifest in " + out.dir.string());
  f << m.dump(2) << '\n';
}

// "1,2,5" or "1-20" -> ints
inline std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  try {
    const size_t dash = text.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = std::stoi(text.substr(0, dash));
      const int hi = std::stoi(text.substr(dash + 1));
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      size_t pos = 0;
      while (pos <= text.size()) {
        const size_t comma = std::min(text.find(',', pos), text.size());
        out.push_back(std::stoi(text.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "expected a comma list or lo-hi range of integers");
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  try {
    size_t pos = 0;
    while (pos <= text.size()) {
      const size_t comma = std::min(text.find(',', pos), text.size());
      out.push_back(std::stod(text.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "expected a comma list of numbers");
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

inline TextNorm parse_norm(const std::string& name) {
  if (name == "none") return TextNorm::kNone;
  if (name == "ascii") return TextNorm::kAsciiFold;
  throw CLI::ValidationError("--normalize", "expected 'none' or 'ascii'");
}

inline nlohmann::json report_json(const WraReport& r) {
  return {{"method", r.method}, {"k", r.k},         {"wra", r.wra},    {"correct", r.correct},
          {"total", r.total},   {"cab", r.cab},     {"alpha", r.alpha}};
}

inline void write_report_txt(const std::vector<WraReport>& reports, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %4s %10s %16s\n", "method", "k", "wra", "correct/total");
  f << line;
  for (const WraReport& r : reports) {
    std::snprintf(line, sizeof(line), "%-16s %4d %10.3f %10ld/%ld\n", r.method.c_str(), r.k,
                  r.wra, r.correct, r.total);
    f << line;
  }
}

inline void write_sweep_rows(const SweepTable& table, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  for (const SweepRow& row : table.rows) {
    for (const WraReport& r : row.reports) {
      nlohmann::json j = report_json(r);
      j["axis"] = table.axis;
      j["value"] = row.axis;
      f << j.dump() << '\n';
    }
  }
}

inline void write_sweep_table_txt(const SweepTable& table, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  if (table.rows.empty()) return;
  f << table.axis;
  for (const WraReport& r : table.rows.front().reports) f << '\t' << r.method;
  f << '\n';
  char num[48];
  for (const SweepRow& row : table.rows) {
    std::snprintf(num, sizeof(num), "%g", row.axis);
    f << num;
    for (const WraReport& r : row.reports) {
      std::snprintf(num, sizeof(num), "%.3f", r.wra);
      f << '\t' << num;
    }
    f << '\n';
  }
}

struct LoadedModels {
  std::optional<EmbedNetParams> embednet;
  std::optional<MlpParams> mlp;
  ModelSet set;

  void load_embednet(const std::string& path) {
    embednet = load_model(path).as_embednet();
    set.embednet = &*embednet;
  }
  void load_mlp(const std::string& path) {
    mlp = load_model(path).as_mlp();
    set.mlp = &*mlp;
  }
};

inline void print_history_summary(const TrainHistory& h, bool verbose) {
  if (verbose) {
    for (const EpochRecord& r : h.epochs) {
      std::fprintf(stderr, "epoch %3d  train %.6f  val %.6f  mined %ld (%.2fs)\n", r.epoch,
                   r.train_loss, r.val_loss, r.mined, r.seconds);
    }
  }
  std::printf("epochs run: %zu, best epoch: %d, best val loss: %.6f\n", h.epochs.size(),
              h.best_epoch, h.best_val_loss);
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args) {
  using cli_detail::OutDir;

  CLI::App app{"embedding-space reranking of recognizer hypotheses"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from an INI/TOML file; flags take precedence");

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted truth");
  SynthConfig synth_cfg;
  std::string synth_out;
  bool synth_verbose = false;
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "rng seed");
  synth->add_option("--n-train", synth_cfg.n_train, "training samples");
  synth->add_option("--n-val", synth_cfg.n_val, "validation samples");
  synth->add_option("--n-test", synth_cfg.n_test, "test samples");
  synth->add_option("--k", synth_cfg.k, "hypotheses per sample");
  synth->add_option("--dim", synth_cfg.dim, "embedding dimension");
  synth->add_option("--map-strength", synth_cfg.map_strength, "image-map distortion in [0,1]");
  synth->add_option("--squash", synth_cfg.squash, "coordinate nonlinearity strength");
  synth->add_option("--sigma-embed", synth_cfg.sigma_embed, "image embedding noise");
  synth->add_option("--sigma-quality", synth_cfg.sigma_quality, "per-sample quality spread");
  synth->add_option("--sigma-pos", synth_cfg.sigma_pos, "correct-text embedding noise");
  synth->add_option("--sigma-distract", synth_cfg.sigma_distract, "distractor spread");
  synth->add_option("--distract-ramp", synth_cfg.distract_ramp, "spread growth across ranks");
  synth->add_option("--conf-base", synth_cfg.conf_base, "confidence at rank 0");
  synth->add_option("--conf-decay", synth_cfg.conf_decay, "confidence falloff across ranks");
  synth->add_option("--conf-boost", synth_cfg.conf_boost, "confidence bump for the correct hyp");
  synth->add_option("--conf-noise", synth_cfg.conf_noise, "confidence jitter");
  synth->add_flag("-v,--verbose", synth_verbose);
  synth->callback([&] {
    OutDir out(synth_out);
    const SynthDataset data = synth_generate(synth_cfg);
    write_dataset(data.train, out.file("train.jsonl"));
    write_dataset(data.val, out.file("val.jsonl"));
    write_dataset(data.test, out.file("test.jsonl"));
    write_oracle(data.oracle, out.file("oracle.tsv"));
    nlohmann::json resolved = {
        {"seed", synth_cfg.seed},           {"n_train", synth_cfg.n_train},
        {"n_val", synth_cfg.n_val},         {"n_test", synth_cfg.n_test},
        {"k", synth_cfg.k},                 {"dim", synth_cfg.dim},
        {"map_strength", synth_cfg.map_strength}, {"squash", synth_cfg.squash},
        {"sigma_embed", synth_cfg.sigma_embed},   {"sigma_quality", synth_cfg.sigma_quality},
        {"sigma_pos", synth_cfg.sigma_pos},       {"sigma_distract", synth_cfg.sigma_distract},
        {"distract_ramp", synth_cfg.distract_ramp}, {"conf_base", synth_cfg.conf_base},
        {"conf_decay", synth_cfg.conf_decay},     {"conf_boost", synth_cfg.conf_boost},
        {"conf_noise", synth_cfg.conf_noise},     {"out_dir", synth_out}};
    cli_detail::write_manifest(out, "synth", args, resolved,
                               {"train.jsonl", "val.jsonl", "test.jsonl", "oracle.tsv"});
    std::printf("wrote %zu/%zu/%zu samples (dim %d, k %d) to %s\n", data.train.size(),
                data.val.size(), data.test.size(), synth_cfg.dim, synth_cfg.k,
                synth_out.c_str());
  });

  // ---- train ----------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a reranking model");
  train->require_subcommand(1);
  struct TrainCliArgs {
    std::string train_path, val_path, out_dir;
    TrainConfig cfg;
    std::vector<int> hidden;
    bool verbose = false;
  };

  auto add_train_options = [](CLI::App* sub, TrainCliArgs& a, bool embednet) {
    sub->add_option("--train", a.train_path, "training split")->required();
    sub->add_option("--val", a.val_path, "validation split")->required();
    sub->add_option("--out-dir", a.out_dir, "output directory")->required();
    sub->add_option("--lr,--learning-rate", a.cfg.learning_rate, "Adam learning rate");
    sub->add_option("--epochs", a.cfg.max_epochs, "maximum epochs");
    sub->add_option("--patience", a.cfg.patience, "early stopping patience");
    sub->add_option("--min-delta", a.cfg.min_delta, "early stopping improvement threshold");
    sub->add_option("--batch-size", a.cfg.batch_size, "triplets/pairs per Adam step");
    sub->add_option("--hidden", a.hidden, "hidden layer sizes, e.g. 1024,512")
        ->delimiter(',')
        ->expected(2);
    sub->add_option("--seed", a.cfg.seed, "rng seed");
    sub->add_flag("-v,--verbose", a.verbose, "print per-epoch losses");
    if (embednet) {
      sub->add_option("--margin,--gamma", a.cfg.gamma, "triplet margin");
      sub->add_option("--out-dim", a.cfg.out_dim, "projection output dimension");
    }
  };

  auto train_resolved = [](const TrainCliArgs& a, const char* kind) {
    return nlohmann::json{{"kind", kind},
                          {"train", a.train_path},
                          {"val", a.val_path},
                          {"out_dir", a.out_dir},
                          {"gamma", a.cfg.gamma},
                          {"learning_rate", a.cfg.learning_rate},
                          {"max_epochs", a.cfg.max_epochs},
                          {"patience", a.cfg.patience},
                          {"min_delta", a.cfg.min_delta},
                          {"batch_size", a.cfg.batch_size},
                          {"hidden1", a.cfg.hidden1},
                          {"hidden2", a.cfg.hidden2},
                          {"out_dim", a.cfg.out_dim},
                          {"seed", a.cfg.seed}};
  };

  auto* train_embed = train->add_subcommand("embednet", "triplet-loss projection network");
  TrainCliArgs embed_args;
  add_train_options(train_embed, embed_args, true);
  train_embed->callback([&] {
    if (!embed_args.hidden.empty()) {
      embed_args.cfg.hidden1 = embed_args.hidden[0];
      embed_args.cfg.hidden2 = embed_args.hidden[1];
    }
    OutDir out(embed_args.out_dir);
    const auto train_split = load_dataset(embed_args.train_path);
    const auto val_split = load_dataset(embed_args.val_path);
    auto [params, history] = train_embednet(train_split, val_split, embed_args.cfg);
    const nlohmann::json resolved = train_resolved(embed_args, "embednet");
    save_model(params, out.file("model.json"), resolved);
    write_history_csv(history, out.file("history.csv"));
    cli_detail::write_manifest(out, "train embednet", args, resolved,
                               {"model.json", "history.csv"});
    cli_detail::print_history_summary(history, embed_args.verbose);
  });

  auto* train_mlp_cmd = train->add_subcommand("mlp", "regression baseline network");
  TrainCliArgs mlp_args;
  mlp_args.cfg.max_epochs = 150;
  mlp_args.cfg.hidden1 = 256;
  mlp_args.cfg.hidden2 = 128;
  add_train_options(train_mlp_cmd, mlp_args, false);
  train_mlp_cmd->callback([&] {
    if (!mlp_args.hidden.empty()) {
      mlp_args.cfg.hidden1 = mlp_args.hidden[0];
      mlp_args.cfg.hidden2 = mlp_args.hidden[1];
    }
    OutDir out(mlp_args.out_dir);
    const auto train_split = load_dataset(mlp_args.train_path);
    const auto val_split = load_dataset(mlp_args.val_path);
    auto [params, history] = train_mlp(train_split, val_split, mlp_args.cfg);
    const nlohmann::json resolved = train_resolved(mlp_args, "mlp");
    save_model(params, out.file("model.json"), resolved);
    write_history_csv(history, out.file("history.csv"));
    cli_detail::write_manifest(out, "train mlp", args, resolved, {"model.json", "history.csv"});
    cli_detail::print_history_summary(history, mlp_args.verbose);
  });

  // ---- rerank ---------------------------------------------------------
  auto* rerank_cmd = app.add_subcommand("rerank", "write ranked hypothesis lists for a split");
  struct {
    std::string data, mode = "raw", model, out_dir;
    int k = 20;
    bool cab = false;
    double alpha = 0.5;
  } rr;
  rerank_cmd->add_option("--data", rr.data, "dataset split")->required();
  rerank_cmd->add_option("--mode", rr.mode, "raw | embednet | mlp")
      ->check(CLI::IsMember({"raw", "embednet", "mlp"}));
  rerank_cmd->add_option("--model", rr.model, "model file (embednet/mlp modes)");
  rerank_cmd->add_option("--k", rr.k, "hypotheses considered per sample");
  rerank_cmd->add_flag("--cab", rr.cab, "fuse recognizer confidences into the distances");
  rerank_cmd->add_option("--alpha", rr.alpha, "fusion strength");
  rerank_cmd->add_option("--out-dir", rr.out_dir, "output directory")->required();
  rerank_cmd->callback([&] {
    OutDir out(rr.out_dir);
    const auto samples = load_dataset(rr.data);
    cli_detail::LoadedModels models;
    RerankMode mode = RerankMode::raw();
    if (rr.mode == "embednet") {
      if (rr.model.empty()) throw ConfigError("rerank: --mode embednet needs --model");
      models.load_embednet(rr.model);
      mode = RerankMode::embednet_space(*models.embednet);
    } else if (rr.mode == "mlp") {
      if (rr.model.empty()) throw ConfigError("rerank: --mode mlp needs --model");
      models.load_mlp(rr.model);
      mode = RerankMode::mlp_space(*models.mlp);
    }
    const CabConfig cab{rr.alpha, rr.cab};
    std::ofstream f(out.file("rankings.jsonl"));
    if (!f) throw IoError("cannot write rankings.jsonl");
    RerankStats stats;
    for (const WordSample& s : samples) {
      const RankedList ranked = rerank_with_cab(s, mode, rr.k, cab, &stats);
      nlohmann::json entries = nlohmann::json::array();
      for (const RankedEntry& e : ranked.entries) {
        entries.push_back({{"index", e.hyp_index},
                           {"text", e.text},
                           {"distance", e.distance},
                           {"confidence", e.confidence}});
      }
      f << nlohmann::json{{"id", ranked.sample_id},
                          {"space", rerank_space_name(ranked.space)},
                          {"k_used", ranked.k_used},
                          {"entries", entries}}
               .dump()
        << '\n';
    }
    if (stats.clamped_k > 0) {
      std::fprintf(stderr, "warning: k clamped on %ld samples with fewer hypotheses\n",
                   stats.clamped_k);
    }
    const nlohmann::json resolved = {{"data", rr.data},   {"mode", rr.mode},
                                     {"model", rr.model}, {"k", rr.k},
                                     {"cab", rr.cab},     {"alpha", rr.alpha},
                                     {"out_dir", rr.out_dir}};
    cli_detail::write_manifest(out, "rerank", args, resolved, {"rankings.jsonl"});
    std::printf("reranked %zu samples (%s space) into %s\n", samples.size(), rr.mode.c_str(),
                rr.out_dir.c_str());
  });

  // ---- eval -----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "word recognition accuracy of selected methods");
  struct {
    std::string test, methods = "crnn_top1,raw", model_embednet, model_mlp, normalize = "none";
    std::string out_dir;
    int k = 20;
    bool cab = false;
    double alpha = 0.5;
    int threads = 1;
  } ev;
  eval_cmd->add_option("--test", ev.test, "evaluation split")->required();
  eval_cmd->add_option("--methods", ev.methods, "comma list: crnn_top1,raw,mlp,embednet");
  eval_cmd->add_option("--model-embednet", ev.model_embednet, "embednet model file");
  eval_cmd->add_option("--model-mlp", ev.model_mlp, "mlp model file");
  eval_cmd->add_option("--k", ev.k, "hypotheses considered per sample");
  eval_cmd->add_flag("--cab", ev.cab, "fuse recognizer confidences");
  eval_cmd->add_option("--alpha", ev.alpha, "fusion strength");
  eval_cmd->add_option("--normalize", ev.normalize, "text normalization: none | ascii");
  eval_cmd->add_option("--threads", ev.threads, "evaluation worker threads");
  eval_cmd->add_option("--out-dir", ev.out_dir, "output directory")->required();
  eval_cmd->callback([&] {
    OutDir out(ev.out_dir);
    const auto split = load_dataset(ev.test);
    cli_detail::LoadedModels models;
    if (!ev.model_embednet.empty()) models.load_embednet(ev.model_embednet);
    if (!ev.model_mlp.empty()) models.load_mlp(ev.model_mlp);
    const TextNorm norm = cli_detail::parse_norm(ev.normalize);
    const CabConfig cab{ev.alpha, ev.cab};
    std::vector<WraReport> reports;
    size_t pos = 0;
    while (pos <= ev.methods.size()) {
      const size_t comma = std::min(ev.methods.find(',', pos), ev.methods.size());
      const std::string name = ev.methods.substr(pos, comma - pos);
      pos = comma + 1;
      if (name.empty()) continue;
      reports.push_back(evaluate_method(split, method_from_name(name), models.set, cab, ev.k,
                                        norm, ev.threads));
    }
    std::ofstream f(out.file("wra_report.json"));
    if (!f) throw IoError("cannot write wra_report.json");
    nlohmann::json jr = nlohmann::json::array();
    for (const WraReport& r : reports) jr.push_back(cli_detail::report_json(r));
    f << jr.dump(2) << '\n';
    f.close();
    cli_detail::write_report_txt(reports, out.file("report.txt"));
    const nlohmann::json resolved = {
        {"test", ev.test},         {"methods", ev.methods},
        {"model_embednet", ev.model_embednet}, {"model_mlp", ev.model_mlp},
        {"k", ev.k},               {"cab", ev.cab},
        {"alpha", ev.alpha},       {"normalize", ev.normalize},
        {"threads", ev.threads},   {"out_dir", ev.out_dir}};
    cli_detail::write_manifest(out, "eval", args, resolved, {"wra_report.json", "report.txt"});
    for (const WraReport& r : reports) {
      std::printf("%-16s k=%-3d wra=%.3f (%ld/%ld)\n", r.method.c_str(), r.k, r.wra, r.correct,
                  r.total);
    }
  });

  // ---- sweep-k --------------------------------------------------------
  auto* sweepk_cmd = app.add_subcommand("sweep-k", "WRA as a function of K");
  struct {
    std::string test, methods = "raw", model_embednet, model_mlp, k_values = "1-20";
    std::string cab = "both", normalize = "none", out_dir;
    double alpha = 0.5;
    int threads = 1;
  } sk;
  sweepk_cmd->add_option("--test", sk.test, "evaluation split")->required();
  sweepk_cmd->add_option("--methods", sk.methods, "comma list: raw,mlp,embednet");
  sweepk_cmd->add_option("--model-embednet", sk.model_embednet, "embednet model file");
  sweepk_cmd->add_option("--model-mlp", sk.model_mlp, "mlp model file");
  sweepk_cmd->add_option("--k-values", sk.k_values, "comma list or lo-hi range");
  sweepk_cmd->add_option("--cab", sk.cab, "on | off | both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  sweepk_cmd->add_option("--alpha", sk.alpha, "fusion strength");
  sweepk_cmd->add_option("--normalize", sk.normalize, "text normalization: none | ascii");
  sweepk_cmd->add_option("--threads", sk.threads, "evaluation worker threads");
  sweepk_cmd->add_option("--out-dir", sk.out_dir, "output directory")->required();
  sweepk_cmd->callback([&] {
    OutDir out(sk.out_dir);
    const auto split = load_dataset(sk.test);
    cli_detail::LoadedModels models;
    if (!sk.model_embednet.empty()) models.load_embednet(sk.model_embednet);
    if (!sk.model_mlp.empty()) models.load_mlp(sk.model_mlp);
    const TextNorm norm = cli_detail::parse_norm(sk.normalize);
    const std::vector<int> k_values = cli_detail::parse_int_list(sk.k_values, "--k-values");
    std::vector<Method> methods;
    size_t pos = 0;
    while (pos <= sk.methods.size()) {
      const size_t comma = std::min(sk.methods.find(',', pos), sk.methods.size());
      const std::string name = sk.methods.substr(pos, comma - pos);
      pos = comma + 1;
      if (!name.empty()) methods.push_back(method_from_name(name));
    }

    SweepTable merged;
    merged.axis = "k";
    nlohmann::json k_high = nlohmann::json::array();
    auto run_variant = [&](bool cab_on) {
      const CabConfig cab{sk.alpha, cab_on};
      const KSweepResult res =
          k_sweep(split, methods, models.set, cab, k_values, norm, sk.threads);
      if (merged.rows.empty()) {
        merged.rows = res.table.rows;
      } else {
        for (size_t i = 0; i < merged.rows.size(); ++i) {
          for (const WraReport& r : res.table.rows[i].reports) {
            merged.rows[i].reports.push_back(r);
          }
        }
      }
      for (const MethodBest& b : res.k_high) {
        k_high.push_back({{"method", b.method}, {"k_high", b.k_high}, {"wra", b.wra}});
      }
    };
    if (sk.cab == "off" || sk.cab == "both") run_variant(false);
    if (sk.cab == "on" || sk.cab == "both") run_variant(true);

    cli_detail::write_sweep_rows(merged, out.file("sweep_rows.jsonl"));
    cli_detail::write_sweep_table_txt(merged, out.file("sweep_table.txt"));
    {
      std::ofstream f(out.file("k_high.json"));
      if (!f) throw IoError("cannot write k_high.json");
      f << k_high.dump(2) << '\n';
    }
    const nlohmann::json resolved = {
        {"test", sk.test},       {"methods", sk.methods},
        {"model_embednet", sk.model_embednet}, {"model_mlp", sk.model_mlp},
        {"k_values", sk.k_values}, {"cab", sk.cab},
        {"alpha", sk.alpha},     {"normalize", sk.normalize},
        {"threads", sk.threads}, {"out_dir", sk.out_dir}};
    cli_detail::write_manifest(out, "sweep-k", args, resolved,
                               {"sweep_rows.jsonl", "sweep_table.txt", "k_high.json"});
    std::printf("k sweep written to %s\n", sk.out_dir.c_str());
  });

  // ---- sweep-margin ---------------------------------------------------
  auto* sweepm_cmd = app.add_subcommand("sweep-margin", "train and score one model per margin");
  struct {
    std::string train_path, val_path, gammas, out_dir;
    TrainConfig cfg;
    std::vector<int> hidden;
    int k = 20;
  } sm;
  sweepm_cmd->add_option("--train", sm.train_path, "training split")->required();
  sweepm_cmd->add_option("--val", sm.val_path, "validation split")->required();
  sweepm_cmd->add_option("--gammas", sm.gammas, "comma list of margins")->required();
  sweepm_cmd->add_option("--k", sm.k, "hypotheses considered per sample");
  sweepm_cmd->add_option("--lr,--learning-rate", sm.cfg.learning_rate, "Adam learning rate");
  sweepm_cmd->add_option("--epochs", sm.cfg.max_epochs, "maximum epochs");
  sweepm_cmd->add_option("--patience", sm.cfg.patience, "early stopping patience");
  sweepm_cmd->add_option("--batch-size", sm.cfg.batch_size, "triplets per Adam step");
  sweepm_cmd->add_option("--hidden", sm.hidden, "hidden layer sizes")->delimiter(',')->expected(2);
  sweepm_cmd->add_option("--out-dim", sm.cfg.out_dim, "projection output dimension");
  sweepm_cmd->add_option("--seed", sm.cfg.seed, "rng seed");
  sweepm_cmd->add_option("--out-dir", sm.out_dir, "output directory")->required();
  sweepm_cmd->callback([&] {
    if (!sm.hidden.empty()) {
      sm.cfg.hidden1 = sm.hidden[0];
      sm.cfg.hidden2 = sm.hidden[1];
    }
    OutDir out(sm.out_dir);
    const auto train_split = load_dataset(sm.train_path);
    const auto val_split = load_dataset(sm.val_path);
    const std::vector<double> gammas = cli_detail::parse_double_list(sm.gammas, "--gammas");
    const MarginSweepResult res = margin_sweep(train_split, val_split, gammas, sm.cfg, sm.k);
    cli_detail::write_sweep_rows(res.table, out.file("margin_rows.jsonl"));
    cli_detail::write_sweep_table_txt(res.table, out.file("margin_table.txt"));
    {
      std::ofstream f(out.file("margin_summary.json"));
      if (!f) throw IoError("cannot write margin_summary.json");
      f << nlohmann::json{{"best_gamma", res.best_gamma}, {"best_wra", res.best_wra}}.dump(2)
        << '\n';
    }
    const nlohmann::json resolved = {{"train", sm.train_path},
                                     {"val", sm.val_path},
                                     {"gammas", sm.gammas},
                                     {"k", sm.k},
                                     {"learning_rate", sm.cfg.learning_rate},
                                     {"max_epochs", sm.cfg.max_epochs},
                                     {"patience", sm.cfg.patience},
                                     {"batch_size", sm.cfg.batch_size},
                                     {"hidden1", sm.cfg.hidden1},
                                     {"hidden2", sm.cfg.hidden2},
                                     {"out_dim", sm.cfg.out_dim},
                                     {"seed", sm.cfg.seed},
                                     {"out_dir", sm.out_dir}};
    cli_detail::write_manifest(out, "sweep-margin", args, resolved,
                               {"margin_rows.jsonl", "margin_table.txt", "margin_summary.json"});
    std::printf("best margin %g (val wra %.3f)\n", res.best_gamma, res.best_wra);
  });

  // ---- tune-alpha -----------------------------------------------------
  auto* tune_cmd = app.add_subcommand("tune-alpha", "grid-search the fusion strength");
  struct {
    std::string data, method = "raw", model, alphas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    std::string normalize = "none", out_dir;
    int k = 20;
    int threads = 1;
  } ta;
  tune_cmd->add_option("--data", ta.data, "validation split")->required();
  tune_cmd->add_option("--method", ta.method, "raw | mlp | embednet")
      ->check(CLI::IsMember({"raw", "mlp", "embednet"}));
  tune_cmd->add_option("--model", ta.model, "model file (embednet/mlp methods)");
  tune_cmd->add_option("--alphas", ta.alphas, "comma list of fusion strengths");
  tune_cmd->add_option("--k", ta.k, "hypotheses considered per sample");
  tune_cmd->add_option("--normalize", ta.normalize, "text normalization: none | ascii");
  tune_cmd->add_option("--threads", ta.threads, "evaluation worker threads");
  tune_cmd->add_option("--out-dir", ta.out_dir, "output directory")->required();
  tune_cmd->callback([&] {
    OutDir out(ta.out_dir);
    const auto split = load_dataset(ta.data);
    cli_detail::LoadedModels models;
    const Method method = method_from_name(ta.method);
    if (method == Method::kEmbedNet) {
      if (ta.model.empty()) throw ConfigError("tune-alpha: --method embednet needs --model");
      models.load_embednet(ta.model);
    } else if (method == Method::kMlp) {
      if (ta.model.empty()) throw ConfigError("tune-alpha: --method mlp needs --model");
      models.load_mlp(ta.model);
    }
    const TextNorm norm = cli_detail::parse_norm(ta.normalize);
    const std::vector<double> alphas = cli_detail::parse_double_list(ta.alphas, "--alphas");
    const AlphaGridResult res =
        alpha_grid(split, method, models.set, ta.k, alphas, norm, ta.threads);
    cli_detail::write_sweep_rows(res.table, out.file("alpha_rows.jsonl"));
    {
      std::ofstream f(out.file("alpha_summary.json"));
      if (!f) throw IoError("cannot write alpha_summary.json");
      f << nlohmann::json{{"best_alpha", res.best_alpha}, {"best_wra", res.best_wra}}.dump(2)
        << '\n';
    }
    const nlohmann::json resolved = {
        {"data", ta.data},       {"method", ta.method}, {"model", ta.model},
        {"alphas", ta.alphas},   {"k", ta.k},           {"normalize", ta.normalize},
        {"threads", ta.threads}, {"out_dir", ta.out_dir}};
    cli_detail::write_manifest(out, "tune-alpha", args, resolved,
                               {"alpha_rows.jsonl", "alpha_summary.json"});
    std::printf("best alpha %g (wra %.3f)\n", res.best_alpha, res.best_wra);
  });

  // ---- parse and dispatch ---------------------------------------------
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("embedrank");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\nrun 'embedrank --help' for usage\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace embedrank
