// Command-line front end for the subgraph classification pipeline.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "padel/checkpoint.hpp"
#include "padel/synth.hpp"
#include "padel/trainer.hpp"

namespace {

using padel::RunConfig;

// Shared dataset/model/run flags; values default from --config when given.
struct CommonFlags {
  std::string config_file;
  std::string edges, subgraphs, out_dir, cache_dir, ablation;
  std::optional<double> beta, p_diff, lr, train_fraction, weight_decay;
  std::optional<std::size_t> pe_dim, pca_dim, hidden_dim, batch, max_epochs,
      patience, ss_epochs, contrast_epochs, walk_hop, max_subgraph_nodes;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool init_random = false;
  bool lr_search = false;
  bool no_early_stop = false;
  std::string stages;  // comma list: ss,pe,cl
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file");
  cmd->add_option("--edges", f.edges, "edge list file");
  cmd->add_option("--subgraphs", f.subgraphs, "subgraph record file");
  cmd->add_option("--out", f.out_dir, "run output directory");
  cmd->add_option("--cache-dir", f.cache_dir,
                  "preprocessing cache directory (default $PADEL_CACHE_DIR)");
  cmd->add_option("--ablation", f.ablation, "stage preset c0..c7");
  cmd->add_option("--stages", f.stages, "comma list of ss,pe,cl (others off)");
  cmd->add_option("--pe-dim", f.pe_dim, "position embedding dim d");
  cmd->add_option("--pca-dim", f.pca_dim, "reduced dim d'");
  cmd->add_option("--hidden-dim", f.hidden_dim, "pooled encoding dim");
  cmd->add_option("--beta", f.beta, "KL weight");
  cmd->add_option("--p-diff", f.p_diff, "1-hop diffusion probability");
  cmd->add_option("--batch", f.batch, "batch size");
  cmd->add_option("--max-epochs", f.max_epochs, "supervised epoch cap");
  cmd->add_option("--patience", f.patience, "early-stop patience (epochs)");
  cmd->add_option("--ss-epochs", f.ss_epochs, "autoencoder pretrain epochs");
  cmd->add_option("--contrast-epochs", f.contrast_epochs,
                  "contrastive pretrain epochs");
  cmd->add_option("--walk-hop", f.walk_hop,
                  "random-walk steps (0 = dataset mean)");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_flag("--lr-search", f.lr_search,
                "sweep lr over {1e-3, 5e-3, 1e-2} by validation score");
  cmd->add_option("--weight-decay", f.weight_decay, "AdamW weight decay");
  cmd->add_option("--train-fraction", f.train_fraction,
                  "train split subsample fraction");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--max-subgraph-nodes", f.max_subgraph_nodes,
                  "subgraph truncation cap");
  cmd->add_option("--threads", f.threads, "preprocessing threads");
  cmd->add_flag("--init-random", f.init_random,
                "contrastive stage may start from random generator weights");
  cmd->add_flag("--no-early-stop", f.no_early_stop, "train to the epoch cap");
}

RunConfig build_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_file.empty()) cfg = padel::load_config_file(f.config_file);
  if (!f.edges.empty()) cfg.edge_file = f.edges;
  if (!f.subgraphs.empty()) cfg.subgraph_file = f.subgraphs;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.cache_dir.empty()) cfg.cache_dir = f.cache_dir;
  if (!f.ablation.empty())
    cfg.stages = padel::ablation_toggles(f.ablation, &cfg.init_random);
  if (!f.stages.empty()) {
    cfg.stages = {false, false, false};
    std::string item;
    std::istringstream ss(f.stages);
    while (std::getline(ss, item, ',')) {
      if (item == "ss") cfg.stages.ss = true;
      else if (item == "pe") cfg.stages.pe = true;
      else if (item == "cl") cfg.stages.cl = true;
      else if (!item.empty())
        throw CLI::ValidationError("--stages", "unknown stage '" + item + "'");
    }
  }
  if (f.pe_dim) cfg.feature_dim = *f.pe_dim;
  if (f.pca_dim) cfg.pca_dim = *f.pca_dim;
  if (f.hidden_dim) cfg.hidden_dim = *f.hidden_dim;
  if (f.beta) cfg.beta = *f.beta;
  if (f.p_diff) cfg.p_diff = *f.p_diff;
  if (f.batch) cfg.batch_size = *f.batch;
  if (f.max_epochs) cfg.max_epochs = *f.max_epochs;
  if (f.patience) cfg.patience = *f.patience;
  if (f.ss_epochs) cfg.ss_epochs = *f.ss_epochs;
  if (f.contrast_epochs) cfg.cl_epochs = *f.contrast_epochs;
  if (f.walk_hop) cfg.walk_hop = *f.walk_hop;
  if (f.lr) cfg.lr = *f.lr;
  if (f.lr_search) cfg.lr_search = true;
  if (f.weight_decay) cfg.weight_decay = *f.weight_decay;
  if (f.train_fraction) cfg.train_fraction = *f.train_fraction;
  if (f.seed) cfg.seed = *f.seed;
  if (f.max_subgraph_nodes) cfg.max_subgraph_nodes = *f.max_subgraph_nodes;
  if (f.threads) cfg.num_threads = *f.threads;
  if (f.init_random) cfg.init_random = true;
  if (f.no_early_stop) cfg.early_stop = false;
  return cfg;
}

void print_metrics(const padel::RunResult& res) {
  std::printf("train micro-F1: %.4f\n", res.metrics.train_micro_f1);
  std::printf("val   micro-F1: %.4f\n", res.metrics.val_micro_f1);
  std::printf("test  micro-F1: %.4f (best epoch %zu)\n",
              res.metrics.test_micro_f1, res.metrics.best_epoch);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-aware subgraph classification pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* cmd_pre = app.add_subcommand(
      "preprocess", "compute distances, phase matrix and PCA (cached)");
  add_common_flags(cmd_pre, flags);

  auto* cmd_ss = app.add_subcommand(
      "pretrain-vsubgae", "stage 2: autoencoder pretraining");
  add_common_flags(cmd_ss, flags);

  auto* cmd_cl = app.add_subcommand(
      "pretrain-contrast", "stage 3: two-view contrastive pretraining");
  add_common_flags(cmd_cl, flags);

  auto* cmd_train =
      app.add_subcommand("train", "run the enabled stages end to end");
  add_common_flags(cmd_train, flags);
  std::size_t num_seeds = 1;
  cmd_train->add_option("--seeds", num_seeds,
                        "repeat with consecutive seeds, report mean±std");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common_flags(cmd_eval, flags);
  std::string eval_split = "test", eval_ckpt;
  cmd_eval->add_option("--split", eval_split, "train|val|test");
  cmd_eval->add_option("--checkpoint", eval_ckpt,
                       "model checkpoint (default <out>/model.ckpt)");

  auto* cmd_embed = app.add_subcommand(
      "embed", "write pooled per-subgraph encodings as TSV");
  add_common_flags(cmd_embed, flags);
  std::string embed_out = "embeddings.tsv", embed_ckpt;
  cmd_embed->add_option("--output", embed_out, "TSV output path");
  cmd_embed->add_option("--checkpoint", embed_ckpt,
                        "model checkpoint (default <out>/model.ckpt)");

  auto* cmd_synth =
      app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_kind = "sbm", synth_edges = "edges.txt",
              synth_subgraphs = "subgraphs.txt";
  std::uint64_t synth_seed = 0;
  padel::SbmParams sbm;
  padel::BarbellParams barbell;
  cmd_synth->add_option("--kind", synth_kind, "sbm|barbell|karate")
      ->required();
  cmd_synth->add_option("--edges-out", synth_edges, "edge file to write");
  cmd_synth->add_option("--subgraphs-out", synth_subgraphs,
                        "subgraph file to write");
  cmd_synth->add_option("--seed", synth_seed, "generator seed");
  cmd_synth->add_option("--nodes", sbm.num_nodes, "sbm: node count");
  cmd_synth->add_option("--blocks", sbm.num_blocks, "sbm: block count");
  cmd_synth->add_option("--p-in", sbm.p_in, "sbm: within-block edge prob");
  cmd_synth->add_option("--p-out", sbm.p_out, "sbm: cross-block edge prob");
  cmd_synth->add_option("--num-subgraphs", sbm.num_subgraphs,
                        "sbm: record count");
  cmd_synth->add_option("--clique", barbell.clique_size,
                        "barbell: clique size");
  cmd_synth->add_option("--bridge", barbell.bridge_len,
                        "barbell: bridge length");

  auto* cmd_report = app.add_subcommand(
      "report", "print stage timings for a run, or dataset statistics");
  std::string report_run, report_edges, report_subgraphs;
  cmd_report->add_option("--run", report_run, "run directory");
  cmd_report->add_option("--edges", report_edges, "dataset edge file");
  cmd_report->add_option("--subgraphs", report_subgraphs,
                         "dataset subgraph file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_synth->parsed()) {
      if (synth_kind == "sbm") {
        padel::make_sbm(sbm, synth_seed, synth_edges, synth_subgraphs);
      } else if (synth_kind == "barbell") {
        padel::make_barbell(barbell, synth_edges, synth_subgraphs);
      } else if (synth_kind == "karate") {
        padel::make_karate(synth_edges, synth_subgraphs);
      } else {
        std::cerr << "unknown kind '" << synth_kind << "'\n";
        return 1;
      }
      std::cout << "wrote " << synth_edges << " and " << synth_subgraphs
                << "\n";
      return 0;
    }

    if (cmd_report->parsed()) {
      if (!report_run.empty()) {
        std::cout << padel::render_timing_report(
            padel::timing_report(report_run));
      }
      if (!report_edges.empty() && !report_subgraphs.empty()) {
        auto bundle = padel::load_dataset(report_edges, report_subgraphs);
        auto cov = padel::coverage_stats(bundle);
        std::printf("nodes %zu  edges %zu  subgraphs %zu  classes %zu%s\n",
                    bundle.graph.num_nodes, bundle.graph.num_edges,
                    bundle.subgraphs.size(), bundle.num_classes,
                    bundle.multi_label ? "  multi-label" : "");
        std::printf("covered nodes %zu  coverage %.2f%%\n", cov.covered_nodes,
                    cov.coverage * 100.0);
      }
      return 0;
    }

    RunConfig cfg = build_config(flags);

    if (cmd_pre->parsed()) {
      padel::Pipeline pipeline(cfg);
      pipeline.preprocess();
      std::cout << "preprocess done in " << pipeline.timing().preprocess_s
                << " s"
                << (pipeline.timing().preprocess_cache_hit ? " (cache hit)"
                                                           : "")
                << "\n";
      return 0;
    }
    if (cmd_ss->parsed()) {
      padel::Pipeline pipeline(cfg);
      pipeline.pretrain_vsubgae();
      std::cout << "wrote " << (cfg.out_dir / "vsubgae.ckpt").string() << "\n";
      return 0;
    }
    if (cmd_cl->parsed()) {
      padel::Pipeline pipeline(cfg);
      pipeline.pretrain_contrast();
      std::cout << "wrote " << (cfg.out_dir / "pooling.ckpt").string() << "\n";
      return 0;
    }
    if (cmd_train->parsed()) {
      if (num_seeds > 1) {
        auto scores = padel::run_seeds(cfg, num_seeds);
        std::cout << "test micro-F1 over " << num_seeds
                  << " seeds: " << padel::format_mean_std(scores) << "\n";
      } else {
        print_metrics(padel::run_pipeline(cfg));
      }
      return 0;
    }
    if (cmd_eval->parsed()) {
      padel::Pipeline pipeline(cfg);
      pipeline.load_model(eval_ckpt.empty()
                              ? cfg.out_dir / "model.ckpt"
                              : std::filesystem::path(eval_ckpt));
      auto res = pipeline.evaluate(padel::parse_split(eval_split));
      std::printf("%s micro-F1: %.4f over %zu records\n", eval_split.c_str(),
                  res.micro_f1, res.num_records);
      for (std::size_t c = 0; c < res.per_class.f1.size(); ++c)
        std::printf("  class %-20s tp %4zu fp %4zu fn %4zu f1 %.4f\n",
                    pipeline.data().label_names[c].c_str(),
                    res.per_class.tp[c], res.per_class.fp[c],
                    res.per_class.fn[c], res.per_class.f1[c]);
      return 0;
    }
    if (cmd_embed->parsed()) {
      padel::Pipeline pipeline(cfg);
      pipeline.load_model(embed_ckpt.empty()
                              ? cfg.out_dir / "model.ckpt"
                              : std::filesystem::path(embed_ckpt));
      pipeline.write_embeddings(embed_out);
      std::cout << "wrote " << embed_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
