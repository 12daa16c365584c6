#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "padel/graph.hpp"
#include "padel/pooling.hpp"
#include "padel/position.hpp"
#include "padel/vsubgae.hpp"

namespace padel {

// Which pretraining stages run. The pooling/classifier stage always runs.
struct StageToggles {
  bool ss = true;  // autoencoder pretraining of the node embeddings
  bool pe = true;  // cosine-phase position encoding (off: random P)
  bool cl = true;  // two-view contrastive pretraining
};

// Presets c0..c7 over the three toggles; presets that contrast without
// pretraining also set init_random.
StageToggles ablation_toggles(const std::string& name, bool* init_random);

struct RunConfig {
  std::filesystem::path edge_file;
  std::filesystem::path subgraph_file;
  std::filesystem::path out_dir = "runs/run";
  std::filesystem::path cache_dir;  // empty: $PADEL_CACHE_DIR, else out_dir/cache

  StageToggles stages;
  bool init_random = false;  // allow contrastive stage with untrained generator

  std::size_t feature_dim = 32;  // node feature and position dims (d each)
  std::size_t pca_dim = 64;      // reduced dimension d', clamped to |V|
  std::size_t hidden_dim = 64;   // pooled encoding dim

  double beta = 0.2;
  double p_diff = 0.5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 3000;
  std::size_t patience = 300;
  bool early_stop = true;
  std::size_t ss_epochs = 100;
  std::size_t cl_epochs = 100;
  double lr = 1e-3;
  bool lr_search = false;  // sweep {1e-3, 5e-3, 1e-2} on validation score
  double weight_decay = 1e-2;
  std::size_t walk_hop = 0;  // 0 = dataset mean
  double train_fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_subgraph_nodes = 128;
  unsigned num_threads = 0;  // preprocessing only; 0 = hardware default
};

// Nested JSON config file; missing keys keep defaults. CLI flags override.
RunConfig load_config_file(const std::filesystem::path& path);
std::string config_to_json_string(const RunConfig& cfg);

struct StageTiming {
  double preprocess_s = 0.0;
  bool preprocess_cache_hit = false;
  double vsubgae_s = 0.0;
  double contrastive_s = 0.0;
  double supervised_s = 0.0;
};

struct Metrics {
  double train_micro_f1 = 0.0;
  double val_micro_f1 = 0.0;
  double test_micro_f1 = 0.0;
  std::size_t best_epoch = 0;
};

struct EvalResult {
  double micro_f1 = 0.0;
  PerClassReport per_class;
  std::size_t num_records = 0;
};

struct RunResult {
  Metrics metrics;
  StageTiming timing;
  std::string manifest;  // deterministic manifest (also written to disk)
};

// Four-stage training pipeline over one dataset. Stages mutate in-memory
// parameters and write checkpoints under out_dir; the deterministic manifest
// is rewritten atomically at the end of every stage. Wall-clock timings go to
// a separate timing.json so identical (config, seed) reruns produce
// bit-identical manifests.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  void preprocess();          // stage 1; cached by edge-file content hash
  void pretrain_vsubgae();    // stage 2; writes vsubgae.ckpt
  void pretrain_contrast();   // stage 3; writes pooling.ckpt
  void train_supervised();    // stage 4; writes model.ckpt
  RunResult run();            // enabled stages in order

  EvalResult evaluate(Split split);
  void write_embeddings(const std::filesystem::path& path);

  // Restores every tensor from a full-model checkpoint (requires
  // preprocess() first so shapes exist).
  void load_model(const std::filesystem::path& ckpt);
  void load_vsubgae(const std::filesystem::path& ckpt);

  const DatasetBundle& data() const { return bundle_; }
  const RunConfig& config() const { return cfg_; }
  const StageTiming& timing() const { return timing_; }
  std::string manifest_json() const;
  std::vector<NamedParam> all_params();

 private:
  Tensor position_values();  // current P as plain values
  Tape::Var watch_position(Tape& tape, bool trainable, Tape::Var* proj_leaf);
  std::vector<NamedParam> position_params();
  EvalResult evaluate_records(const std::vector<std::size_t>& indices);
  void write_manifest_and_timing();
  std::filesystem::path effective_cache_dir() const;

  RunConfig cfg_;
  DatasetBundle bundle_;
  std::size_t dataset_walk_hop_ = 1;  // mean over the full (pre-subsample) set
  std::uint64_t edge_hash_ = 0;
  std::uint64_t subgraph_hash_ = 0;

  VSubGAE vs_;
  PoolingParams pooling_;
  ClassifierHead head_;
  PositionTable position_;  // pe mode
  Tensor free_position_;    // random-P mode
  bool preprocessed_ = false;

  StageTiming timing_;
  std::vector<double> ss_losses_;
  std::vector<double> cl_losses_;
  std::vector<double> sup_losses_;
  std::vector<double> val_curve_;
  std::vector<double> explained_variance_;
  Metrics metrics_;
  bool ss_ran_ = false, cl_ran_ = false, sup_ran_ = false;
};

// Runs the pipeline, handling the learning-rate sweep when requested.
RunResult run_pipeline(const RunConfig& cfg);

// Repeats the run with seeds seed, seed+1, …; returns per-seed test scores.
std::vector<double> run_seeds(const RunConfig& cfg, std::size_t num_seeds);

// "44.72±1.34": percent scale, two decimals, population std.
std::string format_mean_std(const std::vector<double>& values);

// Stage rows in the conventional timing layout.
struct TimingReport {
  double metrics_s = 0.0;    // distance/phase/pca preprocessing
  double embedding_s = 0.0;  // autoencoder + contrastive pretraining
  double subgraph_s = 0.0;   // supervised training
  bool cache_hit = false;
};
TimingReport timing_report(const std::filesystem::path& run_dir);
std::string render_timing_report(const TimingReport& rep);

}  // namespace padel
