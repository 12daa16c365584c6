#include "padel/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "padel/checkpoint.hpp"
#include "padel/contrastive.hpp"
#include "padel/optim.hpp"

namespace padel {

namespace {

using nlohmann::ordered_json;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void atomic_write(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// Deterministic batch partition; a trailing singleton is merged into the
// previous batch so every contrastive batch has K >= 2.
std::vector<std::vector<std::size_t>> make_batches(
    std::vector<std::size_t> order, std::size_t batch_size,
    bool merge_singleton) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(i),
                         order.begin() + static_cast<long>(end));
  }
  if (merge_singleton && batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

Tensor onehot_for(const SubgraphRecord& rec, std::size_t num_classes) {
  Tensor t(1, num_classes);
  t.data[rec.labels.at(0)] = 1.0;
  return t;
}

Tensor multihot_for(const SubgraphRecord& rec, std::size_t num_classes) {
  Tensor t(1, num_classes);
  for (std::uint32_t c : rec.labels) t.data[c] = 1.0;
  return t;
}

}  // namespace

StageToggles ablation_toggles(const std::string& name, bool* init_random) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), ::tolower);
  if (n.size() != 2 || n[0] != 'c' || n[1] < '0' || n[1] > '7')
    throw std::invalid_argument("ablation preset must be c0..c7, got '" +
                                name + "'");
  // c0 {} · c1 {ss} · c2 {pe} · c3 {cl} · c4 {ss,pe} · c5 {ss,cl} ·
  // c6 {pe,cl} · c7 {ss,pe,cl}
  static constexpr StageToggles kTable[8] = {
      {false, false, false}, {true, false, false}, {false, true, false},
      {false, false, true},  {true, true, false},  {true, false, true},
      {false, true, true},   {true, true, true}};
  const StageToggles t = kTable[n[1] - '0'];
  if (init_random) *init_random = t.cl && !t.ss;
  return t;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  in >> j;

  RunConfig cfg;
  const auto data = j.value("data", nlohmann::json::object());
  cfg.edge_file = data.value("edges", std::string());
  cfg.subgraph_file = data.value("subgraphs", std::string());
  cfg.train_fraction = data.value("train_fraction", cfg.train_fraction);
  cfg.max_subgraph_nodes =
      data.value("max_subgraph_nodes", cfg.max_subgraph_nodes);

  const auto model = j.value("model", nlohmann::json::object());
  cfg.feature_dim = model.value("feature_dim", cfg.feature_dim);
  cfg.pca_dim = model.value("pca_dim", cfg.pca_dim);
  cfg.hidden_dim = model.value("hidden_dim", cfg.hidden_dim);
  cfg.beta = model.value("beta", cfg.beta);
  cfg.p_diff = model.value("p_diff", cfg.p_diff);
  cfg.walk_hop = model.value("walk_hop", cfg.walk_hop);

  const auto train = j.value("train", nlohmann::json::object());
  cfg.batch_size = train.value("batch_size", cfg.batch_size);
  cfg.max_epochs = train.value("max_epochs", cfg.max_epochs);
  cfg.patience = train.value("patience", cfg.patience);
  cfg.early_stop = train.value("early_stop", cfg.early_stop);
  cfg.ss_epochs = train.value("ss_epochs", cfg.ss_epochs);
  cfg.cl_epochs = train.value("cl_epochs", cfg.cl_epochs);
  cfg.lr = train.value("lr", cfg.lr);
  cfg.lr_search = train.value("lr_search", cfg.lr_search);
  cfg.weight_decay = train.value("weight_decay", cfg.weight_decay);
  cfg.seed = train.value("seed", cfg.seed);

  const auto stages = j.value("stages", nlohmann::json::object());
  cfg.stages.ss = stages.value("ss", cfg.stages.ss);
  cfg.stages.pe = stages.value("pe", cfg.stages.pe);
  cfg.stages.cl = stages.value("cl", cfg.stages.cl);
  cfg.init_random = stages.value("init_random", cfg.init_random);

  const auto run = j.value("run", nlohmann::json::object());
  cfg.out_dir = run.value("out_dir", cfg.out_dir.string());
  cfg.cache_dir = run.value("cache_dir", cfg.cache_dir.string());
  cfg.num_threads = run.value("num_threads", cfg.num_threads);
  return cfg;
}

std::string config_to_json_string(const RunConfig& cfg) {
  ordered_json j;
  j["data"] = {{"edges", cfg.edge_file.string()},
               {"subgraphs", cfg.subgraph_file.string()},
               {"train_fraction", cfg.train_fraction},
               {"max_subgraph_nodes", cfg.max_subgraph_nodes}};
  j["model"] = {{"feature_dim", cfg.feature_dim}, {"pca_dim", cfg.pca_dim},
                {"hidden_dim", cfg.hidden_dim},   {"beta", cfg.beta},
                {"p_diff", cfg.p_diff},           {"walk_hop", cfg.walk_hop}};
  j["train"] = {{"batch_size", cfg.batch_size},
                {"max_epochs", cfg.max_epochs},
                {"patience", cfg.patience},
                {"early_stop", cfg.early_stop},
                {"ss_epochs", cfg.ss_epochs},
                {"cl_epochs", cfg.cl_epochs},
                {"lr", cfg.lr},
                {"lr_search", cfg.lr_search},
                {"weight_decay", cfg.weight_decay},
                {"seed", cfg.seed}};
  j["stages"] = {{"ss", cfg.stages.ss},
                 {"pe", cfg.stages.pe},
                 {"cl", cfg.stages.cl},
                 {"init_random", cfg.init_random}};
  j["run"] = {{"out_dir", cfg.out_dir.string()},
              {"cache_dir", cfg.cache_dir.string()},
              {"num_threads", cfg.num_threads}};
  return j.dump(2);
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.edge_file.empty() || cfg_.subgraph_file.empty())
    throw std::invalid_argument("Pipeline: dataset paths are required");
  edge_hash_ = hash_file(cfg_.edge_file);
  subgraph_hash_ = hash_file(cfg_.subgraph_file);

  LoadOptions opts;
  opts.max_subgraph_nodes = cfg_.max_subgraph_nodes;
  bundle_ = load_dataset(cfg_.edge_file, cfg_.subgraph_file, opts);
  dataset_walk_hop_ = auto_walk_hop(bundle_);
  if (cfg_.train_fraction < 1.0) {
    Rng sub_rng = Rng(cfg_.seed).child("subsample");
    bundle_ = subsample_train(bundle_, cfg_.train_fraction, sub_rng.seed());
  }

  Rng root(cfg_.seed);
  Rng vs_rng = root.child("init-vsubgae");
  vs_ = VSubGAE::init(bundle_.graph.num_nodes, cfg_.feature_dim, vs_rng);
  Rng pool_rng = root.child("init-pooling");
  pooling_ = PoolingParams::init(cfg_.feature_dim, cfg_.hidden_dim, pool_rng);
  Rng head_rng = root.child("init-head");
  head_ = ClassifierHead::init(cfg_.hidden_dim, bundle_.num_classes,
                               bundle_.multi_label, head_rng);

  const std::size_t d_prime =
      std::min<std::size_t>(cfg_.pca_dim, bundle_.graph.num_nodes);
  Rng proj_rng = root.child("init-projection");
  position_.projection =
      Tensor::xavier_uniform(d_prime, cfg_.feature_dim, proj_rng);
  Rng free_rng = root.child("init-free-position");
  free_position_ = Tensor::gaussian(bundle_.graph.num_nodes, cfg_.feature_dim,
                                    free_rng, 0.1);

  std::filesystem::create_directories(cfg_.out_dir);
  write_label_sidecar(bundle_, cfg_.out_dir / "labels.json");
  write_remap_sidecar(bundle_, cfg_.out_dir / "node_map.json");
}

std::filesystem::path Pipeline::effective_cache_dir() const {
  if (!cfg_.cache_dir.empty()) return cfg_.cache_dir;
  if (const char* env = std::getenv("PADEL_CACHE_DIR"); env && *env)
    return env;
  return cfg_.out_dir / "cache";
}

void Pipeline::preprocess() {
  const double t0 = now_seconds();
  if (cfg_.stages.pe) {
    PreprocessResult pre = compute_or_load_phase(
        bundle_.graph, effective_cache_dir(), edge_hash_, cfg_.num_threads);
    const std::size_t d_prime =
        std::min<std::size_t>(cfg_.pca_dim, bundle_.graph.num_nodes);
    PcaCache pca = compute_or_load_pca(pre.phase, d_prime,
                                       effective_cache_dir(), edge_hash_);
    position_.reduced = std::move(pca.scores);
    explained_variance_.clear();
    for (double e : pca.eigenvalues)
      explained_variance_.push_back(
          pca.total_variance > 0 ? std::max(e, 0.0) / pca.total_variance : 0.0);
    timing_.preprocess_cache_hit = pre.cache_hit && pca.cache_hit;
  }
  preprocessed_ = true;
  timing_.preprocess_s = now_seconds() - t0;
  write_manifest_and_timing();
}

Tensor Pipeline::position_values() {
  if (!preprocessed_)
    throw std::runtime_error("position_values: preprocess() has not run");
  if (!cfg_.stages.pe) return free_position_;
  Tape tape;
  ProjectedPosition pp = project(tape, position_, false);
  return tape.value(pp.p);
}

Tape::Var Pipeline::watch_position(Tape& tape, bool trainable,
                                   Tape::Var* proj_leaf) {
  if (!preprocessed_)
    throw std::runtime_error("watch_position: preprocess() has not run");
  if (!cfg_.stages.pe) {
    Tape::Var leaf = tape.leaf(free_position_, trainable);
    if (proj_leaf) *proj_leaf = leaf;
    return leaf;
  }
  ProjectedPosition pp = project(tape, position_, trainable);
  if (proj_leaf) *proj_leaf = pp.projection;
  return pp.p;
}

std::vector<NamedParam> Pipeline::position_params() {
  if (cfg_.stages.pe) return {{"position.projection", &position_.projection}};
  return {{"position.free", &free_position_}};
}

std::vector<NamedParam> Pipeline::all_params() {
  std::vector<NamedParam> out = vs_.params();
  for (auto& p : pooling_.params()) out.push_back(p);
  for (auto& p : head_.params()) out.push_back(p);
  for (auto& p : position_params()) out.push_back(p);
  return out;
}

void Pipeline::pretrain_vsubgae() {
  if (!preprocessed_) preprocess();
  const double t0 = now_seconds();
  Rng rng = Rng(cfg_.seed).child("stage-ss");
  AdamW opt({cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay});
  const Tensor p_vals = position_values();  // projection frozen at init here
  const DiffusionConfig diff{cfg_.p_diff, cfg_.max_subgraph_nodes};
  const auto train_idx = bundle_.split_indices(Split::Train);
  if (train_idx.empty())
    throw std::runtime_error("pretrain_vsubgae: no train records");

  ss_losses_.clear();
  for (std::size_t epoch = 0; epoch < cfg_.ss_epochs; ++epoch) {
    auto order = train_idx;
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(order, cfg_.batch_size, false)) {
      Tape tape;
      VsVars vars = watch(tape, vs_, true);
      Tape::Var p_full = tape.constant(p_vals);
      Tape::Var total;
      for (std::size_t idx : batch) {
        const auto& rec = bundle_.subgraphs[idx];
        DiffusedSubgraph sub = diffuse_subgraph(bundle_.graph, rec, diff, rng);
        const Tensor norm = normalize_adjacency(sub.adjacency);
        const Tensor eps = sample_epsilon(sub.node_ids.size(),
                                          2 * cfg_.feature_dim, rng);
        LatentSample latent =
            encode(tape, vars, p_full, sub.node_ids, norm, eps);
        Tape::Var probs = decode(tape, latent.z);
        Tape::Var loss = elbo_loss(tape, probs, sub.adjacency, latent.mean,
                                   latent.log_sigma, cfg_.beta);
        total = total.valid() ? tape.add(total, loss) : loss;
      }
      Tape::Var batch_loss =
          tape.scale(total, 1.0 / static_cast<double>(batch.size()));
      epoch_loss += tape.value(batch_loss).data[0] *
                    static_cast<double>(batch.size());
      seen += batch.size();
      tape.backward(batch_loss);
      opt.step({{&vs_.node_embeddings, &tape.grad(vars.x)},
                {&vs_.shared_weight, &tape.grad(vars.shared)},
                {&vs_.mean_head, &tape.grad(vars.mean_w)},
                {&vs_.logsig_head, &tape.grad(vars.logsig_w)}});
    }
    ss_losses_.push_back(epoch_loss / static_cast<double>(seen));
  }
  ss_ran_ = true;
  save_checkpoint(cfg_.out_dir / "vsubgae.ckpt", vs_.params());
  timing_.vsubgae_s = now_seconds() - t0;
  write_manifest_and_timing();
}

void Pipeline::pretrain_contrast() {
  if (!preprocessed_) preprocess();
  if (!cfg_.stages.ss && !cfg_.init_random) {
    const auto ckpt = cfg_.out_dir / "vsubgae.ckpt";
    if (!std::filesystem::exists(ckpt))
      throw std::runtime_error(
          "pretrain_contrast: autoencoder stage is disabled and no "
          "vsubgae.ckpt exists; pass init_random to start from random "
          "generator weights");
    load_checkpoint(ckpt, vs_.params());
  }
  const double t0 = now_seconds();
  Rng rng = Rng(cfg_.seed).child("stage-cl");
  AdamW opt({cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay});
  const std::size_t hop =
      cfg_.walk_hop > 0 ? cfg_.walk_hop : dataset_walk_hop_;
  const DiffusionConfig diff{cfg_.p_diff, cfg_.max_subgraph_nodes};
  const ExploreConfig explore{hop};
  const auto train_idx = bundle_.split_indices(Split::Train);
  if (train_idx.size() < 2) {
    // Nothing to contrast against; stage is a no-op for singleton datasets.
    cl_ran_ = true;
    timing_.contrastive_s = now_seconds() - t0;
    write_manifest_and_timing();
    return;
  }

  cl_losses_.clear();
  for (std::size_t epoch = 0; epoch < cfg_.cl_epochs; ++epoch) {
    auto order = train_idx;
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(order, cfg_.batch_size, true)) {
      if (batch.size() < 2) continue;
      std::vector<const SubgraphRecord*> records;
      records.reserve(batch.size());
      for (std::size_t idx : batch) records.push_back(&bundle_.subgraphs[idx]);
      const std::size_t K = records.size();

      // Views are data: sampled outside the tape from current frozen values.
      const Tensor p_vals = position_values();
      std::vector<SubgraphView> augs = exploit_view(
          bundle_.graph, vs_, p_vals, records, diff, rng);
      std::vector<std::vector<SubgraphView>> rans(K);
      for (std::size_t k = 0; k < K; ++k)
        rans[k] = explore_view(bundle_.graph, records, k, explore, rng);

      Tape tape;
      PoolVars pool_vars = watch(tape, pooling_, true);
      Tape::Var x_full = tape.leaf(vs_.node_embeddings, false);
      Tape::Var proj_leaf;
      Tape::Var p_full = watch_position(tape, true, &proj_leaf);

      auto encode_view = [&](const SubgraphView& v) {
        ViewEncoding enc;
        enc.np = encode_np(tape, pool_vars, x_full, p_full, v.node_ids,
                           v.adjacency);
        enc.s = encode_s(tape, pool_vars, p_full, v.node_ids);
        return enc;
      };
      std::vector<ViewEncoding> aug_encs;
      aug_encs.reserve(K);
      for (const auto& v : augs) aug_encs.push_back(encode_view(v));
      std::vector<std::vector<ViewEncoding>> ran_encs(K);
      for (std::size_t k = 0; k < K; ++k) {
        ran_encs[k].reserve(K);
        for (const auto& v : rans[k]) ran_encs[k].push_back(encode_view(v));
      }

      Tape::Var loss = info_nce(tape, ran_encs, aug_encs);
      epoch_loss += tape.value(loss).data[0] * static_cast<double>(K);
      seen += K;
      tape.backward(loss);

      std::vector<std::pair<Tensor*, const Tensor*>> updates;
      updates.emplace_back(cfg_.stages.pe ? &position_.projection
                                          : &free_position_,
                           &tape.grad(proj_leaf));
      auto pool_params = pooling_.params();
      const Tape::Var pool_leaves[] = {
          pool_vars.gcn_weight, pool_vars.fc_weight, pool_vars.l1f_wi,
          pool_vars.l1f_wh,     pool_vars.l1f_b,     pool_vars.l1b_wi,
          pool_vars.l1b_wh,     pool_vars.l1b_b,     pool_vars.l2f_wi,
          pool_vars.l2f_wh,     pool_vars.l2f_b,     pool_vars.l2b_wi,
          pool_vars.l2b_wh,     pool_vars.l2b_b};
      for (std::size_t i = 0; i < pool_params.size(); ++i)
        updates.emplace_back(pool_params[i].tensor,
                             &tape.grad(pool_leaves[i]));
      opt.step(updates);
    }
    cl_losses_.push_back(seen ? epoch_loss / static_cast<double>(seen) : 0.0);
  }
  cl_ran_ = true;
  {
    auto params = pooling_.params();
    for (auto& p : head_.params()) params.push_back(p);
    for (auto& p : position_params()) params.push_back(p);
    save_checkpoint(cfg_.out_dir / "pooling.ckpt", params);
  }
  timing_.contrastive_s = now_seconds() - t0;
  write_manifest_and_timing();
}

void Pipeline::train_supervised() {
  if (!preprocessed_) preprocess();
  const double t0 = now_seconds();
  Rng rng = Rng(cfg_.seed).child("stage-supervised");
  AdamW opt({cfg_.lr, 0.9, 0.999, 1e-8, cfg_.weight_decay});
  const auto train_idx = bundle_.split_indices(Split::Train);
  const auto val_idx = bundle_.split_indices(Split::Val);
  if (train_idx.empty())
    throw std::runtime_error("train_supervised: no train records");

  sup_losses_.clear();
  val_curve_.clear();
  double best_val = -1.0;
  std::size_t best_epoch = 0, stale = 0;
  std::vector<Tensor> best_snapshot;
  auto params = all_params();
  auto snapshot = [&]() {
    best_snapshot.clear();
    for (auto& p : params) best_snapshot.push_back(*p.tensor);
  };
  auto restore = [&]() {
    for (std::size_t i = 0; i < params.size(); ++i)
      *params[i].tensor = best_snapshot[i];
  };

  for (std::size_t epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    auto order = train_idx;
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(order, cfg_.batch_size, false)) {
      Tape tape;
      PoolVars pool_vars = watch(tape, pooling_, true);
      Tape::Var head_leaf = tape.leaf(head_.weight, true);
      Tape::Var x_full = tape.leaf(vs_.node_embeddings, true);
      Tape::Var proj_leaf;
      Tape::Var p_full = watch_position(tape, true, &proj_leaf);

      Tape::Var total;
      for (std::size_t idx : batch) {
        const auto& rec = bundle_.subgraphs[idx];
        const Tensor adj = induced_adjacency(bundle_.graph, rec.node_ids);
        Tape::Var e_np = encode_np(tape, pool_vars, x_full, p_full,
                                   rec.node_ids, adj);
        Tape::Var e_s = encode_s(tape, pool_vars, p_full, rec.node_ids);
        Tape::Var logits = classify(tape, e_np, e_s, head_leaf);
        Tape::Var loss =
            bundle_.multi_label
                ? bce_loss(tape, logits,
                           multihot_for(rec, bundle_.num_classes))
                : ce_loss(tape, logits, onehot_for(rec, bundle_.num_classes));
        total = total.valid() ? tape.add(total, loss) : loss;
      }
      Tape::Var batch_loss =
          tape.scale(total, 1.0 / static_cast<double>(batch.size()));
      epoch_loss += tape.value(batch_loss).data[0] *
                    static_cast<double>(batch.size());
      seen += batch.size();
      tape.backward(batch_loss);

      std::vector<std::pair<Tensor*, const Tensor*>> updates;
      updates.emplace_back(&vs_.node_embeddings, &tape.grad(x_full));
      updates.emplace_back(&head_.weight, &tape.grad(head_leaf));
      updates.emplace_back(cfg_.stages.pe ? &position_.projection
                                          : &free_position_,
                           &tape.grad(proj_leaf));
      auto pool_params = pooling_.params();
      const Tape::Var pool_leaves[] = {
          pool_vars.gcn_weight, pool_vars.fc_weight, pool_vars.l1f_wi,
          pool_vars.l1f_wh,     pool_vars.l1f_b,     pool_vars.l1b_wi,
          pool_vars.l1b_wh,     pool_vars.l1b_b,     pool_vars.l2f_wi,
          pool_vars.l2f_wh,     pool_vars.l2f_b,     pool_vars.l2b_wi,
          pool_vars.l2b_wh,     pool_vars.l2b_b};
      for (std::size_t i = 0; i < pool_params.size(); ++i)
        updates.emplace_back(pool_params[i].tensor,
                             &tape.grad(pool_leaves[i]));
      opt.step(updates);
    }
    sup_losses_.push_back(epoch_loss / static_cast<double>(seen));

    if (!val_idx.empty()) {
      const double val_f1 = evaluate_records(val_idx).micro_f1;
      val_curve_.push_back(val_f1);
      if (val_f1 > best_val) {
        best_val = val_f1;
        best_epoch = epoch;
        stale = 0;
        snapshot();
      } else if (++stale >= cfg_.patience && cfg_.early_stop) {
        break;
      }
    }
  }
  if (best_snapshot.empty()) {
    best_epoch = sup_losses_.size() - 1;
    snapshot();
  }
  restore();

  metrics_.best_epoch = best_epoch;
  metrics_.train_micro_f1 = evaluate_records(train_idx).micro_f1;
  metrics_.val_micro_f1 =
      val_idx.empty() ? 0.0 : evaluate_records(val_idx).micro_f1;
  const auto test_idx = bundle_.split_indices(Split::Test);
  metrics_.test_micro_f1 =
      test_idx.empty() ? 0.0 : evaluate_records(test_idx).micro_f1;

  sup_ran_ = true;
  save_checkpoint(cfg_.out_dir / "model.ckpt", all_params());
  timing_.supervised_s = now_seconds() - t0;
  write_manifest_and_timing();
}

RunResult Pipeline::run() {
  preprocess();
  if (cfg_.stages.ss) pretrain_vsubgae();
  if (cfg_.stages.cl) pretrain_contrast();
  train_supervised();
  RunResult res;
  res.metrics = metrics_;
  res.timing = timing_;
  res.manifest = manifest_json();
  return res;
}

EvalResult Pipeline::evaluate_records(const std::vector<std::size_t>& indices) {
  std::vector<Tensor> logits;
  std::vector<std::vector<std::uint32_t>> truths;
  logits.reserve(indices.size());
  truths.reserve(indices.size());
  for (std::size_t idx : indices) {
    const auto& rec = bundle_.subgraphs[idx];
    Tape tape;
    PoolVars pool_vars = watch(tape, pooling_, false);
    Tape::Var head_leaf = tape.leaf(head_.weight, false);
    Tape::Var x_full = tape.leaf(vs_.node_embeddings, false);
    Tape::Var p_full = watch_position(tape, false, nullptr);
    const Tensor adj = induced_adjacency(bundle_.graph, rec.node_ids);
    Tape::Var e_np =
        encode_np(tape, pool_vars, x_full, p_full, rec.node_ids, adj);
    Tape::Var e_s = encode_s(tape, pool_vars, p_full, rec.node_ids);
    logits.push_back(tape.value(classify(tape, e_np, e_s, head_leaf)));
    truths.push_back({rec.labels.begin(), rec.labels.end()});
  }
  EvalResult res;
  res.num_records = indices.size();
  res.micro_f1 = indices.empty()
                     ? 0.0
                     : micro_f1(logits, truths, bundle_.multi_label,
                                bundle_.num_classes);
  res.per_class = per_class_report(logits, truths, bundle_.multi_label,
                                   bundle_.num_classes);
  return res;
}

EvalResult Pipeline::evaluate(Split split) {
  if (!preprocessed_) preprocess();
  return evaluate_records(bundle_.split_indices(split));
}

void Pipeline::write_embeddings(const std::filesystem::path& path) {
  if (!preprocessed_) preprocess();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index\tsplit\tlabels";
  for (std::size_t i = 0; i < cfg_.hidden_dim; ++i) out << "\tnp" << i;
  for (std::size_t i = 0; i < cfg_.hidden_dim; ++i) out << "\ts" << i;
  out << "\n";
  out.precision(17);
  for (std::size_t idx = 0; idx < bundle_.subgraphs.size(); ++idx) {
    const auto& rec = bundle_.subgraphs[idx];
    Tape tape;
    PoolVars pool_vars = watch(tape, pooling_, false);
    Tape::Var x_full = tape.leaf(vs_.node_embeddings, false);
    Tape::Var p_full = watch_position(tape, false, nullptr);
    const Tensor adj = induced_adjacency(bundle_.graph, rec.node_ids);
    const Tensor e_np = tape.value(
        encode_np(tape, pool_vars, x_full, p_full, rec.node_ids, adj));
    const Tensor e_s =
        tape.value(encode_s(tape, pool_vars, p_full, rec.node_ids));
    out << idx << "\t" << split_name(rec.split) << "\t";
    for (std::size_t i = 0; i < rec.labels.size(); ++i)
      out << (i ? "," : "") << bundle_.label_names[rec.labels[i]];
    for (double v : e_np.data) out << "\t" << v;
    for (double v : e_s.data) out << "\t" << v;
    out << "\n";
  }
}

void Pipeline::load_model(const std::filesystem::path& ckpt) {
  if (!preprocessed_) preprocess();
  load_checkpoint(ckpt, all_params());
}

void Pipeline::load_vsubgae(const std::filesystem::path& ckpt) {
  load_checkpoint(ckpt, vs_.params());
}

std::string Pipeline::manifest_json() const {
  ordered_json j;
  j["config"] = nlohmann::json::parse(config_to_json_string(cfg_));
  j["inputs"] = {{"edge_file", cfg_.edge_file.string()},
                 {"edge_hash", hex64(edge_hash_)},
                 {"subgraph_file", cfg_.subgraph_file.string()},
                 {"subgraph_hash", hex64(subgraph_hash_)}};
  const CoverageStats cov = coverage_stats(bundle_);
  j["dataset"] = {{"num_nodes", bundle_.graph.num_nodes},
                  {"num_edges", bundle_.graph.num_edges},
                  {"num_subgraphs", bundle_.subgraphs.size()},
                  {"num_classes", bundle_.num_classes},
                  {"multi_label", bundle_.multi_label},
                  {"covered_nodes", cov.covered_nodes},
                  {"coverage", cov.coverage},
                  {"train_records", bundle_.split_indices(Split::Train).size()},
                  {"val_records", bundle_.split_indices(Split::Val).size()},
                  {"test_records", bundle_.split_indices(Split::Test).size()},
                  {"train_fraction_used", bundle_.train_fraction_used}};
  ordered_json stages;
  stages["preprocess"] = {{"enabled", cfg_.stages.pe},
                          {"ran", preprocessed_},
                          {"explained_variance", explained_variance_}};
  stages["vsubgae"] = {{"enabled", cfg_.stages.ss},
                       {"ran", ss_ran_},
                       {"loss", ss_losses_}};
  stages["contrastive"] = {{"enabled", cfg_.stages.cl},
                           {"ran", cl_ran_},
                           {"loss", cl_losses_},
                           {"walk_hop", cfg_.walk_hop > 0 ? cfg_.walk_hop
                                                          : dataset_walk_hop_}};
  stages["supervised"] = {{"ran", sup_ran_},
                          {"loss", sup_losses_},
                          {"val_micro_f1", val_curve_},
                          {"best_epoch", metrics_.best_epoch}};
  j["stages"] = stages;
  j["metrics"] = {{"train_micro_f1", metrics_.train_micro_f1},
                  {"val_micro_f1", metrics_.val_micro_f1},
                  {"test_micro_f1", metrics_.test_micro_f1}};
  return j.dump(2);
}

void Pipeline::write_manifest_and_timing() {
  atomic_write(cfg_.out_dir / "manifest.json", manifest_json());
  ordered_json t;
  t["preprocess_s"] = timing_.preprocess_s;
  t["preprocess_cache_hit"] = timing_.preprocess_cache_hit;
  t["vsubgae_s"] = timing_.vsubgae_s;
  t["contrastive_s"] = timing_.contrastive_s;
  t["supervised_s"] = timing_.supervised_s;
  atomic_write(cfg_.out_dir / "timing.json", t.dump(2));
}

RunResult run_pipeline(const RunConfig& cfg) {
  if (!cfg.lr_search) {
    Pipeline pipeline(cfg);
    return pipeline.run();
  }
  const double grid[] = {1e-3, 5e-3, 1e-2};
  RunResult best;
  double best_val = -1.0;
  for (double lr : grid) {
    RunConfig sub = cfg;
    sub.lr = lr;
    sub.lr_search = false;
    std::ostringstream dir;
    dir << "lr-" << lr;
    sub.out_dir = cfg.out_dir / dir.str();
    RunResult res = run_pipeline(sub);
    if (res.metrics.val_micro_f1 > best_val) {
      best_val = res.metrics.val_micro_f1;
      best = res;
    }
  }
  atomic_write(cfg.out_dir / "manifest.json", best.manifest);
  return best;
}

std::vector<double> run_seeds(const RunConfig& cfg, std::size_t num_seeds) {
  std::vector<double> scores;
  scores.reserve(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) {
    RunConfig sub = cfg;
    sub.seed = cfg.seed + i;
    sub.out_dir = cfg.out_dir / ("seed-" + std::to_string(sub.seed));
    scores.push_back(run_pipeline(sub).metrics.test_micro_f1);
  }
  return scores;
}

std::string format_mean_std(const std::vector<double>& values) {
  if (values.empty()) return "n/a";
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f", mean * 100.0,
                std::sqrt(var) * 100.0);
  return buf;
}

TimingReport timing_report(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "timing.json");
  if (!in)
    throw std::runtime_error("timing_report: no timing.json under " +
                             run_dir.string());
  nlohmann::json j;
  in >> j;
  TimingReport rep;
  rep.metrics_s = j.value("preprocess_s", 0.0);
  rep.cache_hit = j.value("preprocess_cache_hit", false);
  rep.embedding_s = j.value("vsubgae_s", 0.0) + j.value("contrastive_s", 0.0);
  rep.subgraph_s = j.value("supervised_s", 0.0);
  return rep;
}

std::string render_timing_report(const TimingReport& rep) {
  std::ostringstream out;
  out << "stage      seconds\n";
  out << "Metrics    " << rep.metrics_s
      << (rep.cache_hit ? "  (cache hit)" : "") << "\n";
  out << "Embedding  " << rep.embedding_s << "\n";
  out << "Subgraph   " << rep.subgraph_s << "\n";
  return out.str();
}

}  // namespace padel
