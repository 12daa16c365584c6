// Acceptance suite: one pass/fail line per criterion.
//
//   AC-1  karate-club position encoding is linearly separable
//   AC-2  phase-encoding invariants on random connected graphs
//   AC-3  gradient correctness, per-op and per composite block
//   AC-4  InfoNCE uniform-score closed form ln(2K-1)
//   AC-5  autoencoder pretraining learns on a fixed tiny instance
//   AC-6  end-to-end synthetic pipeline beats the pooling-only ablation
//   AC-7  bit-identical manifests under identical config+seed
//   AC-8  preprocessing envelope at |V|=10^4, |E|~10^6 with sub-second replay
//
// Usage: acceptance [AC-1 AC-2 ...]; no arguments runs everything.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "padel/checkpoint.hpp"
#include "padel/contrastive.hpp"
#include "padel/graph.hpp"
#include "padel/optim.hpp"
#include "padel/pooling.hpp"
#include "padel/position.hpp"
#include "padel/rng.hpp"
#include "padel/synth.hpp"
#include "padel/tape.hpp"
#include "padel/trainer.hpp"
#include "padel/vsubgae.hpp"
#include "support/gradcheck.hpp"

using namespace padel;
using padel::testing::gradients_match;
using padel::testing::numeric_gradient;
namespace fs = std::filesystem;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

fs::path scratch_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() /
               (std::string("padel_accept_") + tag + "_" +
                std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BaseGraph random_connected_graph(std::size_t n, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t v = 1; v < n; ++v)
    edges.emplace_back(v, static_cast<std::uint32_t>(rng.uniform_index(v)));
  for (std::size_t k = 0; k < n / 2; ++k) {
    auto u = static_cast<std::uint32_t>(rng.uniform_index(n));
    auto v = static_cast<std::uint32_t>(rng.uniform_index(n));
    if (u != v) edges.emplace_back(u, v);
  }
  return BaseGraph::from_edges(n, edges);
}

// ---------------------------------------------------------------------------
// AC-1: cosine-phase encoding of the karate club, reduced to two dimensions,
// admits a >= 90% training-accuracy linear probe on the faction labels.
bool ac1() {
  const double t0 = now_s();
  const fs::path dir = scratch_dir("ac1");
  make_karate(dir / "edges.txt", dir / "subs.txt");
  auto bundle = load_dataset(dir / "edges.txt", dir / "subs.txt");

  auto pre = compute_or_load_phase(bundle.graph, {}, 0, 1);
  auto pca = pca_reduce(pre.phase, 2);

  // Labels in dense-node order via the singleton records.
  std::vector<double> label(bundle.graph.num_nodes, 0.0);
  for (const auto& rec : bundle.subgraphs)
    label[rec.node_ids[0]] = rec.labels[0] == 0 ? 0.0 : 1.0;

  // Logistic probe on the 2-d scores, plain gradient descent.
  double w0 = 0.0, w1 = 0.0, b = 0.0;
  const std::size_t n = bundle.graph.num_nodes;
  for (int step = 0; step < 5000; ++step) {
    double g0 = 0, g1 = 0, gb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = w0 * pca.scores.at(i, 0) + w1 * pca.scores.at(i, 1) + b;
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - label[i];
      g0 += err * pca.scores.at(i, 0);
      g1 += err * pca.scores.at(i, 1);
      gb += err;
    }
    w0 -= 0.1 * g0 / n;
    w1 -= 0.1 * g1 / n;
    b -= 0.1 * gb / n;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = w0 * pca.scores.at(i, 0) + w1 * pca.scores.at(i, 1) + b;
    correct += ((z >= 0.0) == (label[i] > 0.5)) ? 1 : 0;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(n);
  const double elapsed = now_s() - t0;
  fs::remove_all(dir);

  std::printf("  karate linear probe accuracy %.1f%% (%zu/%zu), %.2f s\n",
              acc * 100.0, correct, n, elapsed);
  return acc >= 0.90 && elapsed < 5.0;
}

// ---------------------------------------------------------------------------
// AC-2: on 100 random connected graphs, every phase entry lies in
// [-1,1] ∪ {-1.5}, diagonals are 1, rows are pairwise distinct, and entries
// decrease with hop count within each row.
bool ac2() {
  const double t0 = now_s();
  Rng rng(20260810);
  std::size_t graphs_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);  // up to 50 nodes
    auto g = random_connected_graph(n, rng);
    auto dist = all_pairs_distances(g, 1);
    auto dia = diameters(dist);
    auto phase = phase_encode(dist, dia);
    for (std::size_t i = 0; i < n; ++i) {
      if (phase.at(i, i) != 1.0f) return false;
      for (std::size_t j = 0; j < n; ++j) {
        const float v = phase.at(i, j);
        const bool in_range = (v >= -1.0f && v <= 1.0f) || v == -1.5f;
        if (!in_range) return false;
        for (std::size_t k = 0; k < n; ++k)
          if (dist.at(i, j) < dist.at(i, k) &&
              !(phase.at(i, j) > phase.at(i, k)))
            return false;
      }
      for (std::size_t i2 = i + 1; i2 < n; ++i2) {
        bool differ = false;
        for (std::size_t j = 0; j < n && !differ; ++j)
          differ = phase.at(i, j) != phase.at(i2, j);
        if (!differ) return false;
      }
    }
    ++graphs_checked;
  }
  const double elapsed = now_s() - t0;
  std::printf("  %zu connected graphs verified, %.2f s\n", graphs_checked,
              elapsed);
  return graphs_checked == 100 && elapsed < 30.0;
}

// ---------------------------------------------------------------------------
// AC-3: analytic gradients match central finite differences within 1e-4
// relative error, for every op and every composite block, >= 20 instances.
bool ac3() {
  const double t0 = now_s();
  Rng rng(31337);
  const double tol = 1e-4;
  bool all_ok = true;
  std::size_t checks = 0;

  auto random_in = [&](std::size_t r, std::size_t c, double lo, double hi) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
  };
  auto away_from_zero = [&](std::size_t r, std::size_t c) {
    Tensor t(r, c);
    for (double& v : t.data) {
      do {
        v = rng.uniform(-2.0, 2.0);
      } while (std::abs(v) < 0.05);
    }
    return t;
  };

  auto check_fn =
      [&](const char* name,
          const std::function<Tape::Var(Tape&, Tape::Var)>& build,
          const Tensor& input) {
        Tape tape;
        auto leaf = tape.leaf(input, true);
        tape.backward(build(tape, leaf));
        auto fd = numeric_gradient(
            [&](const std::vector<Tensor>& p) {
              Tape t;
              return t.value(build(t, t.leaf(p[0], false))).data[0];
            },
            {input}, 0);
        double worst = 0.0;
        ++checks;
        if (!gradients_match(tape.grad(leaf), fd, tol, &worst)) {
          std::printf("  FAILED %s (worst rel err %.3g)\n", name, worst);
          all_ok = false;
        }
      };

  // Per-op checks, 20 instances each.
  for (int inst = 0; inst < 20; ++inst) {
    Tensor a34 = random_in(3, 4, -2, 2);
    Tensor a43 = random_in(4, 3, -2, 2);
    Tensor row4 = random_in(1, 4, -2, 2);
    Tensor pos = random_in(3, 4, 0.1, 2.0);
    Tensor a38 = random_in(3, 8, -2, 2);

    check_fn("matmul-left", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.matmul(v, t.constant(a43)));
    }, a34);
    check_fn("matmul-right", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.matmul(t.constant(a34), v));
    }, a43);
    check_fn("add", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.add(v, t.constant(a34)), t.constant(a34)));
    }, a34);
    check_fn("sub", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.sub(t.constant(a34), v), t.constant(a34)));
    }, a34);
    check_fn("row_broadcast_add", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.row_broadcast_add(t.constant(a34), v),
                             t.constant(a34)));
    }, row4);
    check_fn("pointwise_mul", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(v, v));
    }, a34);
    check_fn("div", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.div(t.constant(a34), v));
    }, pos);
    check_fn("scale", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.scale(v, -0.37));
    }, a34);
    check_fn("relu", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.relu(v), t.constant(a34)));
    }, away_from_zero(3, 4));
    check_fn("sigmoid", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.sigmoid(v), t.constant(a34)));
    }, a34);
    check_fn("tanh", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.tanh(v), t.constant(a34)));
    }, a34);
    check_fn("exp", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.exp(v), t.constant(a34)));
    }, a34);
    check_fn("log", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.log(v), t.constant(a34)));
    }, pos);
    check_fn("sqrt", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.sqrt(v), t.constant(a34)));
    }, pos);
    check_fn("softplus", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.softplus(v), t.constant(a34)));
    }, a34);
    check_fn("clamp", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.clamp(v, -1.0, 1.0), t.constant(a34)));
    }, away_from_zero(3, 4));
    check_fn("concat_cols", [&](Tape& t, Tape::Var v) {
      return t.sum_all(
          t.mul(t.concat_cols(v, t.constant(a34)), t.constant(a38)));
    }, a34);
    check_fn("slice_cols", [&](Tape& t, Tape::Var v) {
      return t.sum_all(
          t.mul(t.slice_cols(v, 1, 2), t.constant(Tensor(3, 2, 1.1))));
    }, a34);
    check_fn("slice_rows", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.slice_rows(v, {2, 0, 2}),
                             t.constant(Tensor(3, 4, 0.9))));
    }, a34);
    check_fn("mean_rows", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.mean_rows(v), t.constant(row4)));
    }, a34);
    check_fn("sum_all", [&](Tape& t, Tape::Var v) {
      return t.mul(t.sum_all(v), t.sum_all(v));
    }, a34);
    check_fn("transpose", [&](Tape& t, Tape::Var v) {
      return t.sum_all(t.mul(t.transpose(v), t.constant(a43)));
    }, a34);
  }

  // Composite blocks, 20 instances each.
  const std::size_t d = 3, d_hat = 4;
  for (int inst = 0; inst < 20; ++inst) {
    Rng prng = rng.child("pool", inst);
    PoolingParams pool = PoolingParams::init(d, d_hat, prng);
    Tensor x_vals = Tensor::gaussian(6, d, prng);
    Tensor p_vals = Tensor::gaussian(6, d, prng);
    std::vector<std::uint32_t> ids = {0, 2, 3, 5};
    Tensor adj(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        adj.at(i, j) = adj.at(j, i) = prng.bernoulli(0.5) ? 1.0 : 0.0;

    // GCN pooling branch w.r.t. the conv weight
    {
      Tape tape;
      PoolVars vars = watch(tape, pool, true);
      auto e = encode_np(tape, vars, tape.leaf(x_vals, false),
                         tape.constant(p_vals), ids, adj);
      tape.backward(tape.sum_all(tape.mul(e, e)));
      auto fd = numeric_gradient(
          [&](const std::vector<Tensor>& p) {
            PoolingParams pc = pool;
            pc.gcn_weight = p[0];
            Tape t;
            PoolVars v = watch(t, pc, false);
            auto enc = encode_np(t, v, t.leaf(x_vals, false),
                                 t.constant(p_vals), ids, adj);
            return t.value(t.sum_all(t.mul(enc, enc))).data[0];
          },
          {pool.gcn_weight}, 0);
      double worst = 0;
      ++checks;
      if (!gradients_match(tape.grad(vars.gcn_weight), fd, tol, &worst)) {
        std::printf("  FAILED gcn-layer (worst rel err %.3g)\n", worst);
        all_ok = false;
      }
    }
    // Both recurrent layers w.r.t. one weight per layer (and P)
    {
      Tape tape;
      PoolVars vars = watch(tape, pool, true);
      auto p_leaf = tape.leaf(p_vals, true);
      auto e = encode_s(tape, vars, p_leaf, ids);
      tape.backward(tape.sum_all(tape.mul(e, e)));
      struct Slot {
        const char* name;
        Tape::Var leaf;
        Tensor* param;
      };
      const Slot slots[] = {
          {"bilstm-layer1", vars.l1f_wi, &pool.layer1.fwd.w_input},
          {"bilstm-layer2", vars.l2b_wh, &pool.layer2.bwd.w_hidden},
      };
      for (const auto& slot : slots) {
        auto fd = numeric_gradient(
            [&](const std::vector<Tensor>& p) {
              PoolingParams pc = pool;
              auto orig = pool.params();
              auto copy = pc.params();
              for (std::size_t i = 0; i < orig.size(); ++i)
                if (orig[i].tensor == slot.param) *copy[i].tensor = p[0];
              Tape t;
              PoolVars v = watch(t, pc, false);
              auto enc = encode_s(t, v, t.constant(p_vals), ids);
              return t.value(t.sum_all(t.mul(enc, enc))).data[0];
            },
            {*slot.param}, 0);
        double worst = 0;
        ++checks;
        if (!gradients_match(tape.grad(slot.leaf), fd, tol, &worst)) {
          std::printf("  FAILED %s (worst rel err %.3g)\n", slot.name, worst);
          all_ok = false;
        }
      }
    }
    // VSubGAE encoder through the full ELBO w.r.t. the shared conv weight.
    // Finite differences require the smooth regime: once |z·zᵀ| passes ~37
    // the decoded sigmoid rounds to exactly 0/1 and log(1-p) quantizes into
    // ulp staircases, so saturated draws are rejected and resampled.
    {
      Rng vrng = rng.child("vs", inst);
      VSubGAE model = VSubGAE::init(6, d, vrng);
      Tensor eps = sample_epsilon(4, 2 * d, vrng);
      Tensor norm = normalize_adjacency(adj);
      for (int attempt = 0; attempt < 50; ++attempt) {
        Tape probe;
        VsVars pv = watch(probe, model, false);
        auto lat = encode(probe, pv, probe.constant(p_vals), ids, norm, eps);
        auto zzt = probe.matmul(lat.z, probe.transpose(lat.z));
        double peak = 0.0;
        for (double x : probe.value(zzt).data)
          peak = std::max(peak, std::abs(x));
        if (peak < 15.0) break;
        eps = sample_epsilon(4, 2 * d, vrng);
      }
      Tape tape;
      VsVars vars = watch(tape, model, true);
      auto latent =
          encode(tape, vars, tape.constant(p_vals), ids, norm, eps);
      auto probs = decode(tape, latent.z);
      tape.backward(
          elbo_loss(tape, probs, adj, latent.mean, latent.log_sigma, 0.2));
      auto fd = numeric_gradient(
          [&](const std::vector<Tensor>& p) {
            VSubGAE m = model;
            m.shared_weight = p[0];
            Tape t;
            VsVars v = watch(t, m, false);
            auto lat = encode(t, v, t.constant(p_vals), ids, norm, eps);
            auto pr = decode(t, lat.z);
            return t
                .value(elbo_loss(t, pr, adj, lat.mean, lat.log_sigma, 0.2))
                .data[0];
          },
          {model.shared_weight}, 0);
      double worst = 0;
      ++checks;
      if (!gradients_match(tape.grad(vars.shared), fd, tol, &worst)) {
        std::printf("  FAILED vsubgae-encoder (worst rel err %.3g)\n", worst);
        all_ok = false;
      }
    }
    // InfoNCE w.r.t. one encoding row
    {
      Rng irng = rng.child("nce", inst);
      const std::size_t K = 3;
      std::vector<Tensor> nps, ss;
      for (std::size_t i = 0; i < K * K + K; ++i) {
        nps.push_back(Tensor::gaussian(1, 3, irng));
        ss.push_back(Tensor::gaussian(1, 3, irng));
      }
      auto build = [&](Tape& t, Tape::Var target_np) {
        std::vector<std::vector<ViewEncoding>> rans(K);
        std::vector<ViewEncoding> augs;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t i = 0; i < K; ++i) {
            ViewEncoding enc;
            enc.np = (k == 0 && i == 0) ? target_np : t.leaf(nps[idx], false);
            enc.s = t.leaf(ss[idx], false);
            rans[k].push_back(enc);
            ++idx;
          }
        for (std::size_t k = 0; k < K; ++k) {
          augs.push_back(
              ViewEncoding{t.leaf(nps[idx], false), t.leaf(ss[idx], false)});
          ++idx;
        }
        return info_nce(t, rans, augs);
      };
      Tensor target = Tensor::gaussian(1, 3, irng);
      check_fn("info-nce",
               [&](Tape& t, Tape::Var v) { return build(t, v); }, target);
    }
    // CE and BCE w.r.t. logits
    {
      Tensor logits = random_in(1, 5, -2, 2);
      Tensor onehot(1, 5);
      onehot.data[inst % 5] = 1.0;
      check_fn("cross-entropy", [&](Tape& t, Tape::Var v) {
        return ce_loss(t, v, onehot);
      }, logits);
      Tensor multihot(1, 5);
      for (int i = 0; i < 5; ++i) multihot.data[i] = rng.bernoulli(0.4);
      check_fn("bce", [&](Tape& t, Tape::Var v) {
        return bce_loss(t, v, multihot);
      }, logits);
    }
  }

  const double elapsed = now_s() - t0;
  std::printf("  %zu gradient checks, %.1f s\n", checks, elapsed);
  return all_ok && elapsed < 120.0;
}

// ---------------------------------------------------------------------------
// AC-4: uniform-score batches give loss = ln(2K-1) within 1e-6.
bool ac4() {
  bool ok = true;
  for (std::size_t K : {2, 3, 8, 32}) {
    Tape tape;
    Tensor v = Tensor::row({0.4, -0.1, 0.9});
    std::vector<std::vector<ViewEncoding>> rans(K);
    std::vector<ViewEncoding> augs;
    for (std::size_t k = 0; k < K; ++k) {
      augs.push_back({tape.leaf(v, false), tape.leaf(v, false)});
      for (std::size_t i = 0; i < K; ++i)
        rans[k].push_back({tape.leaf(v, false), tape.leaf(v, false)});
    }
    const double loss = tape.value(info_nce(tape, rans, augs)).data[0];
    const double expect = std::log(2.0 * static_cast<double>(K) - 1.0);
    const double err = std::abs(loss - expect);
    std::printf("  K=%-3zu loss %.9f expect %.9f |err| %.2e\n", K, loss,
                expect, err);
    ok = ok && err < 1e-6;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// AC-5: 500 pretraining steps on a fixed 30-node graph with 10 subgraphs
// reduce the loss monotonically over 50-step windows and reach
// reconstruction AUC > 0.8; the KL term is exactly zero at (0, 0).
bool ac5() {
  const double t0 = now_s();
  const fs::path dir = scratch_dir("ac5");
  SbmParams sbm;
  sbm.num_nodes = 30;
  sbm.p_in = 0.35;
  sbm.p_out = 0.03;
  sbm.num_subgraphs = 10;
  sbm.min_size = 5;
  sbm.max_size = 8;
  sbm.train_frac = 1.0;
  sbm.val_frac = 0.0;
  make_sbm(sbm, 99, dir / "edges.txt", dir / "subs.txt");
  auto bundle = load_dataset(dir / "edges.txt", dir / "subs.txt");
  fs::remove_all(dir);

  Rng rng(12345);
  Rng init = rng.child("init");
  const std::size_t d = 8;
  VSubGAE model = VSubGAE::init(bundle.graph.num_nodes, d, init);
  Tensor p_vals = Tensor::gaussian(bundle.graph.num_nodes, d, init, 0.5);

  // Fixed targets: the records' own adjacencies (no diffusion noise).
  std::vector<Tensor> targets, norms;
  for (const auto& rec : bundle.subgraphs) {
    targets.push_back(induced_adjacency(bundle.graph, rec.node_ids));
    norms.push_back(normalize_adjacency(targets.back()));
  }

  // Slow enough that descent is still under way at step 500; larger rates
  // plateau early and the plateau noise breaks window monotonicity.
  AdamW opt({5e-4, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> losses;
  Rng noise = rng.child("noise");
  for (int step = 0; step < 500; ++step) {
    Tape tape;
    VsVars vars = watch(tape, model, true);
    Tape::Var p_full = tape.constant(p_vals);
    Tape::Var total;
    for (std::size_t k = 0; k < bundle.subgraphs.size(); ++k) {
      const auto& rec = bundle.subgraphs[k];
      Tensor eps =
          sample_epsilon(rec.node_ids.size(), 2 * d, noise);
      auto latent =
          encode(tape, vars, p_full, rec.node_ids, norms[k], eps);
      auto probs = decode(tape, latent.z);
      auto loss = elbo_loss(tape, probs, targets[k], latent.mean,
                            latent.log_sigma, 0.2);
      total = total.valid() ? tape.add(total, loss) : loss;
    }
    auto batch_loss =
        tape.scale(total, 1.0 / static_cast<double>(bundle.subgraphs.size()));
    losses.push_back(tape.value(batch_loss).data[0]);
    tape.backward(batch_loss);
    opt.step({{&model.node_embeddings, &tape.grad(vars.x)},
              {&model.shared_weight, &tape.grad(vars.shared)},
              {&model.mean_head, &tape.grad(vars.mean_w)},
              {&model.logsig_head, &tape.grad(vars.logsig_w)}});
  }

  // 50-step window means must decrease monotonically.
  bool monotone = true;
  double prev = 0;
  for (int w = 0; w < 10; ++w) {
    double mean = 0;
    for (int i = 0; i < 50; ++i) mean += losses[w * 50 + i];
    mean /= 50.0;
    if (w > 0 && mean >= prev) monotone = false;
    prev = mean;
  }

  // Reconstruction AUC against held-in edges, noiseless decode (eps = 0).
  std::vector<double> pos_scores, neg_scores;
  for (std::size_t k = 0; k < bundle.subgraphs.size(); ++k) {
    const auto& rec = bundle.subgraphs[k];
    Tape tape;
    VsVars vars = watch(tape, model, false);
    Tensor eps(rec.node_ids.size(), 2 * d, 0.0);
    auto latent =
        encode(tape, vars, tape.constant(p_vals), rec.node_ids, norms[k], eps);
    const Tensor prob = tape.value(decode(tape, latent.z));
    const std::size_t n = rec.node_ids.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        (targets[k].at(i, j) > 0 ? pos_scores : neg_scores)
            .push_back(prob.at(i, j));
  }
  double auc = 0.0;
  for (double p : pos_scores)
    for (double q : neg_scores) auc += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  auc /= static_cast<double>(pos_scores.size() * neg_scores.size());

  // KL term vanishes exactly when mean = 0 and log sigma = 0 are forced.
  double kl_delta;
  {
    Tape t1, t2;
    Tensor target(2, 2, {0, 1, 1, 0});
    auto probs1 = t1.sigmoid(t1.constant(Tensor(2, 2, 0.3)));
    auto probs2 = t2.sigmoid(t2.constant(Tensor(2, 2, 0.3)));
    const double with_kl =
        t1.value(elbo_loss(t1, probs1, target, t1.constant(Tensor(2, 4, 0.0)),
                           t1.constant(Tensor(2, 4, 0.0)), 0.2))
            .data[0];
    const double without_kl =
        t2.value(elbo_loss(t2, probs2, target, t2.constant(Tensor(2, 4, 0.0)),
                           t2.constant(Tensor(2, 4, 0.0)), 0.0))
            .data[0];
    kl_delta = with_kl - without_kl;
  }

  const double elapsed = now_s() - t0;
  std::printf(
      "  loss %.4f -> %.4f, windows monotone %s, AUC %.3f, KL delta %.1e, "
      "%.1f s\n",
      losses.front(), losses.back(), monotone ? "yes" : "no", auc, kl_delta,
      elapsed);
  return monotone && auc > 0.8 && kl_delta == 0.0 && elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// AC-6: SBM end-to-end. The full pipeline averages >= 0.9 test micro-F1 over
// 5 seeds; the pooling-only ablation scores strictly lower.
bool ac6() {
  const double t0 = now_s();
  const fs::path dir = scratch_dir("ac6");
  SbmParams sbm;
  sbm.num_nodes = 200;
  sbm.p_in = 0.15;
  sbm.p_out = 0.01;
  sbm.num_subgraphs = 60;
  sbm.min_size = 6;
  sbm.max_size = 10;
  sbm.within_prob = 0.95;
  make_sbm(sbm, 2024, dir / "edges.txt", dir / "subs.txt");

  RunConfig base;
  base.edge_file = dir / "edges.txt";
  base.subgraph_file = dir / "subs.txt";
  base.cache_dir = dir / "cache";
  base.train_fraction = 0.1;
  base.max_epochs = 600;
  base.patience = 200;
  base.ss_epochs = 60;
  base.cl_epochs = 40;
  base.lr = 5e-3;

  RunConfig c7 = base;
  bool dummy = false;
  c7.stages = ablation_toggles("c7", &dummy);
  c7.out_dir = dir / "c7";
  RunConfig c0 = base;
  c0.stages = ablation_toggles("c0", &c0.init_random);
  c0.out_dir = dir / "c0";

  auto c7_scores = run_seeds(c7, 5);
  auto c0_scores = run_seeds(c0, 5);
  double c7_mean = 0, c0_mean = 0;
  for (double s : c7_scores) c7_mean += s;
  for (double s : c0_scores) c0_mean += s;
  c7_mean /= 5.0;
  c0_mean /= 5.0;

  const double elapsed = now_s() - t0;
  std::printf("  full pipeline %s vs pooling-only %s (means %.3f / %.3f), "
              "%.0f s\n",
              format_mean_std(c7_scores).c_str(),
              format_mean_std(c0_scores).c_str(), c7_mean, c0_mean, elapsed);
  fs::remove_all(dir);
  return c7_mean >= 0.9 && c0_mean < c7_mean && elapsed < 600.0;
}

// ---------------------------------------------------------------------------
// AC-7: identical config + seed produce bit-identical manifests.
bool ac7() {
  const fs::path dir = scratch_dir("ac7");
  SbmParams sbm;
  sbm.num_nodes = 60;
  sbm.p_in = 0.2;
  sbm.p_out = 0.02;
  sbm.num_subgraphs = 24;
  make_sbm(sbm, 5, dir / "edges.txt", dir / "subs.txt");

  RunConfig cfg;
  cfg.edge_file = dir / "edges.txt";
  cfg.subgraph_file = dir / "subs.txt";
  cfg.out_dir = dir / "run";
  cfg.cache_dir = dir / "cache";
  cfg.feature_dim = 8;
  cfg.pca_dim = 16;
  cfg.hidden_dim = 16;
  cfg.ss_epochs = 10;
  cfg.cl_epochs = 5;
  cfg.max_epochs = 30;
  cfg.early_stop = false;
  cfg.seed = 77;

  run_pipeline(cfg);
  const std::string first = slurp(cfg.out_dir / "manifest.json");
  run_pipeline(cfg);
  const std::string second = slurp(cfg.out_dir / "manifest.json");
  fs::remove_all(dir);

  std::printf("  manifest bytes %zu, identical %s\n", first.size(),
              first == second ? "yes" : "no");
  return !first.empty() && first == second;
}

// ---------------------------------------------------------------------------
// AC-8: distances + phase on |V| = 10k, |E| ~ 1e6 inside 15 minutes; a cache
// hit replays in under a second.
bool ac8() {
  const fs::path dir = scratch_dir("ac8");
  const std::size_t n = 10000;
  const std::size_t m = 1000000;

  Rng rng(424242);
  std::set<std::uint64_t> seen;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    auto u = static_cast<std::uint32_t>(rng.uniform_index(n));
    auto v = static_cast<std::uint32_t>(rng.uniform_index(n));
    if (u == v) continue;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
    if (seen.insert(key).second) edges.emplace_back(u, v);
  }
  auto graph = BaseGraph::from_edges(n, edges);

  float probe1 = 0, probe2 = 0;
  std::uint16_t dprobe = 0;
  double cold_s = 0;
  {
    const double t0 = now_s();
    auto pre = compute_or_load_phase(graph, dir, 0xfeedbeef, 0);
    cold_s = now_s() - t0;
    if (pre.cache_hit) return false;
    probe1 = pre.phase.at(17, 4242);
    probe2 = pre.phase.at(9000, 3);
    dprobe = pre.distances.at(123, 456);
  }
  double warm_s = 0;
  bool warm_hit = false;
  bool same = false;
  {
    const double t0 = now_s();
    auto pre = compute_or_load_phase(graph, dir, 0xfeedbeef, 0);
    warm_s = now_s() - t0;
    warm_hit = pre.cache_hit;
    same = pre.phase.at(17, 4242) == probe1 && pre.phase.at(9000, 3) == probe2 &&
           pre.distances.at(123, 456) == dprobe;
  }
  fs::remove_all(dir);

  std::printf("  cold %.1f s (budget 900), warm %.3f s (budget 1), hit %s, "
              "probes match %s\n",
              cold_s, warm_s, warm_hit ? "yes" : "no", same ? "yes" : "no");
  return cold_s < 900.0 && warm_hit && warm_s < 1.0 && same;
}

struct Criterion {
  const char* name;
  const char* description;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {"AC-1", "karate-club position encoding linearly separates factions",
     ac1},
    {"AC-2", "phase encoding invariants on 100 random connected graphs", ac2},
    {"AC-3", "gradients match finite differences (ops and blocks)", ac3},
    {"AC-4", "InfoNCE uniform-score closed form ln(2K-1)", ac4},
    {"AC-5", "autoencoder pretraining: monotone windows, AUC > 0.8", ac5},
    {"AC-6", "end-to-end SBM pipeline beats pooling-only ablation", ac6},
    {"AC-7", "bit-identical manifests for identical config+seed", ac7},
    {"AC-8", "10k-node preprocessing envelope with sub-second replay", ac8},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool any_failed = false;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), c.name) == wanted.end())
      continue;
    std::printf("%s %s\n", c.name, c.description);
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      std::printf("  exception: %s\n", e.what());
    }
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", c.name);
    if (!ok) any_failed = true;
  }
  return any_failed ? 1 : 0;
}
