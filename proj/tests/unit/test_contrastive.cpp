#include <doctest.h>

#include <cmath>
#include <set>

#include "padel/contrastive.hpp"
#include "padel/rng.hpp"
#include "support/gradcheck.hpp"

using namespace padel;

namespace {

// Encoding pair backed by explicit row vectors.
ViewEncoding make_enc(Tape& tape, const Tensor& np, const Tensor& s,
                      bool trainable = false) {
  return {tape.leaf(np, trainable), tape.leaf(s, trainable)};
}

}  // namespace

TEST_SUITE_BEGIN("contrastive");

TEST_CASE("auto_walk_hop is the mean subgraph size, at least 1") {
  DatasetBundle bundle;
  bundle.graph = BaseGraph::from_edges(6, {{0, 1}});
  SubgraphRecord a, b;
  a.node_ids = {0, 1, 2};
  b.node_ids = {0, 1, 2, 3, 4, 5};
  a.labels = b.labels = {0};
  bundle.subgraphs = {a, b};
  CHECK(auto_walk_hop(bundle) == 5);  // round(4.5) rounds up
  bundle.subgraphs = {a};
  CHECK(auto_walk_hop(bundle) == 3);
  bundle.subgraphs.clear();
  CHECK(auto_walk_hop(bundle) == 1);
}

TEST_CASE("random_walk_view") {
  SUBCASE("hop=1 visits at most two nodes") {
    auto g = BaseGraph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      auto view = random_walk_view(g, 1, rng);
      CHECK(view.node_ids.size() >= 1);
      CHECK(view.node_ids.size() <= 2);
    }
  }
  SUBCASE("dead ends terminate the walk early") {
    auto g = BaseGraph::from_edges(3, {{0, 1}});  // node 2 isolated
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      auto view = random_walk_view(g, 10, rng);
      // A walk starting at 2 stays {2}; others stay within {0,1}.
      for (auto v : view.node_ids) CHECK(v < 3);
    }
  }
  SUBCASE("on K5 with hop=3 the visited set has 2 to 4 nodes") {
    // Enumeration: a 3-step walk on a complete graph leaves the start, so at
    // least 2 distinct nodes; at most 1+3 when all steps are fresh.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 0; i < 5; ++i)
      for (std::uint32_t j = i + 1; j < 5; ++j) edges.emplace_back(i, j);
    auto k5 = BaseGraph::from_edges(5, edges);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      auto view = random_walk_view(k5, 3, rng);
      CHECK(view.node_ids.size() >= 2);
      CHECK(view.node_ids.size() <= 4);
    }
  }
  SUBCASE("empty graph throws") {
    auto empty = BaseGraph::from_edges(0, {});
    Rng rng(0);
    CHECK_THROWS_AS(random_walk_view(empty, 3, rng), std::invalid_argument);
  }
}

TEST_CASE("explore_view keeps the anchor's own subgraph in place") {
  auto g = BaseGraph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  SubgraphRecord r1, r2, r3;
  r1.node_ids = {0, 1};
  r2.node_ids = {2, 3};
  r3.node_ids = {4, 5};
  r1.labels = r2.labels = r3.labels = {0};
  std::vector<const SubgraphRecord*> batch = {&r1, &r2, &r3};

  Rng rng(42);
  for (std::size_t anchor = 0; anchor < 3; ++anchor) {
    auto views = explore_view(g, batch, anchor, {2}, rng);
    REQUIRE(views.size() == 3);
    CHECK(views[anchor].node_ids == batch[anchor]->node_ids);
  }
  Rng rng2(1);
  CHECK_THROWS_AS(explore_view(g, batch, 7, {2}, rng2),
                  std::invalid_argument);
  std::vector<const SubgraphRecord*> tiny = {&r1};
  CHECK_THROWS_AS(explore_view(g, tiny, 0, {2}, rng2), std::invalid_argument);
}

TEST_CASE("exploit_view node sets contain the originals; deterministic") {
  Rng init(3);
  auto g = BaseGraph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  VSubGAE model = VSubGAE::init(5, 2, init);
  Tensor p_vals = Tensor::gaussian(5, 2, init);
  SubgraphRecord r1, r2;
  r1.node_ids = {0, 1};
  r2.node_ids = {3};
  r1.labels = r2.labels = {0};
  std::vector<const SubgraphRecord*> batch = {&r1, &r2};

  Rng rng_a(9), rng_b(9);
  auto va = exploit_view(g, model, p_vals, batch, {0.5, 128}, rng_a);
  auto vb = exploit_view(g, model, p_vals, batch, {0.5, 128}, rng_b);
  REQUIRE(va.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(va[i].node_ids == vb[i].node_ids);
    CHECK(va[i].adjacency.data == vb[i].adjacency.data);
    std::set<std::uint32_t> nodes(va[i].node_ids.begin(),
                                  va[i].node_ids.end());
    for (auto v : batch[i]->node_ids) CHECK(nodes.count(v) == 1);
  }
}

TEST_CASE("exploit_view rewires edges at the decoder's coin-flip rate") {
  // Untrained decoder probabilities sit near 0.5, so the expected Hamming
  // distance to the original adjacency is sum |p_ij - A_ij| ~ half the pairs.
  Rng init(5);
  auto g = BaseGraph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5},
                                     {5, 0}});
  VSubGAE model = VSubGAE::init(6, 2, init);
  Tensor p_vals = Tensor::gaussian(6, 2, init);
  SubgraphRecord rec;
  rec.node_ids = {0, 1, 2, 3, 4, 5};
  rec.labels = {0};
  std::vector<const SubgraphRecord*> batch = {&rec};
  const Tensor original = induced_adjacency(g, rec.node_ids);

  const int trials = 2000;
  double observed_hamming = 0.0;
  double expected_hamming = 0.0;
  Rng rng(31);
  for (int t = 0; t < trials; ++t) {
    // p_diff = 0 keeps the node set fixed at all 6 nodes.
    auto views = exploit_view(g, model, p_vals, batch, {0.0, 128}, rng);
    const Tensor& aug = views[0].adjacency;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j)
        observed_hamming += std::abs(aug.at(i, j) - original.at(i, j));
  }
  // Expectation from one fresh decoder pass per draw; with eps resampled the
  // expectation is itself a Monte-Carlo quantity, so compare totals loosely
  // (3 sigma with variance bound 1/4 per pair).
  {
    Rng rng2(31);
    for (int t = 0; t < trials; ++t) {
      DiffusedSubgraph sub = diffuse_subgraph(g, rec, {0.0, 128}, rng2);
      Tape tape;
      VsVars vars = watch(tape, model, false);
      Tensor eps = sample_epsilon(6, 4, rng2);
      auto latent = encode(tape, vars, tape.constant(p_vals), sub.node_ids,
                           normalize_adjacency(sub.adjacency), eps);
      const Tensor prob = tape.value(decode(tape, latent.z));
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j)
          expected_hamming += std::abs(prob.at(i, j) - original.at(i, j));
      // Consume the coin flips so the two streams stay aligned.
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j)
          (void)rng2.bernoulli(prob.at(i, j));
    }
  }
  const double sigma = std::sqrt(trials * 15.0 * 0.25);
  CHECK(std::abs(observed_hamming - expected_hamming) <= 3.0 * sigma);
  CHECK(observed_hamming > 0.0);  // edges actually differ
}

TEST_CASE("score closed forms") {
  SUBCASE("identical encodings score 2") {
    Tape tape;
    Tensor v = Tensor::row({1, 2, 3});
    auto a = make_enc(tape, v, v);
    auto b = make_enc(tape, v, v);
    CHECK(tape.value(score(tape, a, b)).data[0] ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal encodings score 0") {
    Tape tape;
    auto a = make_enc(tape, Tensor::row({1, 0}), Tensor::row({0, 2}));
    auto b = make_enc(tape, Tensor::row({0, 3}), Tensor::row({5, 0}));
    CHECK(tape.value(score(tape, a, b)).data[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("opposite np and identical s cancel to 0") {
    Tape tape;
    Tensor v = Tensor::row({1, 2});
    Tensor nv = Tensor::row({-1, -2});
    Tensor s = Tensor::row({3, 4});
    auto a = make_enc(tape, v, s);
    auto b = make_enc(tape, nv, s);
    CHECK(tape.value(score(tape, a, b)).data[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("zero-norm vectors contribute cosine 0") {
    Tape tape;
    auto a = make_enc(tape, Tensor(1, 3, 0.0), Tensor::row({1, 0, 0}));
    auto b = make_enc(tape, Tensor::row({2, 0, 0}), Tensor::row({1, 0, 0}));
    CHECK(tape.value(score(tape, a, b)).data[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("score is symmetric") {
    Rng rng(8);
    Tape tape;
    auto a = make_enc(tape, Tensor::gaussian(1, 4, rng),
                      Tensor::gaussian(1, 4, rng));
    auto b = make_enc(tape, Tensor::gaussian(1, 4, rng),
                      Tensor::gaussian(1, 4, rng));
    CHECK(tape.value(score(tape, a, b)).data[0] ==
          doctest::Approx(tape.value(score(tape, b, a)).data[0])
              .epsilon(1e-12));
  }
  SUBCASE("theta stays within [-2, 2]") {
    Rng rng(18);
    Tape tape;
    for (int t = 0; t < 50; ++t) {
      auto a = make_enc(tape, Tensor::gaussian(1, 3, rng),
                        Tensor::gaussian(1, 3, rng));
      auto b = make_enc(tape, Tensor::gaussian(1, 3, rng),
                        Tensor::gaussian(1, 3, rng));
      const double theta = tape.value(score(tape, a, b)).data[0];
      CHECK(theta >= -2.0 - 1e-12);
      CHECK(theta <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("info_nce uniform-score closed form ln(2K-1)") {
  for (std::size_t K : {2, 3, 8}) {
    Tape tape;
    Tensor v = Tensor::row({0.3, 0.7, -0.2});
    std::vector<std::vector<ViewEncoding>> rans(K);
    std::vector<ViewEncoding> augs;
    for (std::size_t k = 0; k < K; ++k) {
      augs.push_back(make_enc(tape, v, v));
      for (std::size_t i = 0; i < K; ++i)
        rans[k].push_back(make_enc(tape, v, v));
    }
    const double loss = tape.value(info_nce(tape, rans, augs)).data[0];
    CHECK(loss == doctest::Approx(std::log(2.0 * K - 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("info_nce arithmetic oracles on synthetic scores") {
  // positive theta = 2, all negatives theta = -2, K = 3:
  // loss = -ln(e^2 / (e^2 + 4 e^-2))
  {
    Tape tape;
    Tensor pos = Tensor::row({1.0, 0.0});
    Tensor neg = Tensor::row({-1.0, 0.0});
    // anchor ran = pos vector; aug = pos vector; other rans = neg vector.
    std::vector<ViewEncoding> ran = {make_enc(tape, pos, pos),
                                     make_enc(tape, neg, neg),
                                     make_enc(tape, neg, neg)};
    ViewEncoding aug = make_enc(tape, pos, pos);
    const double term =
        tape.value(info_nce_term(tape, ran, aug, 0)).data[0];
    const double expect =
        -std::log(std::exp(2.0) / (std::exp(2.0) + 4.0 * std::exp(-2.0)));
    CHECK(term == doctest::Approx(expect).epsilon(1e-9));
    CHECK(term == doctest::Approx(0.07066).epsilon(1e-3));
  }
  // K = 2 with mutually orthogonal encodings: every theta = 0, loss = ln 3.
  {
    Tape tape2;
    Tensor a = Tensor::row({1.0, 0.0, 0.0});
    Tensor b = Tensor::row({0.0, 1.0, 0.0});
    Tensor c = Tensor::row({0.0, 0.0, 1.0});
    std::vector<ViewEncoding> ran2 = {make_enc(tape2, a, a),
                                      make_enc(tape2, b, b)};
    ViewEncoding aug2 = make_enc(tape2, c, c);
    const double term =
        tape2.value(info_nce_term(tape2, ran2, aug2, 0)).data[0];
    CHECK(term == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  }
}

TEST_CASE("info_nce properties") {
  SUBCASE("loss is strictly positive") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      Tape tape;
      const std::size_t K = 2 + rng.uniform_index(5);
      std::vector<std::vector<ViewEncoding>> rans(K);
      std::vector<ViewEncoding> augs;
      for (std::size_t k = 0; k < K; ++k) {
        augs.push_back(make_enc(tape, Tensor::gaussian(1, 4, rng),
                                Tensor::gaussian(1, 4, rng)));
        for (std::size_t i = 0; i < K; ++i)
          rans[k].push_back(make_enc(tape, Tensor::gaussian(1, 4, rng),
                                     Tensor::gaussian(1, 4, rng)));
      }
      CHECK(tape.value(info_nce(tape, rans, augs)).data[0] > 0.0);
    }
  }
  SUBCASE("raising the positive score lowers the per-anchor loss") {
    // Three collinear np encodings with varying s-alignment for the positive.
    auto term_with_aug = [&](double align) {
      Tape tape;
      Tensor base = Tensor::row({1.0, 0.0});
      Tensor s_pos = Tensor::row({1.0, align});
      std::vector<ViewEncoding> ran = {make_enc(tape, base, base),
                                       make_enc(tape, base, base),
                                       make_enc(tape, base, base)};
      ViewEncoding aug = make_enc(tape, base, s_pos);
      return tape.value(info_nce_term(tape, ran, aug, 0)).data[0];
    };
    // align 0 gives cos = 1/sqrt(2); align large approaches cos -> 0…
    // smaller align = higher positive cos = lower loss.
    CHECK(term_with_aug(0.1) < term_with_aug(1.0));
    CHECK(term_with_aug(1.0) < term_with_aug(10.0));
  }
  SUBCASE("per-anchor term is invariant under common additive theta shift") {
    // Shift invariance at the score level: compare a batch built from
    // encodings whose pairwise cosines are all equal but at two different
    // absolute levels; the softmax term depends only on differences.
    // Construct directly: thetas {t, t, t} vs {t+c, t+c, t+c} give ln(2K-1).
    Tape tape;
    Tensor v = Tensor::row({1.0, 1.0});
    std::vector<ViewEncoding> ran = {make_enc(tape, v, v), make_enc(tape, v, v)};
    ViewEncoding aug = make_enc(tape, v, v);
    const double all_two =
        tape.value(info_nce_term(tape, ran, aug, 0)).data[0];
    Tape t3;
    Tensor a = Tensor::row({1.0, 0.0, 0.0});
    Tensor b = Tensor::row({0.0, 1.0, 0.0});
    Tensor c = Tensor::row({0.0, 0.0, 1.0});
    std::vector<ViewEncoding> ran3 = {make_enc(t3, a, a), make_enc(t3, b, b)};
    ViewEncoding aug3 = make_enc(t3, c, c);
    const double all_zero =
        t3.value(info_nce_term(t3, ran3, aug3, 0)).data[0];
    CHECK(all_two == doctest::Approx(all_zero).epsilon(1e-9));
  }
  SUBCASE("K < 2 throws") {
    Tape tape;
    Tensor v = Tensor::row({1.0});
    std::vector<std::vector<ViewEncoding>> rans(1);
    rans[0].push_back(make_enc(tape, v, v));
    std::vector<ViewEncoding> augs = {make_enc(tape, v, v)};
    CHECK_THROWS_AS(info_nce(tape, rans, augs), std::invalid_argument);
  }
}

TEST_CASE("info_nce gradients flow and match finite differences") {
  Rng rng(77);
  const std::size_t K = 3;
  std::vector<Tensor> nps, ss;
  for (std::size_t i = 0; i < K * K + K; ++i) {
    nps.push_back(Tensor::gaussian(1, 3, rng));
    ss.push_back(Tensor::gaussian(1, 3, rng));
  }
  // Parameterize the anchor-0 ran encoding np row and check d loss / d np.
  auto build = [&](Tape& t, Tape::Var target_np) {
    std::vector<std::vector<ViewEncoding>> rans(K);
    std::vector<ViewEncoding> augs;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < K; ++i) {
        ViewEncoding enc;
        if (k == 0 && i == 0) {
          enc.np = target_np;
          enc.s = t.leaf(ss[idx], false);
        } else {
          enc = ViewEncoding{t.leaf(nps[idx], false), t.leaf(ss[idx], false)};
        }
        rans[k].push_back(enc);
        ++idx;
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      augs.push_back(
          ViewEncoding{t.leaf(nps[idx], false), t.leaf(ss[idx], false)});
      ++idx;
    }
    return info_nce(t, rans, augs);
  };

  Tensor target = Tensor::gaussian(1, 3, rng);
  Tape tape;
  auto leaf = tape.leaf(target, true);
  tape.backward(build(tape, leaf));
  auto fd = padel::testing::numeric_gradient(
      [&](const std::vector<Tensor>& p) {
        Tape t;
        return t.value(build(t, t.leaf(p[0], false))).data[0];
      },
      {target}, 0);
  double worst = 0;
  CHECK(padel::testing::gradients_match(tape.grad(leaf), fd, 1e-4, &worst));
}

TEST_SUITE_END();
