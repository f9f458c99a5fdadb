#include <doctest.h>

#include <cmath>

#include "smld/core/rng.hpp"
#include "smld/metrics/metrics.hpp"
#include "smld/nn/model.hpp"

using smld::Rng;
using smld::Tape;
using smld::Tensor;
namespace nn = smld::nn;

namespace {

nn::NetworkCfg small_cfg() {
  nn::NetworkCfg cfg;
  cfg.in_channels = 2;
  cfg.in_len = 20;
  cfg.n_classes = 3;
  cfg.stages = {nn::StageCfg{{{4, 5, 2}}}, nn::StageCfg{{{6, 5, 2}}}};
  cfg.heads = {nn::HeadCfg{nn::HeadKind::Linear},
               nn::HeadCfg{nn::HeadKind::Hopfield, 4, 0.0}};
  return cfg;
}

Tensor<float> random_input(const nn::NetworkCfg& cfg, int batch, uint64_t seed) {
  Rng rng(seed);
  Tensor<float> x({batch, cfg.in_channels, cfg.in_len});
  for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1, 1));
  return x;
}

}  // namespace

TEST_CASE("stage shape arithmetic") {
  nn::NetworkCfg cfg = small_cfg();
  auto shapes = nn::stage_shapes(cfg);
  REQUIRE(shapes.size() == 2);
  CHECK(shapes[0].channels == 4);
  CHECK(shapes[0].length == 10);  // stride 2 with same-style padding
  CHECK(shapes[1].channels == 6);
  CHECK(shapes[1].length == 5);

  // stride 2 on L=10 with K=1 gives L=5
  CHECK(nn::conv_out_len(10, 1, 2, nn::pad_for(1)) == 5);
}

TEST_CASE("backbone forward returns one feature per stage with declared shapes") {
  for (int n_stages : {1, 2, 3}) {
    nn::NetworkCfg cfg;
    cfg.in_channels = 3;
    cfg.in_len = 40;
    cfg.n_classes = 4;
    for (int i = 0; i < n_stages; ++i) {
      cfg.stages.push_back(nn::StageCfg{{{4 + 2 * i, 3, 2}}});
    }
    cfg.heads = {nn::HeadCfg{}};
    nn::Network net(cfg);
    net.init_params(3);
    Tensor<float> x = random_input(cfg, 2, 5);
    std::vector<Tensor<float>> feats = net.stage_features_eval(x, 0);
    auto shapes = nn::stage_shapes(cfg);
    REQUIRE(static_cast<int>(feats.size()) == n_stages);
    for (int i = 0; i < n_stages; ++i) {
      CHECK(feats[static_cast<size_t>(i)].dim(1) == shapes[static_cast<size_t>(i)].channels);
      CHECK(feats[static_cast<size_t>(i)].dim(2) == shapes[static_cast<size_t>(i)].length);
    }
  }
}

TEST_CASE("identity-kernel stage passes input through") {
  nn::NetworkCfg cfg;
  cfg.in_channels = 1;
  cfg.in_len = 12;
  cfg.n_classes = 2;
  cfg.activation = nn::Activation::None;
  cfg.stages = {nn::StageCfg{{{1, 1, 1}}}};
  cfg.heads = {nn::HeadCfg{}};
  nn::Network net(cfg);
  net.param("stage0.conv0.w").v = {1.0f};
  Tensor<float> x = random_input(cfg, 1, 9);
  std::vector<Tensor<float>> feats = net.stage_features_eval(x, 0);
  CHECK(feats[0].v == x.v);
}

TEST_CASE("input shape mismatch is rejected") {
  nn::Network net(small_cfg());
  net.init_params(1);
  Tensor<float> bad({1, 3, 20});
  CHECK_THROWS_AS((void)net.logits(bad), smld::Error);
}

TEST_CASE("hopfield retrieval properties") {
  const int d = 6;
  auto retrieve = [&](const Tensor<float>& patterns, const Tensor<float>& xi, double beta) {
    Tape<float> tape;
    auto p = tape.leaf(patterns);
    auto x = tape.leaf(xi);
    auto scores = tape.scale(tape.matmul(x, p, true), beta);
    auto attn = tape.softmax(scores, 1);
    return tape.value(tape.matmul(attn, p, false));
  };

  Rng rng(13);
  SUBCASE("single stored pattern dominates any query") {
    Tensor<float> p({1, d});
    for (auto& v : p.v) v = static_cast<float>(rng.normal());
    Tensor<float> xi({2, d});
    for (auto& v : xi.v) v = static_cast<float>(rng.normal());
    Tensor<float> out = retrieve(p, xi, 1.0);
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < d; ++j) CHECK(out.at(b, j) == doctest::Approx(p.v[static_cast<size_t>(j)]));
  }

  SUBCASE("beta=0 returns the stored-pattern mean") {
    const int m = 5;
    Tensor<float> p({m, d});
    for (auto& v : p.v) v = static_cast<float>(rng.normal());
    Tensor<float> xi({1, d});
    for (auto& v : xi.v) v = static_cast<float>(rng.normal());
    Tensor<float> out = retrieve(p, xi, 0.0);
    for (int j = 0; j < d; ++j) {
      double mean = 0;
      for (int i = 0; i < m; ++i) mean += p.at(i, j);
      mean /= m;
      CHECK(out.at(0, j) == doctest::Approx(mean).epsilon(1e-6));
    }
  }

  SUBCASE("large beta snaps a stored query onto its pattern") {
    const int m = 4;
    Tensor<float> p({m, d});
    // well-separated one-hot-ish patterns
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) p.at(i, j) = i == j ? 4.0f : 0.0f;
    Tensor<float> xi({1, d});
    for (int j = 0; j < d; ++j) xi.at(0, j) = p.at(2, j);
    Tensor<float> out = retrieve(p, xi, 50.0);
    for (int j = 0; j < d; ++j) CHECK(std::abs(out.at(0, j) - p.at(2, j)) < 1e-3);
  }
}

TEST_CASE("ensemble output is the importance-weighted head sum") {
  nn::Network net(small_cfg());
  net.init_params(11);
  Tensor<float> x = random_input(net.cfg(), 3, 21);

  SUBCASE("equal weights average the heads") {
    net.param("importance").v = {0.0f, 0.0f};
    Tape<float> tape;
    auto bound = net.forward(tape, x);
    const Tensor<float>& out = tape.value(bound.output);
    const Tensor<float>& h0 = tape.value(bound.head_logits[0]);
    const Tensor<float>& h1 = tape.value(bound.head_logits[1]);
    for (int64_t i = 0; i < out.numel(); ++i) {
      CHECK(out.v[static_cast<size_t>(i)] ==
            doctest::Approx(0.5 * (h0.v[static_cast<size_t>(i)] + h1.v[static_cast<size_t>(i)]))
                .epsilon(1e-6));
    }
  }

  SUBCASE("ln3 weight gap gives a 3:1 mixture") {
    net.param("importance").v = {static_cast<float>(std::log(3.0)), 0.0f};
    Tape<float> tape;
    auto bound = net.forward(tape, x);
    const Tensor<float>& out = tape.value(bound.output);
    const Tensor<float>& h0 = tape.value(bound.head_logits[0]);
    const Tensor<float>& h1 = tape.value(bound.head_logits[1]);
    for (int64_t i = 0; i < out.numel(); ++i) {
      CHECK(out.v[static_cast<size_t>(i)] ==
            doctest::Approx(0.75 * h0.v[static_cast<size_t>(i)] +
                            0.25 * h1.v[static_cast<size_t>(i)])
                .epsilon(1e-5));
    }
  }

  SUBCASE("single head passes through exactly") {
    nn::NetworkCfg cfg = small_cfg();
    cfg.heads = {nn::HeadCfg{nn::HeadKind::Linear}};
    nn::Network one(cfg);
    one.init_params(11);
    Tape<float> tape;
    auto bound = one.forward(tape, x);
    CHECK(tape.value(bound.output).v == tape.value(bound.head_logits[0]).v);
  }
}

TEST_CASE("head importance softmax") {
  nn::NetworkCfg cfg = small_cfg();
  cfg.heads.push_back(nn::HeadCfg{nn::HeadKind::Linear});
  nn::Network net(cfg);
  net.init_params(1);

  net.param("importance").v = {0.0f, 0.0f, 0.0f};
  for (double q : net.head_importance()) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  net.param("importance").v = {1.0f, 1.0f, 1.0f};  // constant shift: unchanged
  for (double q : net.head_importance()) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  nn::Network two(small_cfg());
  two.init_params(1);
  two.param("importance").v = {2.0f, 0.0f};
  auto q = two.head_importance();
  CHECK(q[0] == doctest::Approx(0.8807970779778823).epsilon(1e-7));
  CHECK(q[1] == doctest::Approx(0.11920292202211755).epsilon(1e-7));
  // argmax of q matches argmax of the raw weights
  CHECK(q[0] > q[1]);
}

TEST_CASE("parameter counting") {
  // dense 4 -> 3 head with bias: 15
  nn::NetworkCfg cfg;
  cfg.in_channels = 1;
  cfg.in_len = 8;
  cfg.n_classes = 3;
  cfg.stages = {nn::StageCfg{{{4, 1, 1}}}};
  cfg.heads = {nn::HeadCfg{nn::HeadKind::Linear}};
  nn::Network net(cfg);
  CHECK(net.head_parameter_count(0) == 15);
  // conv1d Cin=1, Cout=4, K=1 with bias: 8; importance excluded
  CHECK(net.parameter_count() == 8 + 15);

  // conv1d Cin=2, Cout=3, K=5 with bias: 33
  nn::NetworkCfg cfg2;
  cfg2.in_channels = 2;
  cfg2.in_len = 16;
  cfg2.n_classes = 2;
  cfg2.stages = {nn::StageCfg{{{3, 5, 1}}}};
  cfg2.heads = {nn::HeadCfg{nn::HeadKind::Linear}};
  nn::Network net2(cfg2);
  CHECK(net2.parameter_count() - net2.head_parameter_count(0) == 33);
}

TEST_CASE("macs estimates") {
  // dense 4 -> 3: 12
  nn::NetworkCfg cfg;
  cfg.in_channels = 1;
  cfg.in_len = 8;
  cfg.n_classes = 3;
  cfg.stages = {nn::StageCfg{{{4, 1, 1}}}};
  cfg.heads = {nn::HeadCfg{nn::HeadKind::Linear}};
  CHECK(smld::metrics::head_macs(cfg, 0) == 12);

  // conv Cin=2, Cout=3, K=5, Lout=10: 300
  nn::NetworkCfg cfg2;
  cfg2.in_channels = 2;
  cfg2.in_len = 10;
  cfg2.n_classes = 2;
  cfg2.stages = {nn::StageCfg{{{3, 5, 1}}}};
  cfg2.heads = {nn::HeadCfg{nn::HeadKind::Linear}};
  CHECK(smld::metrics::macs_estimate(cfg2) -
            smld::metrics::head_macs(cfg2, 0) ==
        300);

  // hopfield head: m*D + m*D + D*classes
  nn::NetworkCfg cfg3 = cfg2;
  cfg3.heads = {nn::HeadCfg{nn::HeadKind::Hopfield, 7, 1.0}};
  CHECK(smld::metrics::head_macs(cfg3, 0) == 7 * 3 + 7 * 3 + 3 * 2);
}

TEST_CASE("network config validation rejects degenerate setups") {
  nn::NetworkCfg good = small_cfg();
  nn::validate_network_cfg(good);

  nn::NetworkCfg no_heads = good;
  no_heads.heads.clear();
  CHECK_THROWS_AS(nn::validate_network_cfg(no_heads), smld::Error);

  nn::NetworkCfg no_stages = good;
  no_stages.stages.clear();
  CHECK_THROWS_AS(nn::validate_network_cfg(no_stages), smld::Error);

  nn::NetworkCfg zero_channels = good;
  zero_channels.stages[0].blocks[0].out_channels = 0;
  CHECK_THROWS_AS(nn::validate_network_cfg(zero_channels), smld::Error);

  nn::NetworkCfg empty_hopfield = good;
  empty_hopfield.heads[1].patterns = 0;
  CHECK_THROWS_AS(nn::validate_network_cfg(empty_hopfield), smld::Error);

  // unpadded kernels longer than the signal have no valid output length
  CHECK_THROWS_AS((void)nn::conv_out_len(3, 5, 1, 0), smld::Error);
}
