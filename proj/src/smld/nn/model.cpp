#include "smld/nn/model.hpp"

#include <cmath>

#include "smld/core/error.hpp"
#include "smld/core/rng.hpp"

namespace smld::nn {

int conv_out_len(int in_len, int kernel, int stride, int pad) {
  if (stride < 1) fail_data("conv_out_len: stride must be >= 1");
  int lout = (in_len + 2 * pad - kernel) / stride + 1;
  if (kernel > in_len + 2 * pad || lout < 1) {
    fail_data("conv_out_len: kernel " + std::to_string(kernel) + " does not fit length " +
              std::to_string(in_len));
  }
  return lout;
}

std::vector<StageShape> stage_shapes(const NetworkCfg& cfg) {
  if (cfg.stages.empty()) fail_config("network: at least one stage required");
  std::vector<StageShape> shapes;
  int len = cfg.in_len;
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageCfg& st = cfg.stages[i];
    if (st.blocks.empty()) fail_config("network: stage " + std::to_string(i) + " has no blocks");
    for (const ConvBlockCfg& blk : st.blocks) {
      if (blk.out_channels < 1) fail_config("network: non-positive channel count");
      len = conv_out_len(len, blk.kernel, blk.stride, pad_for(blk.kernel));
    }
    shapes.push_back({st.out_channels(), len});
  }
  return shapes;
}

void validate_network_cfg(const NetworkCfg& cfg) {
  if (cfg.in_channels < 1) fail_config("network: in_channels must be >= 1");
  if (cfg.in_len < 1) fail_config("network: in_len must be >= 1");
  if (cfg.n_classes < 1) fail_config("network: n_classes must be >= 1");
  if (cfg.heads.empty()) fail_config("network: at least one head required");
  for (const HeadCfg& h : cfg.heads) {
    if (h.kind == HeadKind::Hopfield && h.patterns < 1) {
      fail_config("network: hopfield head needs at least one stored pattern");
    }
  }
  (void)stage_shapes(cfg);
}

double hopfield_beta(const HeadCfg& head, int pooled_dim) {
  return head.beta > 0 ? head.beta : 1.0 / std::sqrt(static_cast<double>(pooled_dim));
}

Network::Network(NetworkCfg cfg) : cfg_(std::move(cfg)) {
  validate_network_cfg(cfg_);
  register_params();
}

int Network::pooled_dim() const { return cfg_.stages.back().out_channels(); }

void Network::register_params() {
  int cin = cfg_.in_channels;
  for (size_t i = 0; i < cfg_.stages.size(); ++i) {
    for (size_t j = 0; j < cfg_.stages[i].blocks.size(); ++j) {
      const ConvBlockCfg& blk = cfg_.stages[i].blocks[j];
      std::string base = "stage" + std::to_string(i) + ".conv" + std::to_string(j);
      names_.push_back(base + ".w");
      params_.emplace(base + ".w", Tensor<Real>({blk.out_channels, cin, blk.kernel}));
      names_.push_back(base + ".b");
      params_.emplace(base + ".b", Tensor<Real>({blk.out_channels}));
      cin = blk.out_channels;
    }
  }
  const int d = pooled_dim();
  for (size_t h = 0; h < cfg_.heads.size(); ++h) {
    const HeadCfg& head = cfg_.heads[h];
    std::string base = "head" + std::to_string(h);
    if (head.kind == HeadKind::Linear) {
      names_.push_back(base + ".w");
      params_.emplace(base + ".w", Tensor<Real>({d, cfg_.n_classes}));
      names_.push_back(base + ".b");
      params_.emplace(base + ".b", Tensor<Real>({cfg_.n_classes}));
    } else {
      names_.push_back(base + ".patterns");
      params_.emplace(base + ".patterns", Tensor<Real>({head.patterns, d}));
      names_.push_back(base + ".proj_w");
      params_.emplace(base + ".proj_w", Tensor<Real>({d, cfg_.n_classes}));
      names_.push_back(base + ".proj_b");
      params_.emplace(base + ".proj_b", Tensor<Real>({cfg_.n_classes}));
    }
  }
  if (cfg_.ensemble) {
    names_.push_back("importance");
    params_.emplace("importance", Tensor<Real>({static_cast<int>(cfg_.heads.size())}));
  }
}

Tensor<Real>& Network::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail_data("network: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor<Real>& Network::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail_data("network: unknown parameter '" + name + "'");
  return it->second;
}

void Network::init_params(uint64_t seed) {
  Rng rng(seed, 7);
  for (const std::string& name : names_) {
    Tensor<Real>& t = params_.at(name);
    if (name == "importance" || name.ends_with(".b") || name.ends_with(".proj_b")) {
      for (auto& x : t.v) x = 0.0f;
    } else if (name.ends_with(".patterns")) {
      for (auto& x : t.v) x = static_cast<Real>(rng.normal());
    } else {
      // conv [Cout,Cin,K]: fan_in = Cin*K; dense [I,O]: fan_in = I
      int64_t fan_in = t.ndim() == 3 ? static_cast<int64_t>(t.dim(1)) * t.dim(2) : t.dim(0);
      double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (auto& x : t.v) x = static_cast<Real>(rng.normal(0.0, stddev));
    }
  }
}

std::vector<std::string> Network::stage_param_names(int upto) const {
  std::vector<std::string> out;
  for (const std::string& n : names_) {
    if (n.rfind("stage", 0) != 0) continue;
    int idx = std::stoi(n.substr(5, n.find('.') - 5));
    if (idx < upto) out.push_back(n);
  }
  return out;
}

std::vector<std::string> Network::head_param_names(int head) const {
  std::string prefix = "head" + std::to_string(head) + ".";
  std::vector<std::string> out;
  for (const std::string& n : names_) {
    if (n.rfind(prefix, 0) == 0) out.push_back(n);
  }
  return out;
}

Val<Real> Network::activation(Tape<Real>& tape, Val<Real> x) const {
  switch (cfg_.activation) {
    case Activation::Silu:
      return tape.silu(x);
    case Activation::Relu:
      return tape.relu(x);
    case Activation::None:
      return x;
  }
  return x;
}

Network::Bound Network::forward(Tape<Real>& tape, const Tensor<Real>& input, int upto_stage,
                                bool with_heads, bool trainable) const {
  const int n_stages = static_cast<int>(cfg_.stages.size());
  if (upto_stage <= 0 || upto_stage > n_stages) upto_stage = n_stages;
  if (with_heads && upto_stage != n_stages) {
    fail_data("network: heads need the full backbone");
  }
  if (input.ndim() != 3 || input.dim(1) != cfg_.in_channels || input.dim(2) != cfg_.in_len) {
    fail_data("network: input " + input.shape_str() + " does not match config [B," +
              std::to_string(cfg_.in_channels) + "," + std::to_string(cfg_.in_len) + "]");
  }

  Bound bound;
  auto bind = [&](const std::string& name) {
    auto it = bound.params.find(name);
    if (it != bound.params.end()) return it->second;
    Val<Real> v = tape.leaf(params_.at(name), trainable);
    bound.params.emplace(name, v);
    return v;
  };

  Val<Real> x = tape.leaf(input, false);
  for (int i = 0; i < upto_stage; ++i) {
    for (size_t j = 0; j < cfg_.stages[static_cast<size_t>(i)].blocks.size(); ++j) {
      const ConvBlockCfg& blk = cfg_.stages[static_cast<size_t>(i)].blocks[j];
      std::string base = "stage" + std::to_string(i) + ".conv" + std::to_string(j);
      x = tape.conv1d(x, bind(base + ".w"), bind(base + ".b"), blk.stride, pad_for(blk.kernel));
      x = activation(tape, x);
    }
    bound.stage_features.push_back(x);
  }
  if (!with_heads) return bound;

  bound.pooled = tape.global_avg_pool(x);
  const int d = pooled_dim();
  for (size_t h = 0; h < cfg_.heads.size(); ++h) {
    const HeadCfg& head = cfg_.heads[h];
    std::string base = "head" + std::to_string(h);
    Val<Real> logits;
    if (head.kind == HeadKind::Linear) {
      logits = tape.dense(bound.pooled, bind(base + ".w"), bind(base + ".b"));
    } else {
      // one retrieval step: xi' = softmax(beta * xi P^T) P, then projection
      Val<Real> patterns = bind(base + ".patterns");
      Val<Real> scores = tape.scale(tape.matmul(bound.pooled, patterns, /*trans_b=*/true),
                                    hopfield_beta(head, d));
      Val<Real> attn = tape.softmax(scores, 1);
      Val<Real> retrieved = tape.matmul(attn, patterns, /*trans_b=*/false);
      logits = tape.dense(retrieved, bind(base + ".proj_w"), bind(base + ".proj_b"));
    }
    bound.head_logits.push_back(logits);
  }

  if (cfg_.ensemble) {
    bound.importance = tape.softmax(bind("importance"), 0);
    Val<Real> combined;
    for (size_t h = 0; h < bound.head_logits.size(); ++h) {
      Val<Real> weighted =
          tape.mul_scalar_at(bound.head_logits[h], bound.importance, static_cast<int>(h));
      combined = h == 0 ? weighted : tape.add(combined, weighted);
    }
    bound.output = combined;
  } else {
    bound.output = bound.head_logits[0];
  }
  return bound;
}

Tensor<Real> Network::logits(const Tensor<Real>& input) const {
  Tape<Real> tape;
  return tape.value(forward(tape, input).output);
}

std::vector<Tensor<Real>> Network::stage_features_eval(const Tensor<Real>& input,
                                                       int upto_stage) const {
  Tape<Real> tape;
  Bound b = forward(tape, input, upto_stage, /*with_heads=*/false);
  std::vector<Tensor<Real>> out;
  out.reserve(b.stage_features.size());
  for (auto v : b.stage_features) out.push_back(tape.value(v));
  return out;
}

Tensor<Real> Network::pooled_eval(const Tensor<Real>& input) const {
  Tape<Real> tape;
  return tape.value(forward(tape, input).pooled);
}

Tensor<Real> Network::head_logits_from_pooled(int head, const Tensor<Real>& pooled) const {
  if (head < 0 || head >= static_cast<int>(cfg_.heads.size())) {
    fail_data("network: head index out of range");
  }
  Tape<Real> tape;
  Val<Real> p = tape.leaf(pooled, false);
  const HeadCfg& hc = cfg_.heads[static_cast<size_t>(head)];
  std::string base = "head" + std::to_string(head);
  Val<Real> logits;
  if (hc.kind == HeadKind::Linear) {
    logits = tape.dense(p, tape.leaf(param(base + ".w")), tape.leaf(param(base + ".b")));
  } else {
    Val<Real> patterns = tape.leaf(param(base + ".patterns"));
    Val<Real> scores =
        tape.scale(tape.matmul(p, patterns, true), hopfield_beta(hc, pooled_dim()));
    Val<Real> attn = tape.softmax(scores, 1);
    Val<Real> retrieved = tape.matmul(attn, patterns, false);
    logits = tape.dense(retrieved, tape.leaf(param(base + ".proj_w")),
                        tape.leaf(param(base + ".proj_b")));
  }
  return tape.value(logits);
}

std::vector<double> Network::head_importance() const {
  if (!cfg_.ensemble) return {1.0};
  const Tensor<Real>& w = param("importance");
  double mx = w.v[0];
  for (Real x : w.v) mx = std::max(mx, static_cast<double>(x));
  double denom = 0;
  std::vector<double> q(w.v.size());
  for (size_t i = 0; i < w.v.size(); ++i) {
    q[i] = std::exp(static_cast<double>(w.v[i]) - mx);
    denom += q[i];
  }
  for (double& x : q) x /= denom;
  return q;
}

int64_t Network::parameter_count() const {
  int64_t total = 0;
  for (const auto& [name, t] : params_) {
    if (name == "importance") continue;
    total += t.numel();
  }
  return total;
}

int64_t Network::head_parameter_count(int head) const {
  int64_t total = 0;
  for (const std::string& n : head_param_names(head)) total += param(n).numel();
  return total;
}

}  // namespace smld::nn
