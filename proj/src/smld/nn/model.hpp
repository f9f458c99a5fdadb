#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smld/core/tape.hpp"
#include "smld/core/tensor.hpp"

namespace smld::nn {

using Real = float;

enum class Activation { Silu, Relu, None };
enum class HeadKind { Linear, Hopfield };

struct ConvBlockCfg {
  int out_channels = 0;
  int kernel = 5;
  int stride = 1;
};

// One backbone stage: a chain of conv+bias+activation blocks. The last
// block's out_channels is the stage boundary width C_i.
struct StageCfg {
  std::vector<ConvBlockCfg> blocks;

  int out_channels() const { return blocks.empty() ? 0 : blocks.back().out_channels; }
};

struct HeadCfg {
  HeadKind kind = HeadKind::Linear;
  int patterns = 8;    // Hopfield only: stored pattern count m
  double beta = 0.0;   // Hopfield only: <= 0 selects 1/sqrt(D)
};

struct NetworkCfg {
  int in_channels = 3;
  int in_len = 250;
  int n_classes = 6;
  Activation activation = Activation::Silu;
  std::vector<StageCfg> stages;
  std::vector<HeadCfg> heads;
  // Pre-deployment networks carry learnable head-importance weights; after
  // auto-search the surviving head is wired directly and no weights remain.
  bool ensemble = true;
};

struct StageShape {
  int channels = 0;
  int length = 0;

  bool operator==(const StageShape&) const = default;
};

inline int pad_for(int kernel) { return (kernel - 1) / 2; }
int conv_out_len(int in_len, int kernel, int stride, int pad);

// Boundary shapes (C_i, L_i) per stage; validates the whole chain.
std::vector<StageShape> stage_shapes(const NetworkCfg& cfg);

void validate_network_cfg(const NetworkCfg& cfg);

double hopfield_beta(const HeadCfg& head, int pooled_dim);

class Network {
 public:
  explicit Network(NetworkCfg cfg);

  const NetworkCfg& cfg() const { return cfg_; }
  int pooled_dim() const;

  void init_params(uint64_t seed);

  const std::vector<std::string>& param_names() const { return names_; }
  bool has_param(const std::string& name) const { return params_.count(name) > 0; }
  Tensor<Real>& param(const std::string& name);
  const Tensor<Real>& param(const std::string& name) const;

  // Parameter names belonging to backbone stages [0, upto).
  std::vector<std::string> stage_param_names(int upto) const;
  std::vector<std::string> head_param_names(int head) const;

  struct Bound {
    std::map<std::string, Val<Real>> params;
    std::vector<Val<Real>> stage_features;
    Val<Real> pooled;
    std::vector<Val<Real>> head_logits;
    Val<Real> importance;  // softmax over the importance weights; ensembles only
    Val<Real> output;
  };

  // Builds the forward graph on `tape`. upto_stage <= 0 runs every stage;
  // with_heads requires the full backbone. trainable controls whether the
  // bound parameter leaves require gradients.
  Bound forward(Tape<Real>& tape, const Tensor<Real>& input, int upto_stage = 0,
                bool with_heads = true, bool trainable = false) const;

  // Inference conveniences on a throwaway tape.
  Tensor<Real> logits(const Tensor<Real>& input) const;
  std::vector<Tensor<Real>> stage_features_eval(const Tensor<Real>& input, int upto_stage) const;
  Tensor<Real> pooled_eval(const Tensor<Real>& input) const;
  Tensor<Real> head_logits_from_pooled(int head, const Tensor<Real>& pooled) const;

  // softmax over the learnable importance weights; {1} for a single wired head.
  std::vector<double> head_importance() const;

  // Deployable trainable scalars: backbone + heads. Importance weights are
  // training-time machinery discarded by auto-search and are not counted.
  int64_t parameter_count() const;
  int64_t head_parameter_count(int head) const;

 private:
  NetworkCfg cfg_;
  std::vector<std::string> names_;
  std::map<std::string, Tensor<Real>> params_;

  void register_params();
  Val<Real> activation(Tape<Real>& tape, Val<Real> x) const;
};

}  // namespace smld::nn
