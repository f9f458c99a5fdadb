#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "smld/core/tensor.hpp"
#include "smld/data/scaler.hpp"
#include "smld/nn/model.hpp"

namespace smld::io {

// On-disk layout:
//   bytes 0..4   magic "SMLD1"
//   u32 LE       format version (1)
//   u64 LE       manifest byte length
//   ...          manifest JSON (UTF-8)
//   ...          payload: tensor values, little-endian IEEE-754
// The manifest carries a tensor index (name/shape/dtype/offset into the
// payload) plus arbitrary metadata sections. Round-trips are bit-exact.
struct Checkpoint {
  nlohmann::json meta;  // everything except the tensor index
  std::map<std::string, Tensor<float>> tensors_f32;
  std::map<std::string, Tensor<double>> tensors_f64;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// ---- model-level helpers ----

nlohmann::json network_cfg_to_json(const nn::NetworkCfg& cfg);
nn::NetworkCfg network_cfg_from_json(const nlohmann::json& j);

nlohmann::json scaler_to_json(const data::ScalerParams& params);
data::ScalerParams scaler_from_json(const nlohmann::json& j);

struct ModelBundle {
  nn::Network net;
  data::ScalerParams scaler;
  data::DatasetMeta dataset;
  int window_hop = 0;
  nlohmann::json metrics;  // snapshot recorded at save time
};

void save_model(const std::string& path, const nn::Network& net,
                const data::ScalerParams& scaler, const data::DatasetMeta& dataset,
                int window_hop, const nlohmann::json& metrics);
ModelBundle load_model(const std::string& path);

}  // namespace smld::io
