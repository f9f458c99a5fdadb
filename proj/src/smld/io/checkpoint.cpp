#include "smld/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "smld/core/error.hpp"

namespace smld::io {

namespace {

constexpr char kMagic[5] = {'S', 'M', 'L', 'D', '1'};
constexpr uint32_t kVersion = 1;

void store_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void store_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t load_u32(const unsigned char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

uint64_t load_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

template <typename T>
void append_values_le(std::string& payload, const std::vector<T>& values) {
  using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
  for (T x : values) {
    Bits bits;
    std::memcpy(&bits, &x, sizeof(T));
    for (size_t i = 0; i < sizeof(T); ++i) {
      payload.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
  }
}

template <typename T>
std::vector<T> read_values_le(const unsigned char* p, int64_t count) {
  using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
  std::vector<T> out(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    Bits bits = 0;
    for (size_t b = 0; b < sizeof(T); ++b) {
      bits |= static_cast<Bits>(p[static_cast<size_t>(i) * sizeof(T) + b]) << (8 * b);
    }
    std::memcpy(&out[static_cast<size_t>(i)], &bits, sizeof(T));
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json manifest = ckpt.meta;
  manifest["format_version"] = kVersion;
  nlohmann::json index = nlohmann::json::array();
  std::string payload;
  auto add_index = [&](const std::string& name, const std::vector<int>& shape,
                       const char* dtype, uint64_t offset) {
    index.push_back({{"name", name}, {"shape", shape}, {"dtype", dtype}, {"offset", offset}});
  };
  for (const auto& [name, t] : ckpt.tensors_f32) {
    add_index(name, t.shape, "f32", payload.size());
    append_values_le(payload, t.v);
  }
  for (const auto& [name, t] : ckpt.tensors_f64) {
    add_index(name, t.shape, "f64", payload.size());
    append_values_le(payload, t.v);
  }
  manifest["tensors"] = std::move(index);

  std::string manifest_str = manifest.dump();
  std::string out;
  out.append(kMagic, sizeof kMagic);
  store_u32(out, kVersion);
  store_u64(out, manifest_str.size());
  out += manifest_str;
  out += payload;

  std::ofstream f(path, std::ios::binary);
  if (!f) fail_data("checkpoint: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail_data("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_data("checkpoint: cannot open '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (blob.size() < sizeof kMagic + 12 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    fail_data("checkpoint: '" + path + "' is not an SMLD1 file");
  }
  const unsigned char* p = reinterpret_cast<const unsigned char*>(blob.data());
  uint32_t version = load_u32(p + sizeof kMagic);
  if (version != kVersion) {
    fail_data("checkpoint: unsupported format version " + std::to_string(version));
  }
  uint64_t manifest_len = load_u64(p + sizeof kMagic + 4);
  size_t manifest_off = sizeof kMagic + 12;
  if (manifest_off + manifest_len > blob.size()) {
    fail_data("checkpoint: manifest is truncated");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(blob.begin() + static_cast<std::ptrdiff_t>(manifest_off),
                                     blob.begin() + static_cast<std::ptrdiff_t>(manifest_off + manifest_len));
  } catch (const nlohmann::json::exception& e) {
    fail_data(std::string("checkpoint: bad manifest: ") + e.what());
  }
  const size_t payload_off = manifest_off + manifest_len;
  const unsigned char* payload = p + payload_off;
  const uint64_t payload_size = blob.size() - payload_off;

  Checkpoint ckpt;
  for (const auto& entry : manifest.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    std::string dtype = entry.at("dtype").get<std::string>();
    uint64_t offset = entry.at("offset").get<uint64_t>();
    int64_t numel = Tensor<float>::checked_numel(shape);
    size_t width = dtype == "f64" ? 8 : 4;
    if (offset + static_cast<uint64_t>(numel) * width > payload_size) {
      fail_data("checkpoint: tensor '" + name + "' overruns the payload");
    }
    if (dtype == "f32") {
      ckpt.tensors_f32.emplace(name,
                               Tensor<float>::from(shape, read_values_le<float>(payload + offset, numel)));
    } else if (dtype == "f64") {
      ckpt.tensors_f64.emplace(name,
                               Tensor<double>::from(shape, read_values_le<double>(payload + offset, numel)));
    } else {
      fail_data("checkpoint: unknown dtype '" + dtype + "'");
    }
  }
  manifest.erase("tensors");
  ckpt.meta = std::move(manifest);
  return ckpt;
}

nlohmann::json network_cfg_to_json(const nn::NetworkCfg& cfg) {
  nlohmann::json stages = nlohmann::json::array();
  for (const nn::StageCfg& st : cfg.stages) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const nn::ConvBlockCfg& b : st.blocks) {
      blocks.push_back({{"out_channels", b.out_channels}, {"kernel", b.kernel}, {"stride", b.stride}});
    }
    stages.push_back({{"blocks", blocks}});
  }
  nlohmann::json heads = nlohmann::json::array();
  for (const nn::HeadCfg& h : cfg.heads) {
    heads.push_back({{"kind", h.kind == nn::HeadKind::Linear ? "linear" : "hopfield"},
                     {"patterns", h.patterns},
                     {"beta", h.beta}});
  }
  return {{"in_channels", cfg.in_channels},
          {"in_len", cfg.in_len},
          {"n_classes", cfg.n_classes},
          {"activation", cfg.activation == nn::Activation::Silu
                             ? "silu"
                             : (cfg.activation == nn::Activation::Relu ? "relu" : "none")},
          {"stages", stages},
          {"heads", heads},
          {"ensemble", cfg.ensemble}};
}

nn::NetworkCfg network_cfg_from_json(const nlohmann::json& j) {
  nn::NetworkCfg cfg;
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.in_len = j.at("in_len").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  std::string act = j.at("activation").get<std::string>();
  cfg.activation = act == "silu" ? nn::Activation::Silu
                                 : (act == "relu" ? nn::Activation::Relu : nn::Activation::None);
  for (const auto& st : j.at("stages")) {
    nn::StageCfg stage;
    for (const auto& b : st.at("blocks")) {
      stage.blocks.push_back({b.at("out_channels").get<int>(), b.at("kernel").get<int>(),
                              b.at("stride").get<int>()});
    }
    cfg.stages.push_back(std::move(stage));
  }
  for (const auto& h : j.at("heads")) {
    nn::HeadCfg head;
    head.kind = h.at("kind").get<std::string>() == "hopfield" ? nn::HeadKind::Hopfield
                                                              : nn::HeadKind::Linear;
    head.patterns = h.at("patterns").get<int>();
    head.beta = h.at("beta").get<double>();
    cfg.heads.push_back(head);
  }
  cfg.ensemble = j.at("ensemble").get<bool>();
  return cfg;
}

nlohmann::json scaler_to_json(const data::ScalerParams& params) {
  nlohmann::json j;
  switch (params.kind) {
    case data::ScalerKind::None: j["kind"] = "none"; break;
    case data::ScalerKind::MinMax: j["kind"] = "minmax"; break;
    case data::ScalerKind::Robust: j["kind"] = "robust"; break;
  }
  j["minmax_centered"] = params.minmax_centered;
  nlohmann::json robust = nlohmann::json::array();
  for (const data::RobustChannel& c : params.robust) {
    robust.push_back({{"q1", c.q1},
                      {"q3", c.q3},
                      {"iqr", c.iqr},
                      {"lower", c.lower},
                      {"upper", c.upper},
                      {"degenerate", c.degenerate}});
  }
  j["robust"] = robust;
  nlohmann::json minmax = nlohmann::json::array();
  for (const data::MinMaxChannel& c : params.minmax) {
    minmax.push_back({{"min", c.min}, {"max", c.max}});
  }
  j["minmax"] = minmax;
  return j;
}

data::ScalerParams scaler_from_json(const nlohmann::json& j) {
  data::ScalerParams params;
  std::string kind = j.at("kind").get<std::string>();
  params.kind = kind == "none" ? data::ScalerKind::None
                               : (kind == "minmax" ? data::ScalerKind::MinMax
                                                   : data::ScalerKind::Robust);
  params.minmax_centered = j.at("minmax_centered").get<bool>();
  for (const auto& c : j.at("robust")) {
    params.robust.push_back({c.at("q1").get<double>(), c.at("q3").get<double>(),
                             c.at("iqr").get<double>(), c.at("lower").get<double>(),
                             c.at("upper").get<double>(), c.at("degenerate").get<bool>()});
  }
  for (const auto& c : j.at("minmax")) {
    params.minmax.push_back({c.at("min").get<double>(), c.at("max").get<double>()});
  }
  return params;
}

void save_model(const std::string& path, const nn::Network& net,
                const data::ScalerParams& scaler, const data::DatasetMeta& dataset,
                int window_hop, const nlohmann::json& metrics) {
  Checkpoint ckpt;
  ckpt.meta["model"] = network_cfg_to_json(net.cfg());
  ckpt.meta["scaler"] = scaler_to_json(scaler);
  ckpt.meta["dataset"] = {{"channels", dataset.channels},
                          {"window_len", dataset.window_len},
                          {"n_classes", dataset.n_classes},
                          {"window_hop", window_hop}};
  ckpt.meta["metrics"] = metrics;
  for (const std::string& name : net.param_names()) {
    ckpt.tensors_f32.emplace(name, net.param(name));
  }
  save_checkpoint(path, ckpt);
}

ModelBundle load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  nn::NetworkCfg cfg;
  try {
    cfg = network_cfg_from_json(ckpt.meta.at("model"));
  } catch (const nlohmann::json::exception& e) {
    fail_data("checkpoint: '" + path + "' has no usable model section: " + e.what());
  }
  ModelBundle bundle{nn::Network(cfg), {}, {}, 0, {}};
  for (const std::string& name : bundle.net.param_names()) {
    auto it = ckpt.tensors_f32.find(name);
    if (it == ckpt.tensors_f32.end()) {
      fail_data("checkpoint: missing tensor '" + name + "'");
    }
    if (it->second.shape != bundle.net.param(name).shape) {
      fail_data("checkpoint: tensor '" + name + "' has shape " + it->second.shape_str() +
                ", model expects " + bundle.net.param(name).shape_str());
    }
    bundle.net.param(name) = it->second;
  }
  try {
    bundle.scaler = scaler_from_json(ckpt.meta.at("scaler"));
    const auto& d = ckpt.meta.at("dataset");
    bundle.dataset.channels = d.at("channels").get<int>();
    bundle.dataset.window_len = d.at("window_len").get<int>();
    bundle.dataset.n_classes = d.at("n_classes").get<int>();
    bundle.window_hop = d.at("window_hop").get<int>();
    bundle.metrics = ckpt.meta.value("metrics", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail_data(std::string("checkpoint: incomplete manifest: ") + e.what());
  }
  return bundle;
}

}  // namespace smld::io
