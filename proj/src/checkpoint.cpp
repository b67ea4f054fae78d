// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xreid/metric_net.hpp"

namespace xreid {

namespace {

void put_double(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  ModelParams copy = params;  // views need mutable storage
  auto views = param_views(copy, true);
  std::ostringstream os;
  const ModelConfig& c = params.cfg;
  os << "{\n\"schema\": 1,\n\"config\": {";
  os << "\"radar_in\": " << c.radar_in << ", \"sig_in\": " << c.sig_in << ", \"mlp_widths\": [";
  for (std::size_t i = 0; i < c.mlp_widths.size(); ++i)
    os << (i ? ", " : "") << c.mlp_widths[i];
  os << "], \"hidden\": " << c.hidden << ", \"lstm_layers\": " << c.lstm_layers
     << ", \"radar_point_cap\": " << c.radar_point_cap
     << ", \"sig_point_cap\": " << c.sig_point_cap
     << ", \"use_attention\": " << (c.use_attention ? "true" : "false")
     << ", \"share_lstm\": " << (c.share_lstm ? "true" : "false") << ", \"bn_eps\": ";
  put_double(os, c.bn_eps);
  os << ", \"bn_momentum\": ";
  put_double(os, c.bn_momentum);
  os << "},\n\"tensors\": {\n";
  for (std::size_t i = 0; i < views.size(); ++i) {
    const TensorView& t = views[i];
    os << "\"" << t.name << "\": {\"shape\": [" << t.rows << ", " << t.cols << "], \"data\": [";
    for (int k = 0; k < t.size(); ++k) {
      if (k) os << ", ";
      put_double(os, t.data[k]);
    }
    os << "]}" << (i + 1 < views.size() ? ",\n" : "\n");
  }
  os << "}\n}\n";
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Err::IoError, "cannot open " + path + " for writing");
  f << os.str();
  require(f.good(), Err::IoError, "write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Err::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    fail(Err::IoError, std::string("checkpoint parse error: ") + e.what());
  }
  require(j.value("schema", 0) == 1, Err::ConfigError, "unsupported checkpoint schema");
  const auto& jc = j.at("config");
  ModelConfig c;
  c.radar_in = jc.at("radar_in").get<int>();
  c.sig_in = jc.at("sig_in").get<int>();
  c.mlp_widths = jc.at("mlp_widths").get<std::vector<int>>();
  c.hidden = jc.at("hidden").get<int>();
  c.lstm_layers = jc.at("lstm_layers").get<int>();
  c.radar_point_cap = jc.at("radar_point_cap").get<int>();
  c.sig_point_cap = jc.at("sig_point_cap").get<int>();
  c.use_attention = jc.at("use_attention").get<bool>();
  c.share_lstm = jc.at("share_lstm").get<bool>();
  c.bn_eps = jc.at("bn_eps").get<double>();
  c.bn_momentum = jc.at("bn_momentum").get<double>();

  ModelParams params = init_params(c, 0);
  auto views = param_views(params, true);
  const auto& jt = j.at("tensors");
  for (TensorView& t : views) {
    require(jt.contains(t.name), Err::ShapeMismatch, "checkpoint missing tensor " + t.name);
    const auto& e = jt.at(t.name);
    const auto& shape = e.at("shape");
    require(shape.size() == 2 && shape[0].get<int>() == t.rows && shape[1].get<int>() == t.cols,
            Err::ShapeMismatch, "bad shape for tensor " + t.name);
    const auto& data = e.at("data");
    require(static_cast<int>(data.size()) == t.size(), Err::ShapeMismatch,
            "bad element count for tensor " + t.name);
    for (int k = 0; k < t.size(); ++k) t.data[k] = data[k].get<double>();
  }
  require(static_cast<std::size_t>(jt.size()) == views.size(), Err::ShapeMismatch,
          "checkpoint has unexpected extra tensors");
  return params;
}

}  // namespace xreid
