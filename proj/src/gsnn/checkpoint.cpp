#include "gsheaf/gsnn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "gsheaf/error.hpp"
#include "json.hpp"

namespace gsheaf {

using nlohmann::json;

namespace {

json config_json(const ModelConfig& cfg) {
  return json{{"kind", to_string(cfg.kind)},
              {"stalk_dim", cfg.stalk_dim},
              {"hidden", cfg.hidden},
              {"layers", cfg.layers},
              {"map_hidden", cfg.map_hidden},
              {"readout_hidden", cfg.readout_hidden},
              {"samples", cfg.samples},
              {"lr", cfg.lr},
              {"epochs", cfg.epochs},
              {"patience", cfg.patience},
              {"lr_patience", cfg.lr_patience},
              {"lr_factor", cfg.lr_factor},
              {"weight_decay", cfg.weight_decay},
              {"sheaf_decay", cfg.sheaf_decay},
              {"sinkhorn_epsilon", cfg.sinkhorn.epsilon},
              {"sinkhorn_iters", cfg.sinkhorn.iters},
              {"sinkhorn_median_fraction", cfg.sinkhorn.median_fraction},
              {"seed", cfg.seed}};
}

ModelConfig parse_config(const json& j) {
  ModelConfig cfg;
  cfg.kind = model_kind_from_string(j.at("kind").get<std::string>());
  cfg.stalk_dim = j.at("stalk_dim").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.map_hidden = j.at("map_hidden").get<int>();
  cfg.readout_hidden = j.at("readout_hidden").get<int>();
  cfg.samples = j.at("samples").get<int>();
  cfg.lr = j.at("lr").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.lr_patience = j.at("lr_patience").get<int>();
  cfg.lr_factor = j.at("lr_factor").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.sheaf_decay = j.at("sheaf_decay").get<double>();
  cfg.sinkhorn.epsilon = j.at("sinkhorn_epsilon").get<double>();
  cfg.sinkhorn.iters = j.at("sinkhorn_iters").get<int>();
  cfg.sinkhorn.median_fraction = j.at("sinkhorn_median_fraction").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(2); }

ModelConfig config_from_json(const std::string& text) {
  try {
    return parse_config(json::parse(text));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::string& path) {
  json params = json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"sheaf", p.sheaf},
                      {"values", p.value.values()}});
  }
  const json doc{{"config", config_json(model.config())}, {"params", params}};
  std::ofstream out(path);
  if (!out) throw PathError("cannot write " + path);
  out << doc.dump() << '\n';
}

std::unique_ptr<Model> load_checkpoint(const std::string& path, const Dataset& ds) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const json doc = json::parse(buf.str());
    auto model = make_model(parse_config(doc.at("config")), ds);
    const json& params = doc.at("params");
    ad::ParameterSet& set = model->parameters();
    if (static_cast<int>(params.size()) != set.size()) {
      throw SchemaError("checkpoint parameter count does not match the model");
    }
    for (const json& p : params) {
      const int i = set.find(p.at("name").get<std::string>());
      if (i < 0) throw SchemaError("unknown checkpoint parameter " + p.at("name").get<std::string>());
      const auto shape = p.at("shape").get<std::vector<int>>();
      if (shape != set[i].value.shape()) throw SchemaError("shape mismatch for " + set[i].name);
      set[i].value = ad::Tensor(shape, p.at("values").get<std::vector<double>>());
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace gsheaf
