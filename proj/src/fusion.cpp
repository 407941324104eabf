#include "pseudorgbd/fusion.hpp"

#include <fstream>
#include <unordered_map>

namespace pseudorgbd {

using nlohmann::json;

std::string to_string(Optimizer optimizer) { return optimizer == Optimizer::kSgd ? "sgd" : "momentum"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::kSgd;
  if (s == "momentum") return Optimizer::kMomentum;
  throw ContractError("unknown optimizer '" + s + "' (expected sgd or momentum)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ContractError("train config: batch_size must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw ContractError("train config: learning_rate must be positive");
  }
  if (!(momentum >= 0 && momentum < 1)) throw ContractError("train config: momentum must lie in [0, 1)");
  if (!(init_gain > 0)) throw ContractError("train config: init_gain must be positive");
  for (int h : hidden) {
    if (h < 1) throw ContractError("train config: hidden layer sizes must be positive");
  }
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"seed", seed},
              {"optimizer", pseudorgbd::to_string(optimizer)},
              {"momentum", momentum},
              {"hidden", hidden},
              {"init_gain", init_gain}};
}

std::vector<Prediction> naive_average(const std::vector<Prediction>& a, const std::vector<Prediction>& b) {
  if (a.size() != b.size()) throw ContractError("naive_average: prediction counts differ");
  std::vector<Prediction> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sample_id != b[i].sample_id) {
      throw ContractError("naive_average: sample order differs at '" + a[i].sample_id + "'");
    }
    if (a[i].class_probabilities.size() != b[i].class_probabilities.size()) {
      throw ContractError("naive_average: class spaces differ");
    }
    out[i].sample_id = a[i].sample_id;
    out[i].class_probabilities = 0.5 * (a[i].class_probabilities + b[i].class_probabilities);
    out[i].argmax_class = argmax(out[i].class_probabilities);
  }
  return out;
}

std::vector<int> labels_for(const std::vector<std::string>& ids, const std::vector<LabeledSample>& labels) {
  std::unordered_map<std::string, int> lookup;
  for (const auto& l : labels) lookup[l.sample_id] = l.label;
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw DataError("no label for sample '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

namespace {

std::string weight_file(std::size_t l) { return "layer" + std::to_string(l) + ".weight.ten"; }
std::string bias_file(std::size_t l) { return "layer" + std::to_string(l) + ".bias.ten"; }

}  // namespace

void save_model(const fs::path& dir, const MlpModel<float>& model, const json& header_extra) {
  model.validate();
  fs::create_directories(dir);
  json header = header_extra.is_object() ? header_extra : json::object();
  header["layer_dims"] = model.layer_dims;
  header["activation"] = "relu";
  header["output"] = "softmax";
  json files = json::array();
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    write_tensor(dir / weight_file(l), tensor_from_matrix<float>(model.weights[l]));
    write_tensor(dir / bias_file(l), tensor_from_vector(model.biases[l]));
    files.push_back({{"weight", weight_file(l)}, {"bias", bias_file(l)}});
  }
  header["tensors"] = files;
  std::ofstream out(dir / "model.json");
  out << header.dump(2) << "\n";
  if (!out) throw Error("cannot write '" + (dir / "model.json").string() + "'");
}

json load_model_header(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw DataError("cannot open '" + (dir / "model.json").string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError((dir / "model.json").string() + ": invalid JSON: " + e.what());
  }
}

MlpModel<float> load_model(const fs::path& dir) {
  const json header = load_model_header(dir);
  std::vector<int> dims;
  try {
    dims = header.at("layer_dims").get<std::vector<int>>();
    if (header.at("activation").get<std::string>() != "relu") throw DataError("unsupported activation");
  } catch (const json::exception& e) {
    throw DataError((dir / "model.json").string() + ": " + e.what());
  }
  MlpModel<float> model = MlpModel<float>::zeros(dims);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Tensor w = read_tensor(dir / weight_file(l));
    const Tensor b = read_tensor(dir / bias_file(l));
    const std::vector<std::uint32_t> wdims{static_cast<std::uint32_t>(dims[l + 1]),
                                           static_cast<std::uint32_t>(dims[l])};
    if (w.dims != wdims || b.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(dims[l + 1])}) {
      throw DataError(dir.string() + ": layer " + std::to_string(l) + " tensor shape does not match layer_dims");
    }
    model.weights[l] = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.values.data(), dims[l + 1], dims[l]);
    model.biases[l] = Eigen::Map<const Eigen::VectorXf>(b.values.data(), dims[l + 1]);
  }
  model.validate();
  return model;
}

}  // namespace pseudorgbd
