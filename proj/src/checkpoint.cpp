#include "ne/checkpoint.hpp"

#include <json.hpp>

#include "ne/io.hpp"

namespace ne {

using json = nlohmann::ordered_json;

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model},
              {"d_hidden", c.d_hidden},
              {"n_head", c.n_head},
              {"n_layer", c.n_layer},
              {"k_max", c.k_max},
              {"vocab_size", c.vocab_size},
              {"max_positions", c.max_positions},
              {"dropout", c.dropout},
              {"tie_token_head", c.tie_token_head}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int32_t>();
  c.d_hidden = j.at("d_hidden").get<int32_t>();
  c.n_head = j.at("n_head").get<int32_t>();
  c.n_layer = j.at("n_layer").get<int32_t>();
  c.k_max = j.at("k_max").get<int32_t>();
  c.vocab_size = j.at("vocab_size").get<int32_t>();
  c.max_positions = j.at("max_positions").get<int32_t>();
  c.dropout = j.at("dropout").get<double>();
  c.tie_token_head = j.at("tie_token_head").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelParams& params, uint64_t vocab_hash,
                     int64_t step, double metric) {
  ensure_dir(dir);
  ensure_dir(dir + "/tensors");
  auto refs = named_tensors(const_cast<ModelParams&>(params));
  json tensors = json::array();
  for (const auto& t : refs) {
    tensors.push_back(json{{"name", t.name}, {"dims", t.dims}});
    write_tensor_file(dir + "/tensors/" + t.name + ".bin", t.dims, t.data);
  }
  json manifest{{"format_version", 1},
                {"config", config_to_json(params.cfg)},
                {"vocab_hash", vocab_hash},
                {"step", step},
                {"metric", metric},
                {"tensors", tensors}};
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& dir) {
  const json manifest = json::parse(read_text_file(dir + "/manifest.json"));
  Checkpoint ckpt;
  const ModelConfig cfg = config_from_json(manifest.at("config"));
  ckpt.params = allocate_params<float>(cfg);
  ckpt.vocab_hash = manifest.at("vocab_hash").get<uint64_t>();
  ckpt.step = manifest.at("step").get<int64_t>();
  ckpt.metric = manifest.at("metric").get<double>();
  for (auto& t : named_tensors(ckpt.params)) {
    const TensorData data = read_tensor_file(dir + "/tensors/" + t.name + ".bin");
    if (data.dims != t.dims) fail("checkpoint tensor shape mismatch: " + t.name);
    std::copy(data.values.begin(), data.values.end(), t.data);
  }
  return ckpt;
}

}  // namespace ne
