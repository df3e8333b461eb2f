#include "ne/config.hpp"

#include <functional>
#include <unordered_map>

#include "ne/io.hpp"

namespace ne {

const std::string& Paths::src_for(const std::string& split) const {
  if (split == "train") return train_src;
  if (split == "dev") return dev_src;
  if (split == "test") return test_src;
  fail("unknown split: " + split);
}

const std::string& Paths::tgt_for(const std::string& split) const {
  if (split == "train") return train_tgt;
  if (split == "dev") return dev_tgt;
  if (split == "test") return test_tgt;
  fail("unknown split: " + split);
}

const std::string& Paths::neighbors_for(const std::string& split) const {
  if (split == "train") return neighbors_train;
  if (split == "dev") return neighbors_dev;
  if (split == "test") return neighbors_test;
  fail("unknown split: " + split);
}

const std::string& Paths::external_vectors_for(const std::string& split) const {
  if (split == "train") return external_vectors_train;
  if (split == "dev") return external_vectors_dev;
  if (split == "test") return external_vectors_test;
  fail("unknown split: " + split);
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

class Setter {
 public:
  explicit Setter(RunConfig& cfg) { bind(cfg); }

  void set(const std::string& key, const std::string& raw) {
    auto it = setters_.find(key);
    if (it == setters_.end()) fail("unknown config key: " + key);
    it->second(raw);
  }

 private:
  std::unordered_map<std::string, std::function<void(const std::string&)>> setters_;

  static std::string parse_string(const std::string& raw) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
      return raw.substr(1, raw.size() - 2);
    return raw;
  }
  static int64_t parse_int(const std::string& raw) {
    size_t pos = 0;
    const int64_t v = std::stoll(raw, &pos);
    if (pos != raw.size()) fail("not an integer: " + raw);
    return v;
  }
  static double parse_float(const std::string& raw) {
    size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) fail("not a number: " + raw);
    return v;
  }
  static bool parse_bool(const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    fail("not a boolean: " + raw);
  }

  void str(const std::string& key, std::string& field) {
    setters_[key] = [&field](const std::string& raw) { field = parse_string(raw); };
  }
  template <typename T>
  void integer(const std::string& key, T& field) {
    setters_[key] = [&field](const std::string& raw) { field = static_cast<T>(parse_int(raw)); };
  }
  void real(const std::string& key, double& field) {
    setters_[key] = [&field](const std::string& raw) { field = parse_float(raw); };
  }
  void boolean(const std::string& key, bool& field) {
    setters_[key] = [&field](const std::string& raw) { field = parse_bool(raw); };
  }

  void bind(RunConfig& cfg) {
    integer("seed", cfg.seed);
    integer("vocab_max_size", cfg.vocab_max_size);
    integer("bootstrap_resamples", cfg.bootstrap_resamples);
    str("analyze_mode", cfg.analyze_mode);

    str("paths.train_src", cfg.paths.train_src);
    str("paths.train_tgt", cfg.paths.train_tgt);
    str("paths.dev_src", cfg.paths.dev_src);
    str("paths.dev_tgt", cfg.paths.dev_tgt);
    str("paths.test_src", cfg.paths.test_src);
    str("paths.test_tgt", cfg.paths.test_tgt);
    str("paths.vocab", cfg.paths.vocab);
    str("paths.datastore_dir", cfg.paths.datastore_dir);
    str("paths.checkpoint_dir", cfg.paths.checkpoint_dir);
    str("paths.output_dir", cfg.paths.output_dir);
    str("paths.neighbors_train", cfg.paths.neighbors_train);
    str("paths.neighbors_dev", cfg.paths.neighbors_dev);
    str("paths.neighbors_test", cfg.paths.neighbors_test);
    str("paths.external_vectors_train", cfg.paths.external_vectors_train);
    str("paths.external_vectors_dev", cfg.paths.external_vectors_dev);
    str("paths.external_vectors_test", cfg.paths.external_vectors_test);

    integer("model.d_model", cfg.model.d_model);
    integer("model.d_hidden", cfg.model.d_hidden);
    integer("model.n_head", cfg.model.n_head);
    integer("model.n_layer", cfg.model.n_layer);
    integer("model.k_max", cfg.model.k_max);
    integer("model.max_positions", cfg.model.max_positions);
    real("model.dropout", cfg.model.dropout);
    boolean("model.tie_token_head", cfg.model.tie_token_head);

    integer("train.max_steps", cfg.train.max_steps);
    integer("train.batch_tokens", cfg.train.batch_tokens);
    real("train.lr_peak", cfg.train.lr_peak);
    integer("train.warmup_steps", cfg.train.warmup_steps);
    real("train.adam_beta1", cfg.train.adam_beta1);
    real("train.adam_beta2", cfg.train.adam_beta2);
    real("train.weight_decay", cfg.train.weight_decay);
    real("train.label_smoothing", cfg.train.label_smoothing);
    integer("train.checkpoint_every", cfg.train.checkpoint_every);
    setters_["train.reduction"] = [&cfg](const std::string& raw) {
      const std::string v = parse_string(raw);
      if (v == "mean")
        cfg.train.reduction = LossReduction::Mean;
      else if (v == "sum")
        cfg.train.reduction = LossReduction::Sum;
      else
        fail("train.reduction must be \"mean\" or \"sum\"");
    };
    setters_["train.rollin"] = [&cfg](const std::string& raw) {
      const std::string v = parse_string(raw);
      if (v == "greedy")
        cfg.train.rollin_sample = false;
      else if (v == "sample")
        cfg.train.rollin_sample = true;
      else
        fail("train.rollin must be \"greedy\" or \"sample\"");
    };

    real("oracle.alpha", cfg.train.oracle.alpha);
    real("oracle.beta", cfg.train.oracle.beta);

    integer("infer.max_iterations", cfg.infer.max_iterations);
    real("infer.beta", cfg.infer.beta);

    integer("retrieval.k_candidates", cfg.retrieval.k_candidates);
    integer("retrieval.dim", cfg.retrieval.dim);
  }
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  Setter setter(cfg);
  std::string section;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t end = text.find('\n', start);
    std::string line = text.substr(start, end == std::string::npos ? end : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("config line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    setter.set(section.empty() ? key : section + "." + key, value);
  }
  for (const auto& override_str : overrides) {
    const size_t eq = override_str.find('=');
    if (eq == std::string::npos) fail("override must be key=value: " + override_str);
    setter.set(trim(override_str.substr(0, eq)), trim(override_str.substr(eq + 1)));
  }
  // the clip and length cap are shared with the model; one seed drives every
  // stochastic component
  cfg.infer.k_max = cfg.model.k_max;
  cfg.infer.max_positions = cfg.model.max_positions;
  cfg.train.seed = cfg.seed;
  cfg.train.oracle.rnd_seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  return parse_config_text(read_text_file(path), overrides);
}

}  // namespace ne
