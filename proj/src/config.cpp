#include "protochaos/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace protochaos {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + std::string(key) + "' has invalid value '" +
                          std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError("config key '" + std::string(key) +
                        "' expects true/false, got '" + std::string(value) + "'");
}

}  // namespace

std::vector<double> parse_lambda_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) {
      out.push_back(parse_number<double>("sweep.lambdas", piece));
    }
    start = end + 1;
  }
  if (out.empty()) {
    throw ValidationError("sweep.lambdas needs at least one value");
  }
  return out;
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "data.path") {
    config.source = DataSource::File;
    config.saw_file_source = true;
    config.data_path = std::string(value);
  } else if (key == "data.classes") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.num_classes = parse_number<int>(key, value);
  } else if (key == "data.per_class") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.per_class = parse_number<int>(key, value);
  } else if (key == "data.dim") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.dim = parse_number<int>(key, value);
  } else if (key == "data.separation") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.separation = parse_number<double>(key, value);
  } else if (key == "data.sigma") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.sigma = parse_number<double>(key, value);
  } else if (key == "data.outlier_fraction") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.outlier_fraction = parse_number<double>(key, value);
  } else if (key == "data.outlier_scale") {
    config.source = DataSource::Synthetic;
    config.saw_synthetic_source = true;
    config.synth.outlier_scale = parse_number<double>(key, value);
  } else if (key == "data.seed") {
    config.data_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "split.train") {
    config.split_fractions[0] = parse_number<double>(key, value);
  } else if (key == "split.val") {
    config.split_fractions[1] = parse_number<double>(key, value);
  } else if (key == "split.test") {
    config.split_fractions[2] = parse_number<double>(key, value);
  } else if (key == "split.seed") {
    config.split_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "episode.n_way") {
    config.episode.n_way = parse_number<int>(key, value);
  } else if (key == "episode.k_shot") {
    config.episode.k_shot = parse_number<int>(key, value);
  } else if (key == "episode.q_count") {
    config.episode.q_count = parse_number<int>(key, value);
  } else if (key == "episode.meta_batch") {
    config.meta_batch = parse_number<int>(key, value);
  } else if (key == "chaos.r") {
    config.chaos.r = parse_number<double>(key, value);
  } else if (key == "chaos.warmup") {
    config.chaos.warmup_steps = parse_number<int>(key, value);
  } else if (key == "chaos.lambda") {
    config.chaos.lambda = parse_number<double>(key, value);
  } else if (key == "chaos.enabled") {
    config.chaos.enabled = parse_bool(key, value);
  } else if (key == "model.proj_dim") {
    config.proj_dim = parse_number<int>(key, value);
  } else if (key == "model.bias") {
    config.bias = parse_bool(key, value);
  } else if (key == "train.episodes") {
    config.episodes = parse_number<int>(key, value);
  } else if (key == "train.eval_every") {
    config.eval_every = parse_number<int>(key, value);
  } else if (key == "train.eval_episodes") {
    config.eval_episodes = parse_number<int>(key, value);
  } else if (key == "train.optimizer") {
    if (value == "adam") {
      config.optimizer = OptimizerKind::Adam;
    } else if (value == "sgd-momentum") {
      config.optimizer = OptimizerKind::SgdMomentum;
    } else {
      throw ValidationError("config key 'train.optimizer' expects adam or sgd-momentum");
    }
  } else if (key == "train.lr") {
    config.learning_rate = parse_number<double>(key, value);
  } else if (key == "train.momentum") {
    config.momentum = parse_number<double>(key, value);
  } else if (key == "train.beta1") {
    config.beta1 = parse_number<double>(key, value);
  } else if (key == "train.beta2") {
    config.beta2 = parse_number<double>(key, value);
  } else if (key == "train.adam_eps") {
    config.adam_eps = parse_number<double>(key, value);
  } else if (key == "train.seed") {
    config.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "sweep.lambdas") {
    config.sweep_lambdas = parse_lambda_list(value);
  } else {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file: " + path.string());
  }
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    try {
      apply_config_value(config, stripped.substr(0, eq), stripped.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void RunConfig::validate() const {
  if (source == DataSource::Unset) {
    throw ValidationError("no data source: set data.path or the data.* synthetic keys");
  }
  if (saw_file_source && saw_synthetic_source) {
    throw ValidationError(
        "exactly one data source allowed: data.path conflicts with synthetic data.* keys");
  }
  if (source == DataSource::Synthetic) synth.validate();
  to_train_config().validate();
}

TrainConfig RunConfig::to_train_config() const {
  TrainConfig tc;
  tc.episodes = episodes;
  tc.meta_batch = meta_batch;
  tc.eval_every = eval_every;
  tc.eval_episodes = eval_episodes;
  tc.optimizer = optimizer;
  tc.learning_rate = learning_rate;
  tc.momentum = momentum;
  tc.beta1 = beta1;
  tc.beta2 = beta2;
  tc.adam_eps = adam_eps;
  tc.seed = seed;
  tc.spec = episode;
  tc.chaos = chaos;
  tc.proj_dim = proj_dim;
  tc.bias = bias;
  return tc;
}

Dataset RunConfig::resolve_dataset() const {
  if (source == DataSource::File) {
    return load_embeddings(data_path);
  }
  if (source == DataSource::Synthetic) {
    return generate_synthetic(synth, data_seed);
  }
  throw ValidationError("no data source: set data.path or the data.* synthetic keys");
}

std::vector<std::pair<std::string, std::string>> RunConfig::manifest_entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  if (source == DataSource::File) {
    out.emplace_back("data.path", data_path.string());
  } else {
    out.emplace_back("data.classes", std::to_string(synth.num_classes));
    out.emplace_back("data.per_class", std::to_string(synth.per_class));
    out.emplace_back("data.dim", std::to_string(synth.dim));
    out.emplace_back("data.separation", num(synth.separation));
    out.emplace_back("data.sigma", num(synth.sigma));
    out.emplace_back("data.outlier_fraction", num(synth.outlier_fraction));
    out.emplace_back("data.outlier_scale", num(synth.outlier_scale));
    out.emplace_back("data.seed", std::to_string(data_seed));
  }
  out.emplace_back("split.train", num(split_fractions[0]));
  out.emplace_back("split.val", num(split_fractions[1]));
  out.emplace_back("split.test", num(split_fractions[2]));
  out.emplace_back("split.seed", std::to_string(split_seed));
  std::string lambdas;
  for (std::size_t i = 0; i < sweep_lambdas.size(); ++i) {
    if (i > 0) lambdas += ',';
    lambdas += num(sweep_lambdas[i]);
  }
  out.emplace_back("sweep.lambdas", lambdas);
  return out;
}

}  // namespace protochaos
