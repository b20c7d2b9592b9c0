#include "vitk/run_config.hpp"

#include <fstream>
#include <set>

#include "binary_io.hpp"
#include "vitk/errors.hpp"

namespace vitk {
namespace {

using nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void merge(json& into, const json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"grid_h", c.grid_h},
          {"grid_w", c.grid_w},
          {"patch_size", c.patch_size},
          {"embed_dim", c.embed_dim},
          {"depth", c.depth},
          {"heads", c.heads},
          {"latent_dim", c.latent_dim},
          {"harmonic_freqs", c.harmonic_freqs},
          {"refine_hidden", c.refine_hidden},
          {"forcing_hidden", c.forcing_hidden},
          {"generator_mode", to_string(c.generator_mode)},
          {"forcing_frequency", c.forcing_frequency}};
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"peak_lr", c.peak_lr},
          {"weight_decay", c.weight_decay},
          {"warmup_epochs", c.warmup_epochs},
          {"seed", c.seed},
          {"rollout_mode", to_string(c.rollout_mode)},
          {"generator_lr_scale", c.generator_lr_scale},
          {"deterministic", c.deterministic}};
}

json to_json(const LossWeights& w) {
  return {{"w_u1", w.w_u1}, {"w_u2", w.w_u2}, {"w_p", w.w_p}, {"w_phi", w.w_phi}, {"lambda_lin", w.lambda_lin}};
}

json to_json(const LossOptions& o) {
  return {{"huber_pressure", o.huber_pressure},
          {"huber_delta", o.huber_delta},
          {"h1_weight", o.h1_weight},
          {"linearity_span", o.linearity_span}};
}

json to_json(const RunConfig& c) {
  json j = to_json(c.model);
  merge(j, to_json(c.train));
  merge(j, to_json(c.weights));
  merge(j, to_json(c.loss));
  j["dataset"] = c.dataset;
  j["out_dir"] = c.out_dir;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  read(j, "grid_h", c.grid_h);
  read(j, "grid_w", c.grid_w);
  read(j, "patch_size", c.patch_size);
  read(j, "embed_dim", c.embed_dim);
  read(j, "depth", c.depth);
  read(j, "heads", c.heads);
  read(j, "latent_dim", c.latent_dim);
  read(j, "harmonic_freqs", c.harmonic_freqs);
  read(j, "refine_hidden", c.refine_hidden);
  read(j, "forcing_hidden", c.forcing_hidden);
  std::string mode = to_string(c.generator_mode);
  read(j, "generator_mode", mode);
  c.generator_mode = parse_generator_mode(mode);
  read(j, "forcing_frequency", c.forcing_frequency);
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  read(j, "epochs", c.epochs);
  read(j, "peak_lr", c.peak_lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "warmup_epochs", c.warmup_epochs);
  read(j, "seed", c.seed);
  std::string mode = to_string(c.rollout_mode);
  read(j, "rollout_mode", mode);
  c.rollout_mode = parse_rollout_mode(mode);
  read(j, "generator_lr_scale", c.generator_lr_scale);
  read(j, "deterministic", c.deterministic);
  return c;
}

LossWeights loss_weights_from_json(const json& j) {
  LossWeights w;
  read(j, "w_u1", w.w_u1);
  read(j, "w_u2", w.w_u2);
  read(j, "w_p", w.w_p);
  read(j, "w_phi", w.w_phi);
  read(j, "lambda_lin", w.lambda_lin);
  return w;
}

LossOptions loss_options_from_json(const json& j) {
  LossOptions o;
  read(j, "huber_pressure", o.huber_pressure);
  read(j, "huber_delta", o.huber_delta);
  read(j, "h1_weight", o.h1_weight);
  read(j, "linearity_span", o.linearity_span);
  return o;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  const json defaults = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  }
  c.model = model_config_from_json(j);
  c.train = train_config_from_json(j);
  c.weights = loss_weights_from_json(j);
  c.loss = loss_options_from_json(j);
  read(j, "dataset", c.dataset);
  read(j, "out_dir", c.out_dir);
  return c;
}

void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
  detail::atomic_write(path, to_json(c).dump(2) + "\n");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  try {
    return run_config_from_json(json::parse(is));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace vitk
