#include "vitk/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "vitk/errors.hpp"

namespace vitk {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd truncated_normal(Eigen::Index rows, Eigen::Index cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v;
    do {
      v = normal(rng);
    } while (std::abs(v) > 2.0 * sigma);
    m.data()[i] = v;
  }
  return m;
}

std::string block_name(int layer, const char* leaf) { return "blocks." + std::to_string(layer) + "." + leaf; }

bool is_encoder_parameter(const std::string& name) {
  return !name.starts_with("decoder.") && !name.starts_with("refine.") && !name.starts_with("koopman.") &&
         !name.starts_with("forcing.");
}

}  // namespace

std::string to_string(GeneratorMode mode) {
  switch (mode) {
    case GeneratorMode::Dissipative: return "dissipative";
    case GeneratorMode::Conservative: return "conservative";
    case GeneratorMode::Dense: return "dense";
    case GeneratorMode::Forced: return "forced";
  }
  return "unknown";
}

GeneratorMode parse_generator_mode(std::string_view text) {
  std::string lower(text);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dissipative") return GeneratorMode::Dissipative;
  if (lower == "conservative") return GeneratorMode::Conservative;
  if (lower == "dense") return GeneratorMode::Dense;
  if (lower == "forced") return GeneratorMode::Forced;
  throw ConfigError("unknown generator mode '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (grid_h <= 0 || grid_w <= 0) fail("grid must be positive");
  if (patch_size <= 0) fail("patch size must be positive");
  if (grid_h % patch_size != 0 || grid_w % patch_size != 0) {
    fail("grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) + " is not divisible by patch size " +
         std::to_string(patch_size));
  }
  if (embed_dim <= 0 || depth < 0 || heads <= 0) fail("embed_dim, depth and heads must be positive");
  if (embed_dim % heads != 0) fail("embed_dim must be divisible by heads");
  if (latent_dim <= 0 || latent_dim % 2 != 0) fail("latent_dim must be positive and even");
  if (harmonic_freqs < 0) fail("harmonic_freqs must be non-negative");
  if (refine_hidden <= 0 || forcing_hidden <= 0) fail("hidden widths must be positive");
  if (refine_hidden % kPhysicalChannels != 0) fail("refine_hidden must be divisible by the 4 output channels");
  if (generator_mode == GeneratorMode::Forced && !(forcing_frequency > 0.0)) {
    fail("forced mode needs a positive forcing frequency");
  }
}

MatrixXd harmonic_embed(const MatrixXd& coords, int freqs) {
  if (coords.cols() != 2) throw PreconditionError("harmonic_embed expects n x 2 coordinates");
  if (freqs < 0) throw PreconditionError("harmonic_embed: negative frequency count");
  MatrixXd out(coords.rows(), 4 * freqs + 2);
  out.leftCols(2) = coords;
  for (int j = 0; j < freqs; ++j) {
    const double k = std::ldexp(std::numbers::pi, j);
    out.col(2 + 4 * j) = (k * coords.col(0).array()).sin();
    out.col(3 + 4 * j) = (k * coords.col(0).array()).cos();
    out.col(4 + 4 * j) = (k * coords.col(1).array()).sin();
    out.col(5 + 4 * j) = (k * coords.col(1).array()).cos();
  }
  return out;
}

MatrixXd patchify(const MatrixXd& pixels, int h, int w, int p) {
  if (p <= 0 || h % p != 0 || w % p != 0) throw PreconditionError("patchify: grid not divisible by patch size");
  if (pixels.rows() != static_cast<Eigen::Index>(h) * w) throw PreconditionError("patchify: pixel count mismatch");
  const auto c = pixels.cols();
  const int pw = w / p;
  MatrixXd out((h / p) * pw, p * p * c);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int n = (i / p) * pw + j / p;
      const int within = (i % p) * p + j % p;
      out.row(n).segment(within * c, c) = pixels.row(i * w + j);
    }
  }
  return out;
}

MatrixXd unpatchify(const Eigen::RowVectorXd& flat, int h, int w, int p, int channels) {
  if (p <= 0 || h % p != 0 || w % p != 0) throw PreconditionError("unpatchify: grid not divisible by patch size");
  if (flat.size() != static_cast<Eigen::Index>(h) * w * channels) {
    throw PreconditionError("unpatchify: size mismatch");
  }
  const int pw = w / p;
  MatrixXd out(static_cast<Eigen::Index>(h) * w, channels);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int n = (i / p) * pw + j / p;
      const int within = (i % p) * p + j % p;
      out.row(i * w + j) = flat.segment((static_cast<Eigen::Index>(n) * p * p + within) * channels, channels);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

KoopmanModel::KoopmanModel(ModelConfig config, std::vector<std::uint8_t> mask, std::uint64_t seed)
    : config_(config), mask_(std::move(mask)) {
  config_.validate();
  const auto& c = config_;
  if (mask_.size() != static_cast<std::size_t>(c.grid_h) * c.grid_w) {
    throw ConfigError("mask size does not match the model grid");
  }
  std::mt19937_64 rng(seed);
  const double sigma = 0.02;
  const int d_model = c.embed_dim;
  const int n = c.num_patches();
  auto tn = [&](Eigen::Index r, Eigen::Index cols) { return truncated_normal(r, cols, sigma, rng); };

  add("patch_embed.weight", tn(d_model, c.patch_dim()), true);
  add("patch_embed.bias", MatrixXd::Zero(1, d_model), false);
  add("cls_token", tn(1, d_model), false);
  add("pos_embed", tn(n + 1, d_model), false);
  for (int l = 0; l < c.depth; ++l) {
    add(block_name(l, "ln1.weight"), MatrixXd::Ones(1, d_model), false);
    add(block_name(l, "ln1.bias"), MatrixXd::Zero(1, d_model), false);
    add(block_name(l, "attn.qkv.weight"), tn(3 * d_model, d_model), true);
    add(block_name(l, "attn.qkv.bias"), MatrixXd::Zero(1, 3 * d_model), false);
    add(block_name(l, "attn.proj.weight"), tn(d_model, d_model), true);
    add(block_name(l, "attn.proj.bias"), MatrixXd::Zero(1, d_model), false);
    add(block_name(l, "ln2.weight"), MatrixXd::Ones(1, d_model), false);
    add(block_name(l, "ln2.bias"), MatrixXd::Zero(1, d_model), false);
    add(block_name(l, "mlp.fc1.weight"), tn(4 * d_model, d_model), true);
    add(block_name(l, "mlp.fc1.bias"), MatrixXd::Zero(1, 4 * d_model), false);
    add(block_name(l, "mlp.fc2.weight"), tn(d_model, 4 * d_model), true);
    add(block_name(l, "mlp.fc2.bias"), MatrixXd::Zero(1, d_model), false);
  }
  if (c.latent_dim != d_model) {
    add("latent_head.weight", tn(c.latent_dim, d_model), true);
    add("latent_head.bias", MatrixXd::Zero(1, c.latent_dim), false);
  }

  const int p2 = c.patch_size * c.patch_size;
  add("decoder.weight", tn(static_cast<Eigen::Index>(n) * p2 * kPhysicalChannels, c.latent_dim), true);
  // Grouped per output channel: hidden rows [g*G, (g+1)*G) see coarse channel g.
  const int group = c.refine_hidden / kPhysicalChannels;
  add("refine.conv1.weight", tn(c.refine_hidden, 9), true);
  add("refine.conv2.weight", MatrixXd::Zero(kPhysicalChannels, 9 * group), true);

  if (c.generator_mode == GeneratorMode::Dense) {
    const int d = c.latent_dim;
    add("koopman.lower", std::sqrt(0.1) * MatrixXd::Identity(d, d), false);
    add("koopman.skew", truncated_normal(d, d, 0.5, rng), false);
  } else {
    const BlockInit init =
        c.generator_mode == GeneratorMode::Conservative ? BlockInit::Conservative : BlockInit::Dissipative;
    const BlockDiagGenerator gen = init_block_generator(c.latent_dim, init);
    add("koopman.raw_gamma", gen.raw_gamma, false);
    add("koopman.omega", gen.omega, false);
  }
  if (c.generator_mode == GeneratorMode::Forced) {
    add("forcing.fc1.weight", tn(c.forcing_hidden, 2), true);
    add("forcing.fc1.bias", MatrixXd::Zero(1, c.forcing_hidden), false);
    add("forcing.fc2.weight", tn(c.forcing_hidden, c.forcing_hidden), true);
    add("forcing.fc2.bias", MatrixXd::Zero(1, c.forcing_hidden), false);
    add("forcing.fc3.weight", tn(c.latent_dim, c.forcing_hidden), true);
    add("forcing.fc3.bias", MatrixXd::Zero(1, c.latent_dim), false);
  }
  build_index();
}

void KoopmanModel::add(std::string name, MatrixXd value, bool decay) {
  ad::Parameter p;
  p.name = std::move(name);
  p.value = std::move(value);
  p.decay = decay;
  p.zero_grad();
  params_.push_back(std::move(p));
}

void KoopmanModel::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;

  const auto& c = config_;
  MatrixXd coords(static_cast<Eigen::Index>(c.grid_h) * c.grid_w, 2);
  for (int i = 0; i < c.grid_h; ++i) {
    for (int j = 0; j < c.grid_w; ++j) {
      coords(i * c.grid_w + j, 0) = (j + 0.5) / c.grid_w;
      coords(i * c.grid_w + j, 1) = (i + 0.5) / c.grid_h;
    }
  }
  harmonics_ = harmonic_embed(coords, c.harmonic_freqs);

  // unpatch_index_[ch * hw + pixel] = column of the decoder output feeding it.
  const int p = c.patch_size;
  const int hw = c.grid_h * c.grid_w;
  unpatch_index_.assign(static_cast<std::size_t>(hw) * kPhysicalChannels, 0);
  for (int i = 0; i < c.grid_h; ++i) {
    for (int j = 0; j < c.grid_w; ++j) {
      const int n = (i / p) * (c.grid_w / p) + j / p;
      const int within = (i % p) * p + j % p;
      for (int ch = 0; ch < kPhysicalChannels; ++ch) {
        unpatch_index_[static_cast<std::size_t>(ch) * hw + i * c.grid_w + j] =
            (n * p * p + within) * kPhysicalChannels + ch;
      }
    }
  }
}

ad::Parameter& KoopmanModel::parameter(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw PreconditionError("no parameter named '" + name + "'");
  return params_[it->second];
}

const ad::Parameter& KoopmanModel::parameter(const std::string& name) const {
  return const_cast<KoopmanModel*>(this)->parameter(name);
}

std::size_t KoopmanModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

std::size_t KoopmanModel::encoder_parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) {
    if (is_encoder_parameter(p.name)) total += static_cast<std::size_t>(p.value.size());
  }
  return total;
}

KoopmanModel KoopmanModel::from_tensors(ModelConfig config, std::vector<std::uint8_t> mask,
                                        std::vector<ad::Parameter> tensors) {
  KoopmanModel model(config, std::move(mask), 0);
  std::map<std::string, ad::Parameter*> by_name;
  for (auto& t : tensors) by_name[t.name] = &t;
  for (auto& p : model.params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CorruptionError("checkpoint is missing tensor '" + p.name + "'");
    const MatrixXd& v = it->second->value;
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols()) {
      throw CorruptionError("tensor '" + p.name + "' has shape " + std::to_string(v.rows()) + "x" +
                            std::to_string(v.cols()) + ", expected " + std::to_string(p.value.rows()) + "x" +
                            std::to_string(p.value.cols()));
    }
    p.value = v;
    p.zero_grad();
    by_name.erase(it);
  }
  if (!by_name.empty()) throw CorruptionError("checkpoint has unexpected tensor '" + by_name.begin()->first + "'");
  return model;
}

MatrixXd KoopmanModel::encoder_input(const FieldSnapshot& snapshot) const {
  const auto& c = config_;
  const Eigen::Index hw = static_cast<Eigen::Index>(c.grid_h) * c.grid_w;
  if (snapshot.values.rows() != hw || snapshot.values.cols() != kSnapshotChannels) {
    throw PreconditionError("snapshot shape " + std::to_string(snapshot.values.rows()) + "x" +
                            std::to_string(snapshot.values.cols()) + " does not match the model grid");
  }
  MatrixXd pixels(hw, c.input_channels());
  pixels << snapshot.values, harmonics_;
  return patchify(pixels, c.grid_h, c.grid_w, c.patch_size);
}

ad::Var KoopmanModel::bind(ad::Tape& tape, const std::string& name) const {
  // Non-recording tapes never write gradients, so binding a const model is safe.
  return tape.parameter(const_cast<ad::Parameter&>(parameter(name)));
}

ad::Var KoopmanModel::encode(ad::Tape& tape, std::span<const MatrixXd> patches,
                             std::vector<MatrixXd>* attention) {
  const auto& c = config_;
  const int n = c.num_patches();
  const int seq = n + 1;
  const int d_model = c.embed_dim;
  const int dh = d_model / c.heads;
  const auto batch = static_cast<Eigen::Index>(patches.size());
  if (batch == 0) throw PreconditionError("encode: no snapshots");

  MatrixXd stacked(batch * n, c.patch_dim());
  for (Eigen::Index k = 0; k < batch; ++k) {
    const MatrixXd& pk = patches[static_cast<std::size_t>(k)];
    if (pk.rows() != n || pk.cols() != c.patch_dim()) throw PreconditionError("encode: patch matrix shape mismatch");
    stacked.middleRows(k * n, n) = pk;
  }
  ad::Var emb = ad::linear(tape.constant(std::move(stacked)), bind(tape, "patch_embed.weight"),
                           bind(tape, "patch_embed.bias"));
  ad::Var cls = bind(tape, "cls_token");
  ad::Var pos = bind(tape, "pos_embed");
  std::vector<ad::Var> rows;
  std::vector<ad::Var> pos_rows;
  for (Eigen::Index k = 0; k < batch; ++k) {
    rows.push_back(cls);
    rows.push_back(ad::slice_rows(emb, k * n, n));
    pos_rows.push_back(pos);
  }
  ad::Var z = ad::add(ad::concat_rows(rows), ad::concat_rows(pos_rows));

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < c.depth; ++l) {
    ad::Var h = ad::layer_norm_rows(z, bind(tape, block_name(l, "ln1.weight")), bind(tape, block_name(l, "ln1.bias")));
    ad::Var qkv = ad::linear(h, bind(tape, block_name(l, "attn.qkv.weight")), bind(tape, block_name(l, "attn.qkv.bias")));
    std::vector<ad::Var> per_snapshot;
    for (Eigen::Index k = 0; k < batch; ++k) {
      ad::Var rows_k = ad::slice_rows(qkv, k * seq, seq);
      std::vector<ad::Var> heads;
      for (int hd = 0; hd < c.heads; ++hd) {
        ad::Var q = ad::slice_cols(rows_k, hd * dh, dh);
        ad::Var key = ad::slice_cols(rows_k, d_model + hd * dh, dh);
        ad::Var v = ad::slice_cols(rows_k, 2 * d_model + hd * dh, dh);
        ad::Var att = ad::softmax_rows(ad::scale(ad::matmul_bt(q, key), inv_sqrt));
        if (attention != nullptr) attention->push_back(att.value());
        heads.push_back(ad::matmul(att, v));
      }
      per_snapshot.push_back(heads.size() == 1 ? heads[0] : ad::concat_cols(heads));
    }
    ad::Var mixed = batch == 1 ? per_snapshot[0] : ad::concat_rows(per_snapshot);
    z = ad::add(z, ad::linear(mixed, bind(tape, block_name(l, "attn.proj.weight")),
                              bind(tape, block_name(l, "attn.proj.bias"))));
    ad::Var h2 = ad::layer_norm_rows(z, bind(tape, block_name(l, "ln2.weight")), bind(tape, block_name(l, "ln2.bias")));
    ad::Var f = ad::gelu(ad::linear(h2, bind(tape, block_name(l, "mlp.fc1.weight")),
                                    bind(tape, block_name(l, "mlp.fc1.bias"))));
    z = ad::add(z, ad::linear(f, bind(tape, block_name(l, "mlp.fc2.weight")), bind(tape, block_name(l, "mlp.fc2.bias"))));
  }

  std::vector<int> cls_index(static_cast<std::size_t>(batch * d_model));
  const Eigen::Index total_rows = batch * seq;
  for (int col = 0; col < d_model; ++col) {
    for (Eigen::Index k = 0; k < batch; ++k) {
      cls_index[static_cast<std::size_t>(col * batch + k)] = static_cast<int>(k * seq + col * total_rows);
    }
  }
  ad::Var latent = ad::gather(z, std::move(cls_index), batch, d_model);
  if (c.latent_dim != d_model) {
    latent = ad::linear(latent, bind(tape, "latent_head.weight"), bind(tape, "latent_head.bias"));
  }
  return ad::transpose(latent);
}

ad::Var KoopmanModel::decode(ad::Tape& tape, ad::Var latents) {
  const auto& c = config_;
  if (latents.rows() != c.latent_dim) throw PreconditionError("decode: latent dimension mismatch");
  const Eigen::Index batch = latents.cols();
  const Eigen::Index hw = static_cast<Eigen::Index>(c.grid_h) * c.grid_w;

  // Bias-free throughout, so decode(0) = 0: a latent that decays to zero
  // decodes to fields that decay to zero.
  ad::Var flat = ad::matmul_bt(ad::transpose(latents), bind(tape, "decoder.weight"));
  std::vector<int> index(static_cast<std::size_t>(batch * hw * kPhysicalChannels));
  const Eigen::Index out_rows = batch * hw;
  for (int ch = 0; ch < kPhysicalChannels; ++ch) {
    for (Eigen::Index k = 0; k < batch; ++k) {
      for (Eigen::Index px = 0; px < hw; ++px) {
        const int f = unpatch_index_[static_cast<std::size_t>(ch * hw + px)];
        index[static_cast<std::size_t>(ch * out_rows + k * hw + px)] = static_cast<int>(k + f * batch);
      }
    }
  }
  ad::Var coarse = ad::gather(flat, std::move(index), out_rows, kPhysicalChannels);

  // Each channel is refined from its own coarse values only, so a weakly
  // weighted channel cannot be recruited as a hidden feature for the others.
  const ad::Var w1 = bind(tape, "refine.conv1.weight"), w2 = bind(tape, "refine.conv2.weight");
  const int group = c.refine_hidden / kPhysicalChannels;
  const ad::Var no_bias1 = tape.constant(MatrixXd::Zero(1, group)), no_bias2 = tape.constant(MatrixXd::Zero(1, 1));
  std::vector<ad::Var> residuals;
  for (int ch = 0; ch < kPhysicalChannels; ++ch) {
    ad::Var hidden = ad::gelu(
        ad::conv3x3(ad::slice_cols(coarse, ch, 1), ad::slice_rows(w1, ch * group, group), no_bias1, c.grid_h, c.grid_w));
    residuals.push_back(ad::conv3x3(hidden, ad::slice_rows(w2, ch, 1), no_bias2, c.grid_h, c.grid_w));
  }
  return ad::add(coarse, ad::concat_cols(residuals));
}

ad::Var KoopmanModel::forcing_latents(ad::Tape& tape, std::span<const double> times) {
  MatrixXd features(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t k = 0; k < times.size(); ++k) {
    features.row(static_cast<Eigen::Index>(k)) = forcing_features(config_.forcing_frequency, times[k]).transpose();
  }
  ad::Var h = ad::gelu(
      ad::linear(tape.constant(std::move(features)), bind(tape, "forcing.fc1.weight"), bind(tape, "forcing.fc1.bias")));
  h = ad::gelu(ad::linear(h, bind(tape, "forcing.fc2.weight"), bind(tape, "forcing.fc2.bias")));
  return ad::transpose(ad::linear(h, bind(tape, "forcing.fc3.weight"), bind(tape, "forcing.fc3.bias")));
}

namespace {

template <class Bind>
ad::Var apply_transition(const KoopmanModel& model, ad::Var x, std::span<const double> taus, Bind bind) {
  if (model.config().generator_mode == GeneratorMode::Dense) {
    return ad::dense_expm_apply(x, bind("koopman.lower"), bind("koopman.skew"), taus);
  }
  return ad::block_expm_apply(x, bind("koopman.raw_gamma"), bind("koopman.omega"), taus);
}

}  // namespace

ad::Var KoopmanModel::propagate(ad::Tape& tape, ad::Var g0, double t0, std::span<const double> times) {
  if (g0.rows() != config_.latent_dim || g0.cols() != 1) throw PreconditionError("propagate: g0 must be d x 1");
  std::vector<double> taus;
  for (double t : times) {
    if (!(t >= t0)) throw PreconditionError("propagate: target time precedes t0");
    taus.push_back(t - t0);
  }
  auto b = [&](const std::string& name) { return bind(tape, name); };
  if (config_.generator_mode != GeneratorMode::Forced) return apply_transition(*this, g0, taus, b);
  const double start[] = {t0};
  ad::Var natural = ad::sub(g0, forcing_latents(tape, start));
  return ad::add(apply_transition(*this, natural, taus, b), forcing_latents(tape, times));
}

ad::Var KoopmanModel::linear_residual(ad::Tape& tape, ad::Var before, ad::Var after, std::span<const double> t_before,
                                      std::span<const double> t_after) {
  if (before.cols() != after.cols() || static_cast<Eigen::Index>(t_before.size()) != before.cols() ||
      t_before.size() != t_after.size()) {
    throw PreconditionError("linear_residual: pair counts differ");
  }
  std::vector<double> dts;
  for (std::size_t k = 0; k < t_before.size(); ++k) {
    if (!(t_after[k] >= t_before[k])) throw PreconditionError("linear_residual: pairs must move forward in time");
    dts.push_back(t_after[k] - t_before[k]);
  }
  auto b = [&](const std::string& name) { return bind(tape, name); };
  if (config_.generator_mode == GeneratorMode::Forced) {
    before = ad::sub(before, forcing_latents(tape, t_before));
    after = ad::sub(after, forcing_latents(tape, t_after));
  }
  return ad::sub(after, apply_transition(*this, before, dts, b));
}

LatentState KoopmanModel::encode(const FieldSnapshot& snapshot) const {
  ad::Tape tape(false);
  const MatrixXd patches[] = {encoder_input(snapshot)};
  return const_cast<KoopmanModel*>(this)->encode(tape, patches).value().col(0);
}

FieldSnapshot KoopmanModel::decode(const LatentState& g) const {
  if (g.size() != config_.latent_dim) throw PreconditionError("decode: latent dimension mismatch");
  if (!g.allFinite()) throw PreconditionError("decode: latent has non-finite entries");
  ad::Tape tape(false);
  const MatrixXd out = const_cast<KoopmanModel*>(this)->decode(tape, tape.constant(g)).value();
  FieldSnapshot snap;
  snap.values.resize(out.rows(), kSnapshotChannels);
  for (Eigen::Index px = 0; px < out.rows(); ++px) {
    const bool free = mask_[static_cast<std::size_t>(px)] == 1;
    for (int ch = 0; ch < kPhysicalChannels; ++ch) {
      snap.values(px, ch) = lives_in_free_flow(ch) == free ? out(px, ch) : 0.0;
    }
    snap.values(px, kMask) = free ? 1.0 : 0.0;
  }
  return snap;
}

std::vector<MatrixXd> KoopmanModel::attention_maps(const FieldSnapshot& snapshot) const {
  ad::Tape tape(false);
  const MatrixXd patches[] = {encoder_input(snapshot)};
  std::vector<MatrixXd> maps;
  const_cast<KoopmanModel*>(this)->encode(tape, patches, &maps);
  return maps;
}

Generator KoopmanModel::generator() const {
  if (config_.generator_mode == GeneratorMode::Dense) {
    return DenseStableGenerator{parameter("koopman.lower").value, parameter("koopman.skew").value};
  }
  return BlockDiagGenerator{parameter("koopman.raw_gamma").value.col(0), parameter("koopman.omega").value.col(0)};
}

ForcingHead KoopmanModel::forcing_head() const {
  if (config_.generator_mode != GeneratorMode::Forced) throw PreconditionError("model has no forcing head");
  ForcingHead head;
  head.frequency = config_.forcing_frequency;
  head.w1 = parameter("forcing.fc1.weight").value;
  head.w2 = parameter("forcing.fc2.weight").value;
  head.w3 = parameter("forcing.fc3.weight").value;
  head.b1 = parameter("forcing.fc1.bias").value.row(0).transpose();
  head.b2 = parameter("forcing.fc2.bias").value.row(0).transpose();
  head.b3 = parameter("forcing.fc3.bias").value.row(0).transpose();
  return head;
}

}  // namespace vitk
