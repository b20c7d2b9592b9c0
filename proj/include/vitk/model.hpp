#pragma once

// Vision-transformer encoder, linear Koopman propagation and convolutional
// decoder, expressed over the autodiff tape.

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vitk/autodiff.hpp"
#include "vitk/dataset.hpp"
#include "vitk/generator.hpp"

namespace vitk {

enum class GeneratorMode { Dissipative, Conservative, Dense, Forced };

std::string to_string(GeneratorMode mode);
GeneratorMode parse_generator_mode(std::string_view text);

struct ModelConfig {
  int grid_h = 64;
  int grid_w = 64;
  int patch_size = 16;
  int embed_dim = 192;
  int depth = 6;
  int heads = 6;
  int latent_dim = 192;
  int harmonic_freqs = 4;
  int refine_hidden = 32;
  int forcing_hidden = 64;
  GeneratorMode generator_mode = GeneratorMode::Dissipative;
  double forcing_frequency = kDefaultForcingFrequency;

  /// u1, u2, p, phi, mask and the harmonic coordinate features.
  int input_channels() const { return kSnapshotChannels + 4 * harmonic_freqs + 2; }
  int num_patches() const { return (grid_h / patch_size) * (grid_w / patch_size); }
  int patch_dim() const { return patch_size * patch_size * input_channels(); }
  /// Throws ConfigError when the shape invariants do not hold.
  void validate() const;
};

/// Raw (x, y) followed by sin/cos(2^j pi x), sin/cos(2^j pi y) for j < freqs.
/// coords is n x 2; the result is n x (4 freqs + 2).
Eigen::MatrixXd harmonic_embed(const Eigen::MatrixXd& coords, int freqs);

/// Splits an (h*w) x c pixel matrix into non-overlapping p x p patches.
/// Row n = pi * (w/p) + pj; column (dy * p + dx) * c + channel.
Eigen::MatrixXd patchify(const Eigen::MatrixXd& pixels, int h, int w, int p);

/// Inverse of patchify for a single row holding all patches back to back.
Eigen::MatrixXd unpatchify(const Eigen::RowVectorXd& flat, int h, int w, int p, int channels);

class KoopmanModel {
 public:
  KoopmanModel() = default;
  /// Fresh parameters.  `mask` is the free-flow mask of the training domain.
  KoopmanModel(ModelConfig config, std::vector<std::uint8_t> mask, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  ad::Parameter& parameter(const std::string& name);
  const ad::Parameter& parameter(const std::string& name) const;
  bool has_parameter(const std::string& name) const { return index_.contains(name); }
  std::size_t parameter_count() const;
  std::size_t encoder_parameter_count() const;

  /// Reassembles a model from stored tensors; shapes are checked against the config.
  static KoopmanModel from_tensors(ModelConfig config, std::vector<std::uint8_t> mask,
                                   std::vector<ad::Parameter> tensors);

  /// Patch matrix (N x patch_dim) of a snapshot with the harmonic features attached.
  Eigen::MatrixXd encoder_input(const FieldSnapshot& snapshot) const;

  // Graph builders.  Latents are columns: encode returns d x K for K inputs.
  ad::Var encode(ad::Tape& tape, std::span<const Eigen::MatrixXd> patches,
                 std::vector<Eigen::MatrixXd>* attention = nullptr);
  /// Stacked (K*h*w) x 4 prediction for the K latent columns.
  ad::Var decode(ad::Tape& tape, ad::Var latents);
  /// Latent at each time: direct propagation of the initial column g0 from t0.
  /// In forced mode the natural part g0 - head(t0) is propagated and head(t) added.
  ad::Var propagate(ad::Tape& tape, ad::Var g0, double t0, std::span<const double> times);
  /// One-step linear predictions for consecutive latent pairs: column k maps
  /// column k of `before` across dts[k].  Returns the residual after - prediction.
  ad::Var linear_residual(ad::Tape& tape, ad::Var before, ad::Var after, std::span<const double> t_before,
                          std::span<const double> t_after);

  // Plain inference.
  LatentState encode(const FieldSnapshot& snapshot) const;
  /// Decoded physical channels with the mask channel appended; values outside
  /// each channel's home region are zeroed.
  FieldSnapshot decode(const LatentState& g) const;
  /// Attention matrices of every layer and head (layer-major) for one snapshot.
  std::vector<Eigen::MatrixXd> attention_maps(const FieldSnapshot& snapshot) const;

  Generator generator() const;
  ForcingHead forcing_head() const;

 private:
  void add(std::string name, Eigen::MatrixXd value, bool decay);
  ad::Var bind(ad::Tape& tape, const std::string& name) const;
  ad::Var forcing_latents(ad::Tape& tape, std::span<const double> times);
  void build_index();

  ModelConfig config_;
  std::vector<std::uint8_t> mask_;
  std::vector<ad::Parameter> params_;
  std::map<std::string, std::size_t> index_;
  Eigen::MatrixXd harmonics_;       // (h*w) x (4F+2)
  std::vector<int> unpatch_index_;  // gather map for decode
};

}  // namespace vitk
