#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vitk/checkpoint.hpp"
#include "vitk/edmd.hpp"
#include "vitk/metrics.hpp"

namespace vitk {

struct ConvergenceRow {
  int samples = 0;
  double mean_error = 0.0;  // mean Frobenius error of the estimated generator
  double std_error = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // of log(mean_error) against log(samples)
  double intercept = 0.0;
};

/// Sample-size study of the least-squares generator estimate.  A fixed random
/// stable A* (drawn from `seed`) is observed through pairs (g, e^{dt A*} g + sigma xi)
/// with g ~ N(0, I); each sample size is repeated `repeats` times.
ConvergenceResult convergence_study(int d, std::span<const int> sample_sizes, double noise_sigma, std::uint64_t seed,
                                    int repeats = 20, double dt = 0.1, EdmdMode mode = EdmdMode::MatrixLog);

struct NoiseCase {
  double time = 0.0;
  double r2_noisy = 0.0;  // noisy input against the clean field
  double r2_model = 0.0;  // decode(encode(noisy input)) against the clean field
};

/// Perturbs the snapshot at each time with channel-wise Gaussian noise of
/// relative amplitude delta and scores the raw input and its reconstruction.
/// R^2 is taken over all physical channels inside their home regions.
std::vector<NoiseCase> noise_study(const Checkpoint& ckpt, const TrajectoryDataset& ds, std::span<const double> times,
                                   double delta, std::uint64_t seed);

struct ErrorGrowthResult {
  TimeSeries raw;       // rmse(t) over the whole rollout
  TimeSeries averaged;  // phase-averaged, restricted to (t_from, t_to]
  ErrorGrowthFit fit;
};

/// Rolls out to every dataset time up to t_to, phase-averages the RMSE over
/// `period` and fits a line on (t_from, t_to].
ErrorGrowthResult error_growth(const Checkpoint& ckpt, const TrajectoryDataset& ds, double t_from, double t_to,
                               double period, RolloutMode mode);

}  // namespace vitk
