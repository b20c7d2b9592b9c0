#include "vitk/experiments.hpp"

#include <cmath>
#include <random>

#include "vitk/errors.hpp"
#include "vitk/expm.hpp"
#include "vitk/rollout.hpp"

namespace vitk {
namespace {

using Eigen::MatrixXd;

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Physical channels inside their home regions, flattened.
std::vector<double> home_values(const FieldSnapshot& s, const DomainSpec& domain) {
  std::vector<double> out;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const auto region = home_region(domain, c);
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (region[i] != 0) out.push_back(s.values(static_cast<Eigen::Index>(i), c));
    }
  }
  return out;
}

}  // namespace

ConvergenceResult convergence_study(int d, std::span<const int> sample_sizes, double noise_sigma, std::uint64_t seed,
                                    int repeats, double dt, EdmdMode mode) {
  if (d <= 0 || repeats <= 0 || !(dt > 0.0) || !(noise_sigma >= 0.0)) {
    throw PreconditionError("convergence_study: invalid arguments");
  }
  if (sample_sizes.empty()) throw PreconditionError("convergence_study: no sample sizes");
  for (std::size_t i = 1; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] <= sample_sizes[i - 1]) throw PreconditionError("convergence_study: sample sizes must increase");
  }
  std::mt19937_64 rng(seed);
  // Stable A* with moderate rates: symmetric part -(L L^T)/d - 0.1 I, skew part O(1).
  const MatrixXd l = MatrixXd(gaussian(d, d, rng).triangularView<Eigen::Lower>()) / std::sqrt(static_cast<double>(d));
  const MatrixXd w = gaussian(d, d, rng);
  const MatrixXd a_true = -l * l.transpose() - 0.1 * MatrixXd::Identity(d, d) + 0.5 * (w - w.transpose());
  const MatrixXd k_true = expm(dt * a_true);

  ConvergenceResult result;
  for (int m : sample_sizes) {
    std::vector<double> errors;
    for (int r = 0; r < repeats; ++r) {
      const MatrixXd before = gaussian(d, m, rng);
      MatrixXd after = k_true * before;
      if (noise_sigma > 0.0) after += noise_sigma * gaussian(d, m, rng);
      errors.push_back((edmd_fit(before, after, dt, 0.0, mode) - a_true).norm());
    }
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= repeats;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    result.rows.push_back({m, mean, repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0});
  }
  if (result.rows.size() >= 2) {
    TimeSeries log_series;
    for (const auto& row : result.rows) log_series.emplace_back(std::log(row.samples), std::log(row.mean_error));
    if (log_series.size() >= 3) {
      const ErrorGrowthFit fit = error_growth_fit(log_series);
      result.slope = fit.slope;
      result.intercept = fit.intercept;
    } else {
      result.slope = (log_series[1].second - log_series[0].second) / (log_series[1].first - log_series[0].first);
      result.intercept = log_series[0].second - result.slope * log_series[0].first;
    }
  }
  return result;
}

std::vector<NoiseCase> noise_study(const Checkpoint& ckpt, const TrajectoryDataset& ds, std::span<const double> times,
                                   double delta, std::uint64_t seed) {
  std::vector<NoiseCase> out;
  std::uint64_t case_seed = seed;
  for (double t : times) {
    const FieldSnapshot& clean = ds.snapshots[ds.index_of(t)];
    const FieldSnapshot noisy = inject_noise(clean, ds.domain, delta, case_seed++);
    const FieldSnapshot recon = ckpt.model.decode(ckpt.model.encode(noisy));
    const auto ref = home_values(clean, ds.domain);
    out.push_back({t, r2_score(home_values(noisy, ds.domain), ref), r2_score(home_values(recon, ds.domain), ref)});
  }
  return out;
}

ErrorGrowthResult error_growth(const Checkpoint& ckpt, const TrajectoryDataset& ds, double t_from, double t_to,
                               double period, RolloutMode mode) {
  if (!(t_to > t_from)) throw PreconditionError("error_growth: empty time range");
  std::vector<double> times;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.times[i] <= t_to + 1e-9) {
      times.push_back(ds.times[i]);
      index.push_back(i);
    }
  }
  if (times.empty() || times.back() < t_to - 1e-9) {
    throw PreconditionError("error_growth: dataset does not reach t = " + std::to_string(t_to));
  }
  const auto preds = rollout(ckpt, ds, times, mode);
  ErrorGrowthResult result;
  for (std::size_t i = 0; i < times.size(); ++i) {
    result.raw.emplace_back(times[i], snapshot_rmse(preds[i], ds.snapshots[index[i]], ds.domain));
  }
  for (const auto& point : phase_average(result.raw, period)) {
    if (point.first > t_from + 1e-9) result.averaged.push_back(point);
  }
  result.fit = error_growth_fit(result.averaged);
  return result;
}

}  // namespace vitk
