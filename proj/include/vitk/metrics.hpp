#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vitk/dataset.hpp"

namespace vitk {

struct MetricsRow {
  double time = 0.0;
  std::string channel;
  double mse = 0.0;
  double mae = 0.0;
  double max_err = 0.0;
  std::optional<double> rel_l2;  // empty when the reference is identically zero
  double rmse = 0.0;
};

/// Error statistics of pred against truth over the cells flagged in region.
MetricsRow metrics(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, std::span<const std::uint8_t> region,
                   double time = 0.0, std::string channel = {});

/// One row per physical channel, each over its home region.
std::vector<MetricsRow> snapshot_metrics(const FieldSnapshot& pred, const FieldSnapshot& truth,
                                         const DomainSpec& domain, double time);

/// RMSE over all physical channels restricted to their home regions.
double snapshot_rmse(const FieldSnapshot& pred, const FieldSnapshot& truth, const DomainSpec& domain);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// 1 - SS_res / SS_tot.  Throws PreconditionError for a constant reference.
double r2_score(std::span<const double> pred, std::span<const double> ref);

/// field + delta * max|field| * xi with xi ~ N(0, 1) from `seed`.
Eigen::VectorXd inject_noise(const Eigen::VectorXd& field, double delta, std::uint64_t seed);
/// Channel-wise noise restricted to each channel's home region; the mask
/// channel and cells outside the home region are left untouched.
FieldSnapshot inject_noise(const FieldSnapshot& snapshot, const DomainSpec& domain, double delta, std::uint64_t seed);

using TimeSeries = std::vector<std::pair<double, double>>;

struct ErrorGrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2_linear = 0.0;
  double exp_ratio = 0.0;  // value at the last time over the value nearest the midpoint
};

ErrorGrowthFit error_growth_fit(const TimeSeries& series);

/// Trailing average over one period: each point becomes the mean of the
/// samples in (t - period, t].
TimeSeries phase_average(const TimeSeries& series, double period);

}  // namespace vitk
