#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vitk/geometry.hpp"

namespace vitk {

/// Channel order of every snapshot, dataset file and decoder output.
enum Channel : int { kU1 = 0, kU2 = 1, kP = 2, kPhi = 3, kMask = 4 };
inline constexpr int kPhysicalChannels = 4;
inline constexpr int kSnapshotChannels = 5;
inline constexpr std::array<const char*, kSnapshotChannels> kChannelNames = {"u1", "u2", "p", "phi",
                                                                             "mask"};

/// True when `channel` belongs to the free-flow region (u1, u2, p).
constexpr bool lives_in_free_flow(int channel) { return channel != kPhi; }

/// One time slice: (h*w) x 5 matrix, pixel-major rows, channels as columns.
struct FieldSnapshot {
  Eigen::MatrixXd values;

  auto channel(int c) { return values.col(c); }
  auto channel(int c) const { return values.col(c); }
};

struct NormStats {
  std::array<double, kPhysicalChannels> scale{1.0, 1.0, 1.0, 1.0};
  std::array<bool, kPhysicalChannels> zero_channel{false, false, false, false};
};

struct TrajectoryDataset {
  DomainSpec domain;
  std::vector<double> times;
  std::vector<FieldSnapshot> snapshots;
  NormStats norm_stats;
  double train_horizon = 0.0;
  double dt = 0.0;
  bool normalized = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
  /// Number of leading snapshots with t <= train_horizon.
  std::size_t train_count() const;
  /// Index of the snapshot at time t (within half a step), or throws.
  std::size_t index_of(double t) const;
};

/// Mask restricted to the channel's home region (1 = counted).
std::vector<std::uint8_t> home_region(const DomainSpec& domain, int channel);

FieldSnapshot sample_snapshot(const DomainSpec& domain, double t);

TrajectoryDataset generate_dataset(const DomainSpec& domain, double t0, double t_end, double dt,
                                   double train_horizon);

/// Scales each physical channel by its max-abs over the training window.
/// Composes with previously stored statistics, so applying it twice is a
/// fixed point.
TrajectoryDataset normalize(const TrajectoryDataset& ds);

void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& dir);
TrajectoryDataset load_dataset(const std::filesystem::path& dir);

}  // namespace vitk
