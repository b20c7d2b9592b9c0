#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace vitk {

enum class ExampleId { SdEx1, NsdEx2, ForcedSyn };

inline constexpr double kDefaultForcingFrequency = 2.5;
inline constexpr double kDefaultRampTime = 0.4;

std::string to_string(ExampleId id);
/// Accepts "SD_EX1"/"sd", "NSD_EX2"/"nsd", "FORCED_SYN"/"forced".
ExampleId parse_example_id(std::string_view text);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Benchmark geometry on a uniform cell-centred grid.
///
/// Row i of the grid sits at y = y_range.lo + (i + 0.5) * dy, column j at
/// x = x_range.lo + (j + 0.5) * dx.  Pixels are addressed as i * grid_w + j.
/// The mask is 1 in the free-flow region (y < interface_y) and 0 in the
/// porous region.
struct DomainSpec {
  ExampleId example_id = ExampleId::SdEx1;
  Interval x_range;
  Interval y_range;
  double interface_y = 0.0;
  int grid_h = 0;
  int grid_w = 0;
  std::vector<std::uint8_t> mask;

  // Only meaningful for ForcedSyn.
  double forcing_frequency = kDefaultForcingFrequency;
  double ramp_time = kDefaultRampTime;

  int pixels() const { return grid_h * grid_w; }
  double dx() const { return x_range.length() / grid_w; }
  double dy() const { return y_range.length() / grid_h; }
  double x_center(int j) const { return x_range.lo + (j + 0.5) * dx(); }
  double y_center(int i) const { return y_range.lo + (i + 0.5) * dy(); }
  bool is_free_flow(int pixel) const { return mask[pixel] == 1; }

  int free_flow_cells() const;
  int porous_cells() const;
};

DomainSpec make_domain(ExampleId id, int grid_h, int grid_w);

/// Cell-centre coordinates mapped to [0,1]^2; returns (h*w) x 2, columns (x, y).
Eigen::MatrixXd normalized_coordinates(const DomainSpec& domain);

}  // namespace vitk
