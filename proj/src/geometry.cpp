#include "vitk/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

#include "vitk/errors.hpp"

namespace vitk {

std::string to_string(ExampleId id) {
  switch (id) {
    case ExampleId::SdEx1:
      return "SD_EX1";
    case ExampleId::NsdEx2:
      return "NSD_EX2";
    case ExampleId::ForcedSyn:
      return "FORCED_SYN";
  }
  throw ConfigError("unknown example id");
}

ExampleId parse_example_id(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "SD_EX1" || s == "SD") return ExampleId::SdEx1;
  if (s == "NSD_EX2" || s == "NSD") return ExampleId::NsdEx2;
  if (s == "FORCED_SYN" || s == "FORCED") return ExampleId::ForcedSyn;
  throw ConfigError("unknown example id '" + std::string(text) + "'");
}

int DomainSpec::free_flow_cells() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

int DomainSpec::porous_cells() const { return pixels() - free_flow_cells(); }

DomainSpec make_domain(ExampleId id, int grid_h, int grid_w) {
  if (grid_h <= 0 || grid_w <= 0) {
    throw ConfigError("grid dimensions must be positive, got " + std::to_string(grid_h) + "x" +
                      std::to_string(grid_w));
  }
  DomainSpec d;
  d.example_id = id;
  d.grid_h = grid_h;
  d.grid_w = grid_w;
  switch (id) {
    case ExampleId::SdEx1:
      d.x_range = {0.0, std::numbers::pi};
      d.y_range = {-1.0, 1.0};
      break;
    case ExampleId::NsdEx2:
    case ExampleId::ForcedSyn:
      d.x_range = {0.0, 1.0};
      d.y_range = {-0.25, 0.75};
      break;
    default:
      throw ConfigError("unknown example id");
  }
  d.interface_y = 0.0;
  d.mask.resize(static_cast<std::size_t>(d.pixels()));
  for (int i = 0; i < grid_h; ++i) {
    const std::uint8_t free_flow = d.y_center(i) < d.interface_y ? 1 : 0;
    std::fill_n(d.mask.begin() + static_cast<std::ptrdiff_t>(i) * grid_w, grid_w, free_flow);
  }
  return d;
}

Eigen::MatrixXd normalized_coordinates(const DomainSpec& domain) {
  Eigen::MatrixXd xy(domain.pixels(), 2);
  for (int i = 0; i < domain.grid_h; ++i) {
    for (int j = 0; j < domain.grid_w; ++j) {
      const int p = i * domain.grid_w + j;
      xy(p, 0) = (j + 0.5) / domain.grid_w;
      xy(p, 1) = (i + 0.5) / domain.grid_h;
    }
  }
  return xy;
}

}  // namespace vitk
