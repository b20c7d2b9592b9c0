#include "vitk/dataset.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "vitk/errors.hpp"
#include "vitk/exact_solutions.hpp"

namespace vitk {
namespace {

using nlohmann::json;

constexpr double kTimeSlack = 1e-9;
constexpr const char* kDatasetFormat = "vitk-dataset";
constexpr int kDatasetVersion = 1;

}  // namespace

std::size_t TrajectoryDataset::train_count() const {
  std::size_t n = 0;
  while (n < times.size() && times[n] <= train_horizon + kTimeSlack) ++n;
  return n;
}

std::size_t TrajectoryDataset::index_of(double t) const {
  const double tol = dt > 0.0 ? 0.5 * dt : kTimeSlack;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < tol) return i;
  }
  std::ostringstream os;
  os << "time " << t << " is not a snapshot of the dataset";
  throw PreconditionError(os.str());
}

std::vector<std::uint8_t> home_region(const DomainSpec& domain, int channel) {
  std::vector<std::uint8_t> region(domain.mask.size());
  const bool free_flow = lives_in_free_flow(channel);
  for (std::size_t i = 0; i < region.size(); ++i) {
    region[i] = (domain.mask[i] == 1) == free_flow ? 1 : 0;
  }
  return region;
}

FieldSnapshot sample_snapshot(const DomainSpec& domain, double t) {
  FieldSnapshot snap;
  snap.values.setZero(domain.pixels(), kSnapshotChannels);
  for (int i = 0; i < domain.grid_h; ++i) {
    const double y = domain.y_center(i);
    for (int j = 0; j < domain.grid_w; ++j) {
      const int p = i * domain.grid_w + j;
      // Cell centres never sit on the interface, so mask and side agree.
      const FieldSample s = eval_exact(domain, domain.x_center(j), y, t);
      snap.values(p, kU1) = s.u1;
      snap.values(p, kU2) = s.u2;
      snap.values(p, kP) = s.p;
      snap.values(p, kPhi) = s.phi;
      snap.values(p, kMask) = domain.mask[p];
    }
  }
  return snap;
}

TrajectoryDataset generate_dataset(const DomainSpec& domain, double t0, double t_end, double dt,
                                   double train_horizon) {
  if (!(dt > 0.0)) throw PreconditionError("generate_dataset: dt must be positive");
  if (!(t_end >= train_horizon && train_horizon >= t0)) {
    throw PreconditionError("generate_dataset: require t_end >= train_horizon >= t0");
  }
  TrajectoryDataset ds;
  ds.domain = domain;
  ds.dt = dt;
  ds.train_horizon = train_horizon;

  const double steps = (t_end - t0) / dt;
  const auto n_steps = static_cast<long>(std::floor(steps + kTimeSlack));
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    std::ostringstream os;
    os << "t_end - t0 = " << (t_end - t0) << " is not a multiple of dt = " << dt
       << "; snapshot count rounded down to " << (n_steps + 1);
    ds.warnings.push_back(os.str());
  }
  const double train_steps = (train_horizon - t0) / dt;
  if (std::abs(train_steps - std::round(train_steps)) > 1e-6) {
    std::ostringstream os;
    os << "training horizon " << train_horizon << " is not on the dt grid; training window rounded down";
    ds.warnings.push_back(os.str());
  }

  ds.times.reserve(static_cast<std::size_t>(n_steps + 1));
  for (long k = 0; k <= n_steps; ++k) ds.times.push_back(t0 + static_cast<double>(k) * dt);
  ds.snapshots.reserve(ds.times.size());
  for (double t : ds.times) ds.snapshots.push_back(sample_snapshot(domain, t));
  return ds;
}

TrajectoryDataset normalize(const TrajectoryDataset& ds) {
  const std::size_t n_train = ds.train_count();
  if (n_train == 0) throw PreconditionError("normalize: empty training window");

  TrajectoryDataset out = ds;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    double amplitude = 0.0;
    for (std::size_t k = 0; k < n_train; ++k) {
      amplitude = std::max(amplitude, ds.snapshots[k].channel(c).cwiseAbs().maxCoeff());
    }
    if (amplitude == 0.0) {
      out.norm_stats.zero_channel[c] = true;
      continue;
    }
    out.norm_stats.zero_channel[c] = false;
    out.norm_stats.scale[c] = ds.norm_stats.scale[c] * amplitude;
    for (auto& snap : out.snapshots) snap.channel(c) /= amplitude;
  }
  out.normalized = true;
  return out;
}

void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const DomainSpec& d = ds.domain;

  std::vector<char> blob;
  blob.reserve(ds.size() * kSnapshotChannels * static_cast<std::size_t>(d.pixels()) * 4);
  for (const auto& snap : ds.snapshots) {
    for (int c = 0; c < kSnapshotChannels; ++c) {
      for (int p = 0; p < d.pixels(); ++p) detail::append_f32_le(blob, snap.values(p, c));
    }
  }

  json m;
  m["format"] = kDatasetFormat;
  m["version"] = kDatasetVersion;
  m["example_id"] = to_string(d.example_id);
  m["grid"] = {d.grid_h, d.grid_w};
  m["x_range"] = {d.x_range.lo, d.x_range.hi};
  m["y_range"] = {d.y_range.lo, d.y_range.hi};
  m["interface_y"] = d.interface_y;
  m["forcing_frequency"] = d.forcing_frequency;
  m["ramp_time"] = d.ramp_time;
  m["dt"] = ds.dt;
  m["times"] = ds.times;
  m["train_horizon"] = ds.train_horizon;
  m["channel_order"] = std::vector<std::string>(kChannelNames.begin(), kChannelNames.end());
  m["norm_stats"] = std::vector<double>(ds.norm_stats.scale.begin(), ds.norm_stats.scale.end());
  m["zero_channels"] =
      std::vector<bool>(ds.norm_stats.zero_channel.begin(), ds.norm_stats.zero_channel.end());
  m["normalized"] = ds.normalized;
  m["dtype"] = "f32";
  m["endianness"] = "little";
  m["layout"] = "T,C,H,W";
  m["shape"] = {ds.size(), kSnapshotChannels, d.grid_h, d.grid_w};

  detail::atomic_write(dir / "data.f32", std::span<const char>(blob));
  detail::atomic_write(dir / "manifest.json", m.dump(2));
}

TrajectoryDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw CorruptionError("dataset manifest not found: " + manifest_path.string());
  }
  json m;
  try {
    const auto text = detail::read_all(manifest_path);
    m = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw CorruptionError("malformed dataset manifest " + manifest_path.string() + ": " + e.what());
  }

  TrajectoryDataset ds;
  try {
    if (m.at("format").get<std::string>() != kDatasetFormat) throw CorruptionError("not a dataset manifest");
    if (m.at("version").get<int>() != kDatasetVersion) {
      throw CorruptionError("unsupported dataset version " + m.at("version").dump());
    }
    if (m.at("dtype").get<std::string>() != "f32" || m.at("endianness").get<std::string>() != "little") {
      throw CorruptionError("dataset blob must be little-endian f32");
    }
    const auto grid = m.at("grid").get<std::vector<int>>();
    if (grid.size() != 2) throw CorruptionError("grid must have two entries");
    ds.domain = make_domain(parse_example_id(m.at("example_id").get<std::string>()), grid[0], grid[1]);
    ds.domain.forcing_frequency = m.value("forcing_frequency", kDefaultForcingFrequency);
    ds.domain.ramp_time = m.value("ramp_time", kDefaultRampTime);
    ds.dt = m.at("dt").get<double>();
    ds.times = m.at("times").get<std::vector<double>>();
    ds.train_horizon = m.at("train_horizon").get<double>();
    ds.normalized = m.at("normalized").get<bool>();
    const auto scale = m.at("norm_stats").get<std::vector<double>>();
    const auto zero = m.at("zero_channels").get<std::vector<bool>>();
    if (scale.size() != kPhysicalChannels || zero.size() != kPhysicalChannels) {
      throw CorruptionError("norm_stats must have one entry per physical channel");
    }
    for (int c = 0; c < kPhysicalChannels; ++c) {
      ds.norm_stats.scale[c] = scale[c];
      ds.norm_stats.zero_channel[c] = zero[c];
    }
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("dataset manifest missing or invalid field: ") + e.what());
  }

  const auto blob = detail::read_all(dir / "data.f32");
  const std::size_t pixels = static_cast<std::size_t>(ds.domain.pixels());
  const std::size_t expected = ds.times.size() * kSnapshotChannels * pixels * 4;
  if (blob.size() != expected) {
    throw CorruptionError("data.f32 has " + std::to_string(blob.size()) + " bytes, manifest implies " +
                          std::to_string(expected));
  }
  ds.snapshots.resize(ds.times.size());
  std::size_t offset = 0;
  for (auto& snap : ds.snapshots) {
    snap.values.resize(static_cast<Eigen::Index>(pixels), kSnapshotChannels);
    for (int c = 0; c < kSnapshotChannels; ++c) {
      for (std::size_t p = 0; p < pixels; ++p, offset += 4) {
        snap.values(static_cast<Eigen::Index>(p), c) = detail::read_f32_le(blob.data() + offset);
      }
    }
  }
  return ds;
}

}  // namespace vitk
