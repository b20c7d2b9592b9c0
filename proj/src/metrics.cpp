#include "vitk/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "vitk/errors.hpp"

namespace vitk {

MetricsRow metrics(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, std::span<const std::uint8_t> region,
                   double time, std::string channel) {
  if (pred.size() != truth.size() || static_cast<std::size_t>(pred.size()) != region.size()) {
    throw PreconditionError("metrics: prediction, truth and region sizes differ");
  }
  double sq = 0.0, abs_sum = 0.0, max_err = 0.0, truth_sq = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (region[static_cast<std::size_t>(i)] == 0) continue;
    const double e = pred[i] - truth[i];
    sq += e * e;
    abs_sum += std::abs(e);
    max_err = std::max(max_err, std::abs(e));
    truth_sq += truth[i] * truth[i];
    ++n;
  }
  if (n == 0) throw PreconditionError("metrics: empty region");
  MetricsRow row;
  row.time = time;
  row.channel = std::move(channel);
  row.mse = sq / static_cast<double>(n);
  row.mae = abs_sum / static_cast<double>(n);
  row.max_err = max_err;
  row.rmse = std::sqrt(row.mse);
  if (truth_sq > 0.0) row.rel_l2 = std::sqrt(sq) / std::sqrt(truth_sq);
  return row;
}

std::vector<MetricsRow> snapshot_metrics(const FieldSnapshot& pred, const FieldSnapshot& truth,
                                         const DomainSpec& domain, double time) {
  std::vector<MetricsRow> rows;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const auto region = home_region(domain, c);
    rows.push_back(metrics(pred.channel(c), truth.channel(c), region, time, kChannelNames[static_cast<std::size_t>(c)]));
  }
  return rows;
}

double snapshot_rmse(const FieldSnapshot& pred, const FieldSnapshot& truth, const DomainSpec& domain) {
  double sq = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const auto region = home_region(domain, c);
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (region[i] == 0) continue;
      const double e = pred.values(static_cast<Eigen::Index>(i), c) - truth.values(static_cast<Eigen::Index>(i), c);
      sq += e * e;
      ++n;
    }
  }
  if (n == 0) throw PreconditionError("snapshot_rmse: empty regions");
  return std::sqrt(sq / static_cast<double>(n));
}

std::string metrics_csv_header() { return "time,channel,mse,mae,max_err,rel_l2,rmse"; }

std::string metrics_csv_row(const MetricsRow& row) {
  char buf[256];
  char rel[64] = "-";
  if (row.rel_l2) std::snprintf(rel, sizeof rel, "%.9g", *row.rel_l2);
  std::snprintf(buf, sizeof buf, "%.6g,%s,%.9g,%.9g,%.9g,%s,%.9g", row.time, row.channel.c_str(), row.mse, row.mae,
                row.max_err, rel, row.rmse);
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << metrics_csv_header() << '\n';
  for (const auto& r : rows) os << metrics_csv_row(r) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorruptionError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != metrics_csv_header()) throw CorruptionError("unexpected metrics header: " + line);
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw CorruptionError("metrics row has " + std::to_string(cells.size()) + " cells");
    MetricsRow r;
    try {
      r.time = std::stod(cells[0]);
      r.channel = cells[1];
      r.mse = std::stod(cells[2]);
      r.mae = std::stod(cells[3]);
      r.max_err = std::stod(cells[4]);
      if (cells[5] != "-") r.rel_l2 = std::stod(cells[5]);
      r.rmse = std::stod(cells[6]);
    } catch (const std::logic_error&) {
      throw CorruptionError("unparsable metrics row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

double r2_score(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size() || ref.empty()) throw PreconditionError("r2_score: lengths differ or are zero");
  double mean = 0.0;
  for (double r : ref) mean += r;
  mean /= static_cast<double>(ref.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ss_res += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    ss_tot += (ref[i] - mean) * (ref[i] - mean);
  }
  if (ss_tot == 0.0) throw PreconditionError("r2_score: reference is constant");
  return 1.0 - ss_res / ss_tot;
}

Eigen::VectorXd inject_noise(const Eigen::VectorXd& field, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw PreconditionError("inject_noise: delta must be non-negative");
  if (delta == 0.0 || field.size() == 0) return field;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double amp = delta * field.cwiseAbs().maxCoeff();
  Eigen::VectorXd out = field;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += amp * normal(rng);
  return out;
}

FieldSnapshot inject_noise(const FieldSnapshot& snapshot, const DomainSpec& domain, double delta, std::uint64_t seed) {
  FieldSnapshot out = snapshot;
  for (int c = 0; c < kPhysicalChannels; ++c) {
    const auto region = home_region(domain, c);
    std::vector<Eigen::Index> cells;
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (region[i] != 0) cells.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::VectorXd values(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) values[static_cast<Eigen::Index>(i)] = snapshot.values(cells[i], c);
    const Eigen::VectorXd noisy = inject_noise(values, delta, seed + static_cast<std::uint64_t>(c) * 7919u);
    for (std::size_t i = 0; i < cells.size(); ++i) out.values(cells[i], c) = noisy[static_cast<Eigen::Index>(i)];
  }
  return out;
}

ErrorGrowthFit error_growth_fit(const TimeSeries& series) {
  if (series.size() < 3) throw PreconditionError("error_growth_fit needs at least 3 points");
  const double n = static_cast<double>(series.size());
  double mt = 0.0, my = 0.0;
  for (const auto& [t, y] : series) {
    if (!std::isfinite(t) || !std::isfinite(y)) throw PreconditionError("error_growth_fit: non-finite sample");
    mt += t;
    my += y;
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, y] : series) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (stt == 0.0) throw PreconditionError("error_growth_fit: all samples share one time");
  ErrorGrowthFit fit;
  fit.slope = sty / stt;
  fit.intercept = my - fit.slope * mt;
  double ss_res = 0.0;
  for (const auto& [t, y] : series) {
    const double r = y - (fit.intercept + fit.slope * t);
    ss_res += r * r;
  }
  fit.r2_linear = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;

  const double t_mid = 0.5 * (series.front().first + series.back().first);
  std::size_t mid = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (std::abs(series[i].first - t_mid) < std::abs(series[mid].first - t_mid)) mid = i;
  }
  fit.exp_ratio = series.back().second / series[mid].second;
  return fit;
}

TimeSeries phase_average(const TimeSeries& series, double period) {
  if (!(period > 0.0)) throw PreconditionError("phase_average: period must be positive");
  const double slack = 1e-9 * std::max(1.0, period);
  TimeSeries out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series[i].first;
    double sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j <= i; ++j) {
      if (series[j].first > t - period + slack) {
        sum += series[j].second;
        ++count;
      }
    }
    out.emplace_back(t, sum / count);
  }
  return out;
}

}  // namespace vitk
