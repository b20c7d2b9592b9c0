#include "vitk/interface_physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitk/errors.hpp"
#include "vitk/exact_solutions.hpp"

namespace vitk {
namespace {

constexpr double kPi = std::numbers::pi;

FieldSample closed_form(ExampleId id, double x, double y, double t, double k) {
  switch (id) {
    case ExampleId::SdEx1:
      return sd_closed_form(x, y, t, k);
    case ExampleId::NsdEx2:
      return nsd_closed_form(x, y, t);
    case ExampleId::ForcedSyn: {
      FieldSample s = nsd_closed_form(x, y, 0.0);
      const double f = forced_temporal_factor(t, kDefaultForcingFrequency, kDefaultRampTime);
      s.u1 *= f;
      s.u2 *= f;
      s.p *= f;
      s.phi *= f;
      return s;
    }
  }
  throw ConfigError("interface_residuals: unknown example");
}

FieldGradient sd_gradient(double x, double y, double t, double k) {
  const double e = sd_temporal_factor(t);
  const double sx = std::sin(x), cx = std::cos(x);
  const double sy = std::sin(kPi * y);
  FieldGradient g;
  g.phi_x = (std::exp(y) - std::exp(-y)) * cx * e;
  g.phi_y = (std::exp(y) + std::exp(-y)) * sx * e;
  g.u1_x = -(k / kPi) * std::sin(2.0 * kPi * y) * sx * e;
  g.u1_y = 2.0 * k * std::cos(2.0 * kPi * y) * cx * e;
  g.u2_x = (-2.0 * k + (k / (kPi * kPi)) * sy * sy) * cx * e;
  g.u2_y = (k / kPi) * std::sin(2.0 * kPi * y) * sx * e;
  return g;
}

FieldGradient nsd_gradient(double x, double y, double factor) {
  const double shape = 2.0 - kPi * std::sin(kPi * x);
  const double shape_x = -kPi * kPi * std::cos(kPi * x);
  FieldGradient g;
  g.phi_x = shape_x * (-y + std::cos(kPi * (1.0 - y))) * factor;
  g.phi_y = shape * (-1.0 + kPi * std::sin(kPi * (1.0 - y))) * factor;
  g.u1_x = 2.0 * x * y * y * factor;
  g.u1_y = (2.0 * x * x * y - std::exp(-y)) * factor;
  g.u2_x = (-(2.0 / 3.0) * y * y * y + shape_x) * factor;
  g.u2_y = -2.0 * x * y * y * factor;
  return g;
}

}  // namespace

FieldGradient closed_form_gradient(ExampleId id, double x, double y, double t, double k) {
  switch (id) {
    case ExampleId::SdEx1:
      return sd_gradient(x, y, t, k);
    case ExampleId::NsdEx2:
      return nsd_gradient(x, y, nsd_temporal_factor(t));
    case ExampleId::ForcedSyn:
      return nsd_gradient(x, y, forced_temporal_factor(t, kDefaultForcingFrequency, kDefaultRampTime));
  }
  throw ConfigError("closed_form_gradient: unknown example");
}

ResidualReport interface_residuals_at(ExampleId id, double t, std::span<const double> xs,
                                      const PhysicalParams& pp) {
  const DomainSpec domain = make_domain(id, 1, 1);
  const double y = domain.interface_y;
  const double z = domain.interface_y;
  // alpha nu sqrt(d) / sqrt(trace Pi) with Pi = (k nu / g) I in two dimensions.
  const double slip = pp.alpha * pp.nu * std::sqrt(2.0) / std::sqrt(2.0 * pp.k * pp.nu / pp.g);

  ResidualReport r;
  r.n_points = static_cast<int>(xs.size());
  for (double x : xs) {
    const FieldSample s = closed_form(id, x, y, t, pp.k);
    const FieldGradient d = closed_form_gradient(id, x, y, t, pp.k);
    // Free flow lies below the interface: n_S = (0, 1), n_D = (0, -1).
    const double ud1 = -pp.k * d.phi_x;
    const double ud2 = -pp.k * d.phi_y;
    const double flux = s.u2 - ud2;
    const double t22 = 2.0 * pp.nu * d.u2_y - s.p;
    const double stress = -t22 - pp.g * (s.phi - z);
    const double t12 = pp.nu * (d.u1_y + d.u2_x);
    const double bj = -t12 - slip * (s.u1 - ud1);
    r.flux = std::max(r.flux, std::abs(flux));
    r.normal_stress = std::max(r.normal_stress, std::abs(stress));
    r.beavers_joseph = std::max(r.beavers_joseph, std::abs(bj));
  }
  return r;
}

ResidualReport interface_residuals(ExampleId id, double t, int n_points, const PhysicalParams& params) {
  if (n_points < 1) throw PreconditionError("interface_residuals: n_points must be >= 1");
  const DomainSpec domain = make_domain(id, 1, 1);
  std::vector<double> xs(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    xs[i] = n_points == 1 ? domain.x_range.lo
                          : domain.x_range.lo + domain.x_range.length() * i / (n_points - 1);
  }
  return interface_residuals_at(id, t, xs, params);
}

}  // namespace vitk
