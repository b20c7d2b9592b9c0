#include "vitk/exact_solutions.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vitk/errors.hpp"

namespace vitk {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDomainSlack = 1e-12;

void check_inside(double x, double y, Interval xr, Interval yr, const char* name) {
  if (x < xr.lo - kDomainSlack || x > xr.hi + kDomainSlack || y < yr.lo - kDomainSlack ||
      y > yr.hi + kDomainSlack) {
    std::ostringstream os;
    os << name << ": point (" << x << ", " << y << ") outside [" << xr.lo << "," << xr.hi << "]x["
       << yr.lo << "," << yr.hi << "]";
    throw PreconditionError(os.str());
  }
}

FieldSample restrict_to_sides(FieldSample s, double y, double interface_y) {
  if (y > interface_y) {
    s.u1 = s.u2 = s.p = 0.0;
  }
  if (y < interface_y) {
    s.phi = 0.0;
  }
  return s;
}

FieldSample scale(FieldSample s, double factor) {
  s.u1 *= factor;
  s.u2 *= factor;
  s.p *= factor;
  s.phi *= factor;
  return s;
}

}  // namespace

double sd_temporal_factor(double t) { return std::exp(-t); }

double nsd_temporal_factor(double t) { return std::cos(2.0 * kPi * t); }

double forcing_ramp(double t, double ramp_time) {
  if (t >= ramp_time) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * t / ramp_time));
}

double forced_temporal_factor(double t, double f, double ramp_time) {
  return forcing_ramp(t, ramp_time) * (1.0 + 0.4 * std::sin(2.0 * kPi * f * t));
}

FieldSample sd_closed_form(double x, double y, double t, double k) {
  const double decay = sd_temporal_factor(t);
  const double s = std::sin(kPi * y);
  FieldSample f;
  f.phi = (std::exp(y) - std::exp(-y)) * std::sin(x) * decay;
  f.u1 = (k / kPi) * std::sin(2.0 * kPi * y) * std::cos(x) * decay;
  f.u2 = (-2.0 * k + (k / (kPi * kPi)) * s * s) * std::sin(x) * decay;
  f.p = 0.0;
  return f;
}

FieldSample nsd_closed_form(double x, double y, double t) {
  const double c = nsd_temporal_factor(t);
  const double shape = 2.0 - kPi * std::sin(kPi * x);
  FieldSample f;
  f.phi = shape * (-y + std::cos(kPi * (1.0 - y))) * c;
  f.u1 = (x * x * y * y + std::exp(-y)) * c;
  f.u2 = (-(2.0 / 3.0) * x * y * y * y + shape) * c;
  f.p = -shape * std::cos(2.0 * kPi * y) * c;
  return f;
}

FieldSample eval_exact_sd(double x, double y, double t, double k) {
  check_inside(x, y, {0.0, kPi}, {-1.0, 1.0}, "eval_exact_sd");
  if (!(k > 0.0)) throw PreconditionError("eval_exact_sd: conductivity k must be positive");
  return restrict_to_sides(sd_closed_form(x, y, t, k), y, 0.0);
}

FieldSample eval_exact_nsd(double x, double y, double t) {
  check_inside(x, y, {0.0, 1.0}, {-0.25, 0.75}, "eval_exact_nsd");
  return restrict_to_sides(nsd_closed_form(x, y, t), y, 0.0);
}

FieldSample eval_forced_field(double x, double y, double t, double f, double ramp_time) {
  if (!(f > 0.0) || !(ramp_time > 0.0)) {
    throw PreconditionError("eval_forced_field: frequency and ramp time must be positive");
  }
  check_inside(x, y, {0.0, 1.0}, {-0.25, 0.75}, "eval_forced_field");
  const FieldSample spatial = restrict_to_sides(nsd_closed_form(x, y, 0.0), y, 0.0);
  return scale(spatial, forced_temporal_factor(t, f, ramp_time));
}

FieldSample eval_exact(const DomainSpec& domain, double x, double y, double t) {
  switch (domain.example_id) {
    case ExampleId::SdEx1:
      return eval_exact_sd(x, y, t);
    case ExampleId::NsdEx2:
      return eval_exact_nsd(x, y, t);
    case ExampleId::ForcedSyn:
      return eval_forced_field(x, y, t, domain.forcing_frequency, domain.ramp_time);
  }
  throw ConfigError("unknown example id");
}

}  // namespace vitk
