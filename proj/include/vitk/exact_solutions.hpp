#pragma once

#include "vitk/geometry.hpp"

namespace vitk {

/// Point value of the coupled state.  Velocity and pressure live in the
/// free-flow region, the hydraulic head in the porous region; the other side
/// is zero-filled.
struct FieldSample {
  double u1 = 0.0;
  double u2 = 0.0;
  double p = 0.0;
  double phi = 0.0;
};

/// Dissipative Stokes-Darcy benchmark on [0,pi]x[-1,1], conductivity k.
FieldSample eval_exact_sd(double x, double y, double t, double k = 1.0);

/// Time-periodic Navier-Stokes-Darcy benchmark on [0,1]x[-0.25,0.75].
FieldSample eval_exact_nsd(double x, double y, double t);

/// NSD spatial modes driven by a ramped pulsatile factor
/// alpha(t) * (1 + 0.4 sin(2 pi f t)).
FieldSample eval_forced_field(double x, double y, double t, double f, double ramp_time);

/// Unrestricted closed forms (no side masking, no domain check).  Used by the
/// interface residual computation, which needs both sides on the interface.
FieldSample sd_closed_form(double x, double y, double t, double k = 1.0);
FieldSample nsd_closed_form(double x, double y, double t);

double sd_temporal_factor(double t);
double nsd_temporal_factor(double t);
double forcing_ramp(double t, double ramp_time);
double forced_temporal_factor(double t, double f, double ramp_time);

/// Dispatch on the domain's example id (uses the domain's forcing settings).
FieldSample eval_exact(const DomainSpec& domain, double x, double y, double t);

}  // namespace vitk
