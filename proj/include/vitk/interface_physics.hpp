#pragma once

#include <span>
#include <vector>

#include "vitk/geometry.hpp"

namespace vitk {

/// Unit physical parameters of both benchmarks.
struct PhysicalParams {
  double nu = 1.0;     // kinematic viscosity
  double g = 1.0;      // gravitational acceleration
  double k = 1.0;      // isotropic hydraulic conductivity
  double alpha = 1.0;  // Beavers-Joseph slip coefficient
};

/// Max-abs residuals of the interface coupling conditions over the sampled
/// points.  Flux: u_S.n_S + u_D.n_D with u_D = -K grad(phi).  Normal stress:
/// -n_S.T.n_S - g (phi - z).  Beavers-Joseph: tangential stress against the
/// slip of u_S relative to u_D.
struct ResidualReport {
  double flux = 0.0;
  double normal_stress = 0.0;
  double beavers_joseph = 0.0;
  int n_points = 0;
};

/// Samples n_points equispaced x positions on the interface (x_min for a
/// single point) and evaluates the residuals from analytic derivatives.
ResidualReport interface_residuals(ExampleId id, double t, int n_points, const PhysicalParams& params = {});

/// Same, at caller-chosen x positions.
ResidualReport interface_residuals_at(ExampleId id, double t, std::span<const double> xs,
                                      const PhysicalParams& params = {});

/// Closed-form first derivatives of a benchmark at (x, y, t); used by the
/// residual computation and exposed for finite-difference testing.
struct FieldGradient {
  double u1_x = 0.0, u1_y = 0.0;
  double u2_x = 0.0, u2_y = 0.0;
  double phi_x = 0.0, phi_y = 0.0;
};
FieldGradient closed_form_gradient(ExampleId id, double x, double y, double t, double k = 1.0);

}  // namespace vitk
