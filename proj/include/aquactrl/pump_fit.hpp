#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aquactrl/network.hpp"

namespace aquactrl {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Convex surrogate of the pump curve,
// dh_app(q, s) = b1 q^2 + b2 q + b3 s^2 + b4 with b1, b3 >= 0.
struct PumpCurveFit {
  double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0, beta4 = 0.0;
  double residual = 0.0;  // RMS against the sampled curve

  double eval(double q, double s) const {
    return beta1 * q * q + beta2 * q + beta3 * s * s + beta4;
  }
};

using OperatingGrid = std::vector<std::pair<double, double>>;  // (q, s) samples

// Least squares against the exact signed head change, with the two
// curvature coefficients clipped to the nonnegative orthant (active-set
// over the sign constraints). Throws FitError on a rank-deficient grid.
PumpCurveFit fit_pump_curve(const Pump& pump, const OperatingGrid& grid);

// Fit core against explicit sample values (the unit-test oracle entry).
PumpCurveFit fit_curve_surrogate(const OperatingGrid& grid,
                                 const std::vector<double>& values);

// Default sampling grid over the pump's operating box.
OperatingGrid default_operating_grid(const Pump& pump, int n_q = 8, int n_s = 5);

struct EfficiencyModel {
  double eta = 0.75;  // constant by default
  double operator()(double /*q*/, double /*s*/) const { return eta; }
};

// Instantaneous pump cost rate in $/h: tariff * rho g q dh / eta, with the
// head gain clamped at zero beyond runout.
double pump_power_cost_rate(const Pump& pump, double q, double s, double tariff,
                            const EfficiencyModel& eta);

// Convex second-order surrogate of the cost rate in (q, s).
struct PowerFit {
  double theta1 = 0, theta2 = 0, theta3 = 0, theta4 = 0, theta5 = 0, theta6 = 0;
  double tariff = 0.0;  // $/kWh folded into the fitted samples
  double residual = 0.0;

  double eval(double q, double s) const {
    return theta1 + theta2 * q + theta3 * q * q + theta4 * s + theta5 * s * s +
           theta6 * q * s;
  }
  Eigen::Matrix2d hessian() const {
    Eigen::Matrix2d h;
    h << 2 * theta3, theta6, theta6, 2 * theta5;
    return h;
  }
};

// Constrained least squares: minimize the squared error against the exact
// cost rate subject to the (q, s) Hessian being PSD. Needs at least six
// operating points spanning the domain. Throws FitError when the design is
// rank deficient.
PowerFit fit_power(const Pump& pump, double tariff, const EfficiencyModel& eta,
                   const OperatingGrid& points);

PowerFit fit_power_surrogate(const OperatingGrid& points,
                             const std::vector<double>& values);

}  // namespace aquactrl
