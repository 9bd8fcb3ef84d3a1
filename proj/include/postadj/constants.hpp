#ifndef POSTADJ_CONSTANTS_HPP
#define POSTADJ_CONSTANTS_HPP

#include <cmath>
#include <limits>

// Central tolerance table shared by the library and the test suites.
namespace postadj::tol {

inline constexpr double machine_eps = std::numeric_limits<double>::epsilon();

// SpdMatrix construction: relative asymmetry allowed before rejection.
inline constexpr double symmetry_rel = 1e-10;

// Square-root factors must reproduce their source to this relative Frobenius error.
inline constexpr double sqrt_factor_rel = 1e-10;

// Eigenvalues below this fraction of the largest are clamped in spd_sqrt.
inline constexpr double sqrt_eig_floor_rel = 1e-12;

// Eigenvalue floor for estimated H, J and Godambe matrices.
inline constexpr double sandwich_eig_floor_rel = 1e-10;

// Defining equation C H^-1 C^T = I^-1 (relative Frobenius).
inline constexpr double adjustment_defining_rel = 1e-8;

// Mode finding: gradient norm on the unconstrained scale. The relative part
// covers objectives whose magnitude puts numeric-gradient noise above 1e-6.
inline constexpr double mode_grad_abs = 1e-6;
inline constexpr double mode_grad_rel = 1e-10;

// Central-difference steps, relative to max(1, |x|).
inline const double gradient_step_rel = std::cbrt(machine_eps);
inline const double hessian_step_rel = std::pow(machine_eps, 0.25);

// Near-zero guard for 1 - r(d) in the subtraction-constraint correlation.
inline constexpr double subtraction_corr_guard = 1e-14;

// MCMC tuning-failure threshold on post-adaptation acceptance.
inline constexpr double mcmc_min_acceptance = 0.01;

// Wadsworth/Keef samplers fail when acceptance falls below this.
inline constexpr double global_sampler_min_acceptance = 1e-4;

}  // namespace postadj::tol

#endif  // POSTADJ_CONSTANTS_HPP
