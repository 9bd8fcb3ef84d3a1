#ifndef POSTADJ_CONDEX_SELF_INCONSISTENCY_HPP
#define POSTADJ_CONDEX_SELF_INCONSISTENCY_HPP

namespace postadj::condex {

/// Bivariate symmetric model with exponential margins and
/// [X_j | X_i = y] ~ N(mu + alpha y, sigma^2 y^(2 beta)) for y > t.
struct BivariateParams {
  double mu = 0.0;
  double sigma = 1.0;
  double alpha = 0.9;
  double beta = 0.8;
  double t = 4.0;
};

/// P(X > t, Y > t | max(X, Y) > t) computed along the two integration paths.
struct SelfInconsistency {
  double p_keef = 0.0;       // condition on the larger component
  double p_wadsworth = 0.0;  // average over the components above t
  double q = 0.0;            // P(X_j > t | X_i > t)
  double error_estimate = 0.0;
  bool converged = false;
};

SelfInconsistency self_inconsistency_demo(const BivariateParams& p);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_SELF_INCONSISTENCY_HPP
