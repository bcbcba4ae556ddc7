#pragma once

namespace normcrit {

// Problem data: self-interactions, coupling, perturbation strengths,
// subcritical exponent and the two prescribed L2 norms.
struct ModelParams {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double beta = 2.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double p = 2.5;
  double a1 = 0.1;
  double a2 = 0.1;

  // 2(p-2)/p
  double gamma_p() const noexcept { return 2.0 * (p - 2.0) / p; }
  // Throws construction error when p, mu or a is out of range.
  void validate() const;
};

double gamma_p(double p) noexcept;

}  // namespace normcrit
