#pragma once

#include <utility>

#include "vpidm/rng.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/types.hpp"

namespace vpidm {

/// State of the forward process at index tau.
struct DiffusionState {
  ComplexSpectrum state;
  double tau = 0.0;
};

/// A complex Gaussian draw together with the stream position it came from.
struct ComplexGaussianDraw {
  ComplexSpectrum noise;
  DrawProvenance provenance;
};

/// Deterministic interpolation V(tau) = lambda X + (1 - lambda) Y, i.e.
/// X + eta (Y - X). The target noise is added as tau grows.
ComplexSpectrum interpolate(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                            const Schedule& s, double tau);

/// Mean of the state: U(tau) = alpha(tau) V(tau).
ComplexSpectrum conditional_mean(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                                 const Schedule& s, double tau);

/// S = alpha V + G Z for a given draw Z.
DiffusionState state_from_draw(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                               const Schedule& s, double tau, const ComplexSpectrum& draw);

/// Samples S(tau) from the state equation with a fresh draw, which is
/// returned so that a training loss can target it.
std::pair<DiffusionState, ComplexGaussianDraw> forward_sample(const ComplexSpectrum& clean,
                                                              const ComplexSpectrum& noisy,
                                                              const Schedule& s, double tau,
                                                              Rng& rng);

/// ln p(S | X, Y) = -LM ln(pi G^2) - ||S - U||^2 / G^2. Requires G(tau) > 0.
double log_density(const DiffusionState& st, const ComplexSpectrum& clean,
                   const ComplexSpectrum& noisy, const Schedule& s);

/// Gradient of ln p with respect to conj(S): -(S - U) / G^2. Requires G(tau) > 0.
ComplexSpectrum analytic_score(const DiffusionState& st, const ComplexSpectrum& clean,
                               const ComplexSpectrum& noisy, const Schedule& s);

/// Bias of the noisy initialization at tau = T: || alpha_T Y - U(T) ||.
double initial_error_norm(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                          const Schedule& s);

}  // namespace vpidm
