#include "vpidm/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace vpidm {

namespace {

double require_positive_variance(const Schedule& s, double tau, const char* where) {
  const double var = state_variance(s, tau);
  if (!(var > 0.0))
    throw InvalidArgument(std::string(where) + ": density is degenerate at tau=" +
                          std::to_string(tau) + " (G = 0)");
  return var;
}

}  // namespace

ComplexSpectrum interpolate(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                            const Schedule& s, double tau) {
  require_same_shape(clean, noisy, "interpolate");
  const double lambda = clean_weight(s, tau);
  const double eta = noise_weight(s, tau);
  ComplexSpectrum v(clean.frames(), clean.bins());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = lambda * clean[i] + eta * noisy[i];
  return v;
}

ComplexSpectrum conditional_mean(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                                 const Schedule& s, double tau) {
  ComplexSpectrum u = interpolate(clean, noisy, s, tau);
  u *= mean_scale(s, tau);
  return u;
}

DiffusionState state_from_draw(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                               const Schedule& s, double tau, const ComplexSpectrum& draw) {
  require_same_shape(clean, draw, "state_from_draw");
  ComplexSpectrum st = conditional_mean(clean, noisy, s, tau);
  st.add_scaled(draw, state_sd(s, tau));
  return {std::move(st), tau};
}

std::pair<DiffusionState, ComplexGaussianDraw> forward_sample(const ComplexSpectrum& clean,
                                                              const ComplexSpectrum& noisy,
                                                              const Schedule& s, double tau,
                                                              Rng& rng) {
  require_same_shape(clean, noisy, "forward_sample");
  require_tau_in_range(s, tau, "forward_sample");
  ComplexGaussianDraw draw{{}, rng.provenance()};
  draw.noise = rng.complex_normal(clean.frames(), clean.bins());
  DiffusionState st = state_from_draw(clean, noisy, s, tau, draw.noise);
  return {std::move(st), std::move(draw)};
}

double log_density(const DiffusionState& st, const ComplexSpectrum& clean,
                   const ComplexSpectrum& noisy, const Schedule& s) {
  require_same_shape(st.state, clean, "log_density");
  const double var = require_positive_variance(s, st.tau, "log_density");
  const ComplexSpectrum residual = st.state - conditional_mean(clean, noisy, s, st.tau);
  const auto dims = static_cast<double>(st.state.size());
  return -dims * std::log(std::numbers::pi * var) - residual.squared_norm() / var;
}

ComplexSpectrum analytic_score(const DiffusionState& st, const ComplexSpectrum& clean,
                               const ComplexSpectrum& noisy, const Schedule& s) {
  require_same_shape(st.state, clean, "analytic_score");
  const double var = require_positive_variance(s, st.tau, "analytic_score");
  ComplexSpectrum score = conditional_mean(clean, noisy, s, st.tau) - st.state;
  score *= 1.0 / var;
  return score;
}

double initial_error_norm(const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                          const Schedule& s) {
  ComplexSpectrum approx = noisy;
  approx *= mean_scale(s, s.T);
  approx -= conditional_mean(clean, noisy, s, s.T);
  return std::sqrt(approx.squared_norm());
}

}  // namespace vpidm
