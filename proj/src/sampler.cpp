#include "vpidm/sampler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "vpidm/sde.hpp"

namespace vpidm {

namespace {

StepDiagnostic diagnose(const DiffusionState& st, int k, const ComplexSpectrum& noisy,
                        const ScoreFn& psi, const Schedule& s) {
  StepDiagnostic d;
  d.k = k;
  d.tau = st.tau;
  const auto n = static_cast<double>(st.state.size());
  d.state_norm = std::sqrt(st.state.squared_norm() / n);
  const double eta = noise_weight(s, st.tau);
  if (eta > 0.0) {
    const double ratio = eta / clean_weight(s, st.tau);
    const ComplexSpectrum removed = extract_v_hat(st, noisy, psi, s) - noisy;
    d.residual_proxy = ratio * ratio * removed.squared_norm() / n;
  }
  return d;
}

}  // namespace

std::string_view to_string(SamplerMode m) { return m == SamplerMode::full ? "full" : "early-stop"; }

SamplerMode parse_sampler_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "full") return SamplerMode::full;
  if (lower == "early-stop" || lower == "early_stop") return SamplerMode::early_stop;
  throw InvalidArgument("unknown sampler mode: " + std::string(name));
}

void SamplerConfig::validate() const {
  if (K < 2) throw InvalidArgument("sampler: K must be >= 2");
  if (K1 < 1 || K1 > K) throw InvalidArgument("sampler: K1 must be in [1, K]");
}

void write_diagnostics_csv(std::ostream& out, const std::vector<StepDiagnostic>& rows) {
  out << "k,tau,residual_proxy,state_norm\n";
  out.precision(12);
  for (const auto& r : rows)
    out << r.k << ',' << r.tau << ',' << r.residual_proxy << ',' << r.state_norm << '\n';
}

DiffusionState init_state(const ComplexSpectrum& noisy, const Schedule& s, Rng& rng) {
  const double alpha = mean_scale(s, s.T);
  const double sd = state_sd(s, s.T);
  ComplexSpectrum st = rng.complex_normal(noisy.frames(), noisy.bins());
  st *= sd;
  st.add_scaled(noisy, alpha);
  return {std::move(st), s.T};
}

DiffusionState reverse_step(const DiffusionState& current, const ComplexSpectrum& noisy,
                            const ScoreFn& psi, const Schedule& s, const Grid& grid, int k,
                            const ComplexSpectrum& draw, double diffusion) {
  if (k < 2 || k > grid.K)
    throw InvalidArgument("reverse_step: k=" + std::to_string(k) + " outside [2, K]");
  const double tau = grid.tau(k);
  if (std::abs(current.tau - tau) > 1e-12)
    throw InvalidArgument("reverse_step: state tau does not match grid tau_k");
  require_same_shape(current.state, noisy, "reverse_step");
  require_same_shape(current.state, draw, "reverse_step: draw");

  const ComplexSpectrum score = psi.evaluate(current.state, noisy, tau);
  require_same_shape(score, current.state, "reverse_step: score output");
  const AffineDrift d = noisy_drift_coefficients(s, tau);
  const double g2 = diffusion * diffusion;
  const double delta = grid.delta;
  const double noise_scale = diffusion * std::sqrt(delta);

  DiffusionState next{current.state, grid.tau(k - 1)};
  for (std::size_t i = 0; i < next.state.size(); ++i) {
    const Complex f = d.state_coef * current.state[i] + d.noisy_coef * noisy[i];
    next.state[i] -= (f - g2 * score[i]) * delta;
    next.state[i] += noise_scale * draw[i];
  }
  return next;
}

DiffusionState reverse_step(const DiffusionState& current, const ComplexSpectrum& noisy,
                            const ScoreFn& psi, const Schedule& s, const Grid& grid, int k,
                            Rng& rng) {
  if (k < 2 || k > grid.K)
    throw InvalidArgument("reverse_step: k=" + std::to_string(k) + " outside [2, K]");
  const ComplexSpectrum draw = rng.complex_normal(current.state.frames(), current.state.bins());
  return reverse_step(current, noisy, psi, s, grid, k, draw, diffusion_coefficient(s, grid.tau(k)));
}

DiffusionState sample_reverse(const ComplexSpectrum& noisy, const ScoreFn& psi, const Schedule& s,
                              const Grid& grid, int steps, Rng& rng,
                              std::vector<StepDiagnostic>* diagnostics) {
  if (steps < 0 || steps > grid.K - 1)
    throw InvalidArgument("sample_reverse: steps must be in [0, K - 1]");
  if (!noisy.all_finite()) throw InvalidArgument("sample_reverse: noisy spectrum is not finite");
  DiffusionState st = init_state(noisy, s, rng);
  const int last = grid.K - steps;
  for (int k = grid.K;; --k) {
    if (!st.state.all_finite())
      throw DivergenceError("reverse process diverged at k=" + std::to_string(k) +
                            " (tau=" + std::to_string(st.tau) + ")");
    if (diagnostics) diagnostics->push_back(diagnose(st, k, noisy, psi, s));
    if (k == last) break;
    st = reverse_step(st, noisy, psi, s, grid, k, rng);
  }
  return st;
}

ComplexSpectrum extract_v_hat(const DiffusionState& st, const ComplexSpectrum& noisy,
                              const ScoreFn& psi, const Schedule& s) {
  if (!(st.tau > 0.0)) throw InvalidArgument("extract_v_hat: tau must be > 0");
  const double alpha = mean_scale(s, st.tau);
  if (!(alpha > 0.0)) throw InvalidArgument("extract_v_hat: alpha(tau) is zero");
  ComplexSpectrum v = st.state;
  v.add_scaled(psi.evaluate(st.state, noisy, st.tau), state_variance(s, st.tau));
  if (alpha != 1.0) v *= 1.0 / alpha;
  return v;
}

ComplexSpectrum enhance_spectrum(const ComplexSpectrum& noisy, const ScoreFn& psi,
                                 const Schedule& s, const SamplerConfig& cfg,
                                 std::vector<StepDiagnostic>* diagnostics) {
  cfg.validate();
  const Grid grid = make_grid(s, cfg.K);
  Rng rng(cfg.seed);
  return sample_reverse(noisy, psi, s, grid, cfg.K - 1, rng, diagnostics).state;
}

ComplexSpectrum enhance_early_stop_spectrum(const ComplexSpectrum& noisy, const ScoreFn& psi,
                                            const Schedule& s, const SamplerConfig& cfg,
                                            std::vector<StepDiagnostic>* diagnostics) {
  cfg.validate();
  const Grid grid = make_grid(s, cfg.K);
  Rng rng(cfg.seed);
  const int steps = std::min(cfg.K1, cfg.K - 1);
  const DiffusionState st = sample_reverse(noisy, psi, s, grid, steps, rng, diagnostics);
  return extract_v_hat(st, noisy, psi, s);
}

Waveform enhance(const Waveform& noisy, const ScoreFn& psi, const Schedule& s,
                 const SamplerConfig& cfg, const StftConfig& stft, const CompressionConfig& comp,
                 std::vector<StepDiagnostic>* diagnostics) {
  if (cfg.mode == SamplerMode::early_stop)
    return enhance_early_stop(noisy, psi, s, cfg, stft, comp, diagnostics);
  validate(noisy);
  const ComplexSpectrum y = analyze(noisy, stft, comp);
  const ComplexSpectrum est = enhance_spectrum(y, psi, s, cfg, diagnostics);
  return synthesize(est, stft, comp, noisy.sample_rate, noisy.size());
}

Waveform enhance_early_stop(const Waveform& noisy, const ScoreFn& psi, const Schedule& s,
                            const SamplerConfig& cfg, const StftConfig& stft,
                            const CompressionConfig& comp, std::vector<StepDiagnostic>* diagnostics) {
  validate(noisy);
  const ComplexSpectrum y = analyze(noisy, stft, comp);
  const ComplexSpectrum est = enhance_early_stop_spectrum(y, psi, s, cfg, diagnostics);
  return synthesize(est, stft, comp, noisy.sample_rate, noisy.size());
}

}  // namespace vpidm
