#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "vpidm/diffusion.hpp"
#include "vpidm/score.hpp"
#include "vpidm/score_model.hpp"

namespace vpidm::cli {

namespace {

// Second-order finite difference that stays inside [lo, hi].
double derivative(const std::function<double(double)>& f, double x, double lo, double hi,
                  double h = 1e-5) {
  if (x - h < lo) return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
  if (x + h > hi) return (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

ComplexSpectrum toy_spectrum(std::initializer_list<Complex> values) {
  ComplexSpectrum x(1, values.size());
  std::size_t i = 0;
  for (const auto& v : values) x[i++] = v;
  return x;
}

ComplexSpectrum random_spectrum(Rng& rng, std::size_t bins, double scale) {
  ComplexSpectrum x = rng.complex_normal(1, bins);
  x *= scale;
  return x;
}

double random_tau(const Schedule& s, Rng& rng) { return s.T * (1.0 - rng.uniform()); }

double max_abs_diff(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double max_abs(const ComplexSpectrum& a) {
  double worst = 0.0;
  for (const auto& v : a.values()) worst = std::max(worst, std::abs(v));
  return worst;
}

CheckResult check(std::string name, double value, double tolerance, std::string detail = {}) {
  return {std::move(name), value <= tolerance, value, tolerance, std::move(detail)};
}

bool is_default_vpidm(const Schedule& s) {
  Schedule d;
  return schedule_hash(d) == schedule_hash(s);
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport run_verification(const VerifyOptions& opts) {
  const Schedule& s = opts.schedule;
  s.validate();
  VerifyReport report;
  auto& checks = report.checks;
  Rng rng(opts.seed);
  const double g_factor = 1.0 + opts.perturb_g;

  // Diffusion coefficient: closed form against the finite-difference radicand.
  {
    auto log_mean_coef = [&](double t) { return std::log(mean_scale(s, t) * clean_weight(s, t)); };
    auto variance = [&](double t) { return state_variance(s, t); };
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double tau = random_tau(s, rng);
      const double radicand = derivative(variance, tau, 0.0, s.T) -
                              2.0 * state_variance(s, tau) * derivative(log_mean_coef, tau, 0.0, s.T);
      const double fd_g = std::sqrt(radicand);
      const double g = g_factor * diffusion_coefficient(s, tau);
      worst = std::max(worst, std::abs(g - fd_g) / fd_g);
    }
    checks.push_back(check("diffusion_g_vs_finite_difference", worst, 1e-6, "100 random tau, relative"));
  }
  if (is_default_vpidm(s)) {
    const double e0 = std::abs(g_factor * diffusion_coefficient(s, 0.0) - 0.316227766017);
    const double e5 = std::abs(g_factor * diffusion_coefficient(s, 0.5) - 1.341488091519);
    checks.push_back(check("diffusion_g_spot_values", std::max(e0, e5), 1e-9, "g(0), g(0.5)"));
  }

  // Drift forms agree on the mean and the drift is affine in S.
  {
    double worst_identity = 0.0, worst_affine = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double tau = random_tau(s, rng);
      const ComplexSpectrum x = random_spectrum(rng, 4, 0.5);
      const ComplexSpectrum n = random_spectrum(rng, 4, 0.3);
      const ComplexSpectrum y = x + n;
      const ComplexSpectrum u = conditional_mean(x, y, s, tau);
      const ComplexSpectrum fy = drift_noisy({u, tau}, y, s);
      const ComplexSpectrum fn = drift_target_noise({u, tau}, n, s);
      worst_identity = std::max(worst_identity, max_abs_diff(fy, fn) / (1.0 + max_abs(fy)));

      const ComplexSpectrum s1 = random_spectrum(rng, 4, 1.0);
      const ComplexSpectrum s2 = random_spectrum(rng, 4, 1.0);
      const double a = rng.uniform();
      const ComplexSpectrum mix = a * s1 + (1.0 - a) * s2;
      const ComplexSpectrum lhs = drift_noisy({mix, tau}, y, s);
      const ComplexSpectrum rhs = a * drift_noisy({s1, tau}, y, s) + (1.0 - a) * drift_noisy({s2, tau}, y, s);
      worst_affine = std::max(worst_affine, max_abs_diff(lhs, rhs) / (1.0 + max_abs(lhs)));
    }
    checks.push_back(check("drift_forms_agree_on_mean", worst_identity, 1e-12));
    checks.push_back(check("drift_affine_in_state", worst_affine, 1e-12));
  }

  // Two-term mean dynamics against finite differences of U(tau).
  {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double tau = random_tau(s, rng);
      const ComplexSpectrum x = random_spectrum(rng, 4, 0.5);
      const ComplexSpectrum n = random_spectrum(rng, 4, 0.3);
      const ComplexSpectrum y = x + n;
      const MeanOdeTerms terms = decompose_mean_ode(conditional_mean(x, y, s, tau), n, s, tau);
      for (std::size_t b = 0; b < 4; ++b) {
        auto re = [&](double t) { return conditional_mean(x, y, s, t)[b].real(); };
        auto im = [&](double t) { return conditional_mean(x, y, s, t)[b].imag(); };
        const Complex fd(derivative(re, tau, 0.0, s.T), derivative(im, tau, 0.0, s.T));
        const Complex sum = terms.amplitude_term[b] + terms.noise_term[b];
        worst = std::max(worst, std::abs(sum - fd) / std::max(1e-3, std::abs(fd)));
      }
    }
    checks.push_back(check("mean_ode_terms_vs_finite_difference", worst, 1e-6));
  }

  // Monte Carlo marginals of the forward SDE.
  {
    report.em_clean = toy_spectrum({{0.5, 0.2}, {-0.3, 0.1}, {0.1, -0.4}, {0.8, 0.0}});
    const ComplexSpectrum n = toy_spectrum({{0.3, -0.1}, {0.2, 0.4}, {-0.5, 0.0}, {0.0, 0.25}});
    report.em_noisy = report.em_clean + n;
    ForwardSimulationOptions fo;
    fo.n_paths = opts.em_paths;
    fo.n_steps = opts.em_steps;
    fo.checkpoints = {0.25 * s.T, 0.5 * s.T, s.T};
    fo.seed = mix_seed(opts.seed, 77);
    fo.threads = opts.threads;
    report.marginals = simulate_forward_em(report.em_clean, report.em_noisy, s, fo);
    for (const auto& st : report.marginals) {
      const ComplexSpectrum u = conditional_mean(report.em_clean, report.em_noisy, s, st.tau);
      const double g2 = state_variance(s, st.tau);
      double worst_z = 0.0, worst_var = 0.0;
      for (std::size_t b = 0; b < st.mean.size(); ++b) {
        const double se = st.mean_stderr[b] / std::sqrt(2.0);
        worst_z = std::max({worst_z, std::abs(st.mean[b].real() - u[b].real()) / se,
                            std::abs(st.mean[b].imag() - u[b].imag()) / se});
        worst_var = std::max(worst_var, std::abs(st.variance[b] - g2) / g2);
      }
      std::ostringstream tag;
      tag << "tau=" << st.tau;
      checks.push_back(check("sde_marginal_mean", worst_z, 4.0, tag.str() + ", standard errors"));
      checks.push_back(check("sde_marginal_variance", worst_var, 0.05, tag.str() + ", relative"));
    }
  }

  // Score against finite differences of the log-density (Wirtinger form).
  {
    double worst = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < 50; ++i) {
      const double tau = 0.1 * s.T + 0.9 * s.T * rng.uniform();
      const ComplexSpectrum x = random_spectrum(rng, 4, 0.5);
      const ComplexSpectrum y = x + random_spectrum(rng, 4, 0.3);
      DiffusionState st{conditional_mean(x, y, s, tau) + random_spectrum(rng, 4, state_sd(s, tau)), tau};
      const ComplexSpectrum score = analytic_score(st, x, y, s);
      for (std::size_t b = 0; b < 4; ++b) {
        auto lp = [&](Complex shift) {
          DiffusionState moved = st;
          moved.state[b] += shift;
          return log_density(moved, x, y, s);
        };
        const double d_re = (lp({h, 0}) - lp({-h, 0})) / (2.0 * h);
        const double d_im = (lp({0, h}) - lp({0, -h})) / (2.0 * h);
        const Complex fd(0.5 * d_re, 0.5 * d_im);
        worst = std::max(worst, std::abs(score[b] - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    checks.push_back(check("score_vs_log_density_gradient", worst, 1e-4));
  }

  // Denoising score-matching loss for the oracle and for Psi = 0.
  {
    std::vector<TrainingPair> batch;
    for (int i = 0; i < 2500; ++i) {
      const ComplexSpectrum x = random_spectrum(rng, 4, 0.5);
      batch.push_back({x, x + random_spectrum(rng, 4, 0.3)});
    }
    OracleScore oracle(batch, s);
    Rng loss_rng(mix_seed(opts.seed, 5));
    const double oracle_loss = dsm_loss(oracle, batch, s, loss_rng);
    checks.push_back(check("dsm_loss_oracle_zero", oracle_loss, 1e-20, "exact up to round-off"));
    const double zero_loss = dsm_loss(ZeroScore{}, batch, s, loss_rng);
    checks.push_back(check("dsm_loss_zero_score_unit", std::abs(zero_loss - 1.0), 0.05,
                           "10^4 bin samples"));
  }

  // Model gradients against central differences on a 10-parameter model.
  {
    ModelConfig toy{1, 1, 1, 0, 2};
    SmallScoreModel model(toy, s, mix_seed(opts.seed, 9));
    Rng prng(mix_seed(opts.seed, 10));
    for (double& p : model.params()) p = 0.5 * prng.normal();
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 2; ++i) {
      const ComplexSpectrum x = random_spectrum(prng, 12, 0.5);
      ComplexSpectrum xx(3, 4), yy(3, 4);
      for (std::size_t k = 0; k < 12; ++k) {
        xx[k] = x[k];
        yy[k] = x[k] + 0.3 * prng.complex_normal();
      }
      pairs.push_back({xx, yy});
    }
    TrainingBatchSampler sampler(pairs, s, 3, 3, mix_seed(opts.seed, 11));
    const auto batch = sampler.next();
    std::vector<double> grad;
    model.loss_and_gradient(batch, &grad);
    double worst = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double saved = model.params()[i];
      const double h = 1e-6;
      model.params()[i] = saved + h;
      const double up = model.loss_and_gradient(batch, nullptr);
      model.params()[i] = saved - h;
      const double down = model.loss_and_gradient(batch, nullptr);
      model.params()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(grad[i] - fd) / std::max(1e-3, std::abs(fd)));
    }
    checks.push_back(check("model_gradient_vs_finite_difference", worst, 1e-4,
                           std::to_string(grad.size()) + " parameters"));
  }

  // Variant-specific reductions.
  const ComplexSpectrum x = toy_spectrum({{0.5, 0.2}, {-0.3, 0.1}});
  const ComplexSpectrum y = toy_spectrum({{0.9, -0.4}, {0.2, 0.6}});
  const ComplexSpectrum st = toy_spectrum({{0.1, 0.1}, {-1.0, 0.5}});
  if (s.variant == Variant::veidm) {
    double worst_drift = 0.0, worst_scale = 0.0, worst_term = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double tau = random_tau(s, rng);
      const ComplexSpectrum f = drift_noisy({st, tau}, y, s);
      for (std::size_t b = 0; b < 2; ++b)
        worst_drift = std::max(worst_drift, std::abs(f[b] - s.gamma * (y[b] - st[b])));
      worst_scale = std::max(worst_scale, std::abs(mean_scale(s, tau) - 1.0));
      worst_term = std::max(worst_term, max_abs(decompose_mean_ode(st, y - x, s, tau).amplitude_term));
    }
    checks.push_back(check("veidm_drift_is_gamma_times_difference", worst_drift, 1e-15));
    checks.push_back(check("veidm_mean_scale_is_one", worst_scale, 0.0));
    checks.push_back(check("veidm_amplitude_term_zero", worst_term, 0.0));
  } else if (s.variant == Variant::vpdm) {
    double worst_interp = 0.0, worst_g = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double tau = random_tau(s, rng);
      worst_interp = std::max(worst_interp, max_abs_diff(interpolate(x, y, s, tau), x));
      const double g = g_factor * diffusion_coefficient(s, tau);
      worst_g = std::max(worst_g, std::abs(g * g - beta_rate(s, tau)) / beta_rate(s, tau));
    }
    checks.push_back(check("vpdm_interpolation_is_clean", worst_interp, 0.0));
    checks.push_back(check("vpdm_diffusion_is_beta", worst_g, 1e-12));
  } else {
    Schedule no_interp = s;
    no_interp.gamma = 0.0;
    Schedule vpdm = s;
    vpdm.variant = Variant::vpdm;
    const ComplexSpectrum z = toy_spectrum({{0.3, -1.1}, {0.7, 0.2}});
    bool identical = true;
    for (double tau : {0.1, 0.5, 1.0}) {
      identical = identical && state_from_draw(x, y, no_interp, tau, z).state ==
                                   state_from_draw(x, y, vpdm, tau, z).state;
    }
    checks.push_back(check("vpidm_without_interpolation_equals_vpdm", identical ? 0.0 : 1.0, 0.0,
                           "bitwise, shared draw"));
    Schedule ve = s;
    ve.variant = Variant::veidm;
    const double ratio = initial_error_norm(x, y, s) / initial_error_norm(x, y, ve);
    checks.push_back(check("initial_error_ratio_is_alpha_T", std::abs(ratio - mean_scale(s, s.T)),
                           1e-9));
  }
  return report;
}

void write_report_csv(std::ostream& out, const std::vector<CheckResult>& checks) {
  out << "check,status,value,tolerance,detail\n";
  out.precision(10);
  for (const auto& c : checks)
    out << c.name << ',' << (c.passed ? "pass" : "FAIL") << ',' << c.value << ',' << c.tolerance
        << ",\"" << c.detail << "\"\n";
}

}  // namespace vpidm::cli
