#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "vpidm/sde.hpp"

using namespace vpidm;
using Catch::Approx;

namespace {

ComplexSpectrum scalar(Complex v) { return ComplexSpectrum(1, 1, v); }

Schedule with_variant(Variant v) {
  Schedule s;
  s.variant = v;
  return s;
}

// Radicand of the diffusion coefficient, built only from schedule values:
// d G^2/dtau - 2 G^2 d ln(alpha lambda)/dtau, both by central differences.
double fd_radicand(const Schedule& s, double tau, double h = 1e-5) {
  auto var = [&](double t) { return state_variance(s, t); };
  auto log_mean = [&](double t) { return std::log(mean_scale(s, t) * clean_weight(s, t)); };
  const double lo = std::max(0.0, tau - h), hi = std::min(s.T, tau + h);
  const double d_var = (var(hi) - var(lo)) / (hi - lo);
  const double d_log = (log_mean(hi) - log_mean(lo)) / (hi - lo);
  return d_var - 2.0 * var(tau) * d_log;
}

}  // namespace

TEST_CASE("drift against the noisy input: examples") {
  const Schedule s;
  DiffusionState st{scalar(1.0), 0.5};
  CHECK(drift_noisy(st, scalar(0.0), s)[0].real() == Approx(-2.025).epsilon(1e-14));
  st.state = scalar(0.0);
  CHECK(drift_noisy(st, scalar(1.0), s)[0].real() == Approx(1.299156370586).epsilon(1e-11));

  const Schedule ve = with_variant(Variant::veidm);
  DiffusionState v{scalar(2.0), 0.37};
  CHECK(drift_noisy(v, scalar(5.0), ve)[0].real() == Approx(4.5).epsilon(1e-14));
  // gamma (Y - S) on random spectra
  const auto y = test::random_spectrum(3, 5, 1);
  DiffusionState r{test::random_spectrum(3, 5, 2), 0.8};
  const auto f = drift_noisy(r, y, ve);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Complex want = 1.5 * (y[i] - r.state[i]);
    CHECK(std::abs(f[i] - want) <= 1e-14 * std::abs(want));
  }
}

TEST_CASE("drift against the target noise: examples") {
  const Schedule s;
  DiffusionState st{scalar(1.0), 0.5};
  CHECK(drift_target_noise(st, scalar(0.0), s)[0].real() == Approx(-0.525).epsilon(1e-14));

  const Schedule ve = with_variant(Variant::veidm);
  const auto n = test::random_spectrum(2, 3, 3);
  DiffusionState v{test::random_spectrum(2, 3, 4), 0.6};
  const auto f = drift_target_noise(v, n, ve);
  const double d_eta = d_noise_weight(ve, 0.6);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - d_eta * n[i]) < 1e-15);
}

TEST_CASE("the two drifts agree on the mean") {
  for (Variant var : {Variant::vpidm, Variant::vpdm, Variant::veidm}) {
    const Schedule s = with_variant(var);
    const auto x = test::random_spectrum(4, 6, 5);
    const auto n = test::random_spectrum(4, 6, 6);
    const auto y = x + n;
    for (double tau : {0.01, 0.3, 0.5, 0.9, 1.0}) {
      DiffusionState st{conditional_mean(x, y, s, tau), tau};
      const auto a = drift_noisy(st, y, s);
      const auto b = drift_target_noise(st, n, s);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }
}

TEST_CASE("drift is affine in the state") {
  const Schedule s;
  const auto y = test::random_spectrum(2, 4, 7);
  const auto s1 = test::random_spectrum(2, 4, 8);
  const auto s2 = test::random_spectrum(2, 4, 9);
  for (double a : {-0.5, 0.3, 1.7}) {
    const double tau = 0.45;
    const auto mix = a * s1 + (1.0 - a) * s2;
    const auto lhs = drift_noisy({mix, tau}, y, s);
    const auto rhs = a * drift_noisy({s1, tau}, y, s) + (1.0 - a) * drift_noisy({s2, tau}, y, s);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-12);
  }
}

TEST_CASE("drift rejects tau outside (0, T]") {
  const Schedule s;
  const auto y = scalar(1.0);
  CHECK_THROWS_AS(drift_noisy({scalar(1.0), 0.0}, y, s), InvalidArgument);
  CHECK_THROWS_AS(drift_noisy({scalar(1.0), 1.2}, y, s), InvalidArgument);
  CHECK_THROWS_AS(drift_target_noise({scalar(1.0), -0.1}, y, s), InvalidArgument);
  CHECK_THROWS_AS(drift_noisy({scalar(1.0), 0.5}, ComplexSpectrum(1, 2), s), ShapeMismatch);
}

TEST_CASE("diffusion coefficient: spot values") {
  const Schedule s;
  CHECK(diffusion_coefficient(s, 0.0) == Approx(0.316227766017).epsilon(1e-11));
  CHECK(diffusion_coefficient(s, 0.5) == Approx(1.341488091519).epsilon(1e-11));
  const double g = diffusion_coefficient(s, 0.5);
  CHECK(g * g == Approx(1.799590299687).epsilon(1e-11));
  // vpdm: g^2 = beta
  const Schedule vpdm = with_variant(Variant::vpdm);
  for (double tau : {0.0, 0.5, 1.0})
    CHECK(std::pow(diffusion_coefficient(vpdm, tau), 2) == Approx(beta_rate(vpdm, tau)).epsilon(1e-14));
}

TEST_CASE("diffusion coefficient matches the finite-difference radicand") {
  Rng rng(123);
  for (Variant var : {Variant::vpidm, Variant::vpdm, Variant::veidm}) {
    const Schedule s = with_variant(var);
    INFO(to_string(var));
    for (int i = 0; i < 100; ++i) {
      const double tau = 1.0 - rng.uniform();  // (0, 1]
      const double g = diffusion_coefficient(s, tau);
      CHECK(g * g == Approx(fd_radicand(s, tau)).epsilon(1e-6));
      CHECK(diffusion_radicand(s, tau) == Approx(g * g).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean dynamics split into two terms") {
  const Schedule s;
  const auto x = test::random_spectrum(2, 3, 10);
  const auto n = test::random_spectrum(2, 3, 11);
  const auto y = x + n;
  const double tau = 0.5, h = 1e-5;
  const auto u = conditional_mean(x, y, s, tau);
  const auto terms = decompose_mean_ode(u, n, s, tau);
  const auto fd = (1.0 / (2 * h)) * (conditional_mean(x, y, s, tau + h) - conditional_mean(x, y, s, tau - h));
  const auto sum = terms.amplitude_term + terms.noise_term;
  for (std::size_t i = 0; i < fd.size(); ++i) CHECK(std::abs(sum[i] - fd[i]) <= 1e-6 * std::abs(fd[i]));

  const auto zero_n = decompose_mean_ode(u, ComplexSpectrum(2, 3), s, tau);
  CHECK(zero_n.noise_term.squared_norm() == 0.0);

  const Schedule ve = with_variant(Variant::veidm);
  const auto ve_terms = decompose_mean_ode(conditional_mean(x, y, ve, tau), n, ve, tau);
  CHECK(ve_terms.amplitude_term.squared_norm() == 0.0);
}

TEST_CASE("Euler-Maruyama marginals match the state equation") {
  const Schedule s;
  ComplexSpectrum x(1, 4), y(1, 4);
  x[0] = {1.0, 0.0};
  x[1] = {0.0, -0.5};
  x[2] = {0.3, 0.3};
  x[3] = {-0.8, 0.1};
  for (std::size_t m = 0; m < 4; ++m) y[m] = x[m] + Complex(0.4, -0.2) * double(m + 1);

  ForwardSimulationOptions opts;
  opts.seed = 99;
  opts.threads = 1;
  const auto stats = simulate_forward_em(x, y, s, opts);
  REQUIRE(stats.size() == 3u);
  for (const auto& st : stats) {
    const auto u = conditional_mean(x, y, s, st.tau);
    const double var = state_variance(s, st.tau);
    for (std::size_t m = 0; m < 4; ++m) {
      INFO("tau " << st.tau << " bin " << m);
      // stderr is for the complex mean; each component carries half of it
      const double se = st.mean_stderr[m] / std::sqrt(2.0);
      CHECK(std::abs(st.mean[m].real() - u[m].real()) < 4.0 * se);
      CHECK(std::abs(st.mean[m].imag() - u[m].imag()) < 4.0 * se);
      CHECK(st.variance[m] == Approx(var).epsilon(0.05));
    }
  }
}

TEST_CASE("Euler-Maruyama mean bias is first order") {
  const Schedule s;
  const auto x = scalar(1.0);
  const auto y = scalar(-1.0);
  const Complex target = conditional_mean(x, y, s, 1.0)[0];
  std::vector<double> bias;
  for (int steps : {5, 10, 20}) {
    ForwardSimulationOptions opts;
    opts.n_paths = 200000;
    opts.n_steps = steps;
    opts.checkpoints = {1.0};
    opts.seed = 7;
    const auto stats = simulate_forward_em(x, y, s, opts);
    bias.push_back(std::abs(stats[0].mean[0] - target));
  }
  INFO("bias " << bias[0] << " " << bias[1] << " " << bias[2]);
  CHECK(bias[0] / bias[1] == Approx(2.0).margin(0.4));
  CHECK(bias[1] / bias[2] == Approx(2.0).margin(0.4));
}

TEST_CASE("Euler-Maruyama results do not depend on the thread count") {
  const Schedule s;
  const auto x = test::random_spectrum(1, 4, 12);
  const auto y = test::random_spectrum(1, 4, 13);
  ForwardSimulationOptions opts;
  opts.n_paths = 1500;
  opts.n_steps = 100;
  opts.seed = 5;
  opts.threads = 1;
  const auto a = simulate_forward_em(x, y, s, opts);
  opts.threads = 3;
  const auto b = simulate_forward_em(x, y, s, opts);
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(a[c].mean == b[c].mean);
    CHECK(a[c].variance == b[c].variance);
  }

  opts.checkpoints = {0.333};
  CHECK_THROWS_AS(simulate_forward_em(x, y, s, opts), InvalidArgument);
}

TEST_CASE("marginals CSV layout") {
  const Schedule s;
  const auto x = test::random_spectrum(1, 2, 14);
  const auto y = test::random_spectrum(1, 2, 15);
  ForwardSimulationOptions opts;
  opts.n_paths = 300;
  opts.n_steps = 20;
  opts.checkpoints = {0.5, 1.0};
  const auto stats = simulate_forward_em(x, y, s, opts);
  std::ostringstream out;
  write_marginals_csv(out, stats, x, y, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau,bin,quantity,analytic,empirical,stderr");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 2 * 3);
}
