#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vpidm/diffusion.hpp"

using namespace vpidm;
using Catch::Approx;

namespace {

ComplexSpectrum scalar(Complex v) { return ComplexSpectrum(1, 1, v); }

Schedule with_variant(Variant v) {
  Schedule s;
  s.variant = v;
  return s;
}

}  // namespace

TEST_CASE("interpolation examples") {
  const Schedule s;
  const auto x = test::random_spectrum(3, 4, 1);
  const auto y = test::random_spectrum(3, 4, 2);
  CHECK(interpolate(x, y, s, 0.0) == x);
  for (double tau : {0.1, 0.5, 1.0}) CHECK(interpolate(x, y, with_variant(Variant::vpdm), tau) == x);
  const auto v = interpolate(scalar(1.0), scalar(3.0), s, 1.0);
  CHECK(v[0].real() == Approx(2.553739679703).epsilon(1e-11));
  CHECK(v[0].imag() == 0.0);
  CHECK_THROWS_AS(interpolate(x, test::random_spectrum(3, 5, 2), s, 0.5), ShapeMismatch);
}

TEST_CASE("conditional mean examples") {
  const Schedule s;
  const auto x = test::random_spectrum(2, 3, 4);
  const auto y = test::random_spectrum(2, 3, 5);
  CHECK(conditional_mean(x, y, s, 0.0) == x);
  const auto u = conditional_mean(scalar(1.0), scalar(3.0), s, 0.5);
  CHECK(u[0].real() == Approx(1.780075386179).epsilon(1e-11));
  const Schedule ve = with_variant(Variant::veidm);
  CHECK(conditional_mean(x, y, ve, 0.7) == interpolate(x, y, ve, 0.7));
}

TEST_CASE("state at tau = 0 is the clean spectrum") {
  const Schedule s;
  const auto x = test::random_spectrum(2, 3, 6);
  const auto y = test::random_spectrum(2, 3, 7);
  Rng rng(1);
  const auto [st, draw] = forward_sample(x, y, s, 0.0, rng);
  CHECK(st.state == x);
  CHECK(st.tau == 0.0);
}

TEST_CASE("forward samples: Monte Carlo mean and variance") {
  const Schedule s;
  const auto x = scalar({0.4, -0.2});
  const auto y = scalar({1.1, 0.3});
  const int n = 100000;

  Rng rng(2024);
  Complex sum = 0.0;
  for (int i = 0; i < n; ++i) sum += forward_sample(x, y, s, 0.5, rng).first.state[0];
  const Complex mean = sum / double(n);
  const Complex u = conditional_mean(x, y, s, 0.5)[0];
  // Per component the standard error is G / sqrt(2n); 4 G / sqrt(n) bounds the modulus.
  CHECK(std::abs(mean - u) < 4.0 * state_sd(s, 0.5) / std::sqrt(double(n)));

  Rng rng2(77);
  const Complex u1 = conditional_mean(x, y, s, 1.0)[0];
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::norm(forward_sample(x, y, s, 1.0, rng2).first.state[0] - u1);
  CHECK(acc / n == Approx(0.650062250889).epsilon(0.03));
}

TEST_CASE("complex normal draws have unit second moment, split evenly") {
  Rng rng(5);
  const int n = 200000;
  double re2 = 0.0, im2 = 0.0, reim = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex z = rng.complex_normal();
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
    reim += z.real() * z.imag();
  }
  CHECK(re2 / n == Approx(0.5).epsilon(0.01));
  CHECK(im2 / n == Approx(0.5).epsilon(0.01));
  CHECK(std::abs(reim / n) < 0.01);
}

TEST_CASE("unit-modulus interpolation keeps unit state power") {
  const Schedule s;
  // X and Y share a phase so that every |V| = 1.
  ComplexSpectrum x(1, 4), y(1, 4);
  for (std::size_t m = 0; m < 4; ++m) {
    x[m] = std::polar(1.0, 0.7 * double(m));
    y[m] = x[m];
  }
  Rng rng(9);
  for (double tau : {0.2, 0.6, 1.0}) {
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += forward_sample(x, y, s, tau, rng).first.state.squared_norm();
    CHECK(acc / (4.0 * n) == Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("log density examples") {
  const Schedule s;
  const auto x = test::random_spectrum(1, 4, 10);
  const auto y = test::random_spectrum(1, 4, 11);
  const double tau = 0.6;
  const double var = state_variance(s, tau);
  DiffusionState at_mean{conditional_mean(x, y, s, tau), tau};
  CHECK(log_density(at_mean, x, y, s) == Approx(-4.0 * std::log(M_PI * var)).epsilon(1e-14));

  DiffusionState shifted = at_mean;
  shifted.state[2] += Complex(0.0, state_sd(s, tau));
  CHECK(log_density(at_mean, x, y, s) - log_density(shifted, x, y, s) ==
        Approx(1.0).epsilon(1e-12));

  DiffusionState at_zero{x, 0.0};
  CHECK_THROWS_AS(log_density(at_zero, x, y, s), InvalidArgument);
}

TEST_CASE("density integrates to one over a single bin") {
  const Schedule s;
  const auto x = scalar({0.3, 0.1});
  const auto y = scalar({-0.2, 0.5});
  const double tau = 0.4;
  const Complex u = conditional_mean(x, y, s, tau)[0];
  const double sd = state_sd(s, tau);
  const int n = 400;
  const double half = 8.0 * sd, h = 2.0 * half / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      DiffusionState st{scalar(u + Complex(-half + (i + 0.5) * h, -half + (j + 0.5) * h)), tau};
      total += std::exp(log_density(st, x, y, s)) * h * h;
    }
  CHECK(total == Approx(1.0).margin(1e-3));
}

TEST_CASE("analytic score") {
  const Schedule s;
  const auto x = test::random_spectrum(2, 4, 20);
  const auto y = test::random_spectrum(2, 4, 21);
  const double tau = 0.8;

  DiffusionState at_mean{conditional_mean(x, y, s, tau), tau};
  CHECK(analytic_score(at_mean, x, y, s).squared_norm() == 0.0);

  // Score of the generating draw is -Z / G.
  Rng rng(3);
  const auto [st, draw] = forward_sample(x, y, s, tau, rng);
  const auto score = analytic_score(st, x, y, s);
  const double g = state_sd(s, tau);
  for (std::size_t i = 0; i < score.size(); ++i) {
    const Complex want = -draw.noise[i] / g;
    CHECK(std::abs(score[i] - want) <= 1e-12 * std::abs(want));
  }

  // Constant beta with beta * tau = -ln(0.75) gives G = 0.5.
  Schedule flat;
  flat.beta_min = flat.beta_max = -std::log(0.75);
  REQUIRE(state_sd(flat, 1.0) == Approx(0.5).epsilon(1e-14));
  const auto u = conditional_mean(scalar(0.2), scalar(0.9), flat, 1.0);
  DiffusionState known{scalar(u[0] + Complex(0.5, 0.0)), 1.0};
  const Complex sc = analytic_score(known, scalar(0.2), scalar(0.9), flat)[0];
  CHECK(sc.real() == Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(sc.imag()) < 1e-12);
}

TEST_CASE("analytic score matches finite differences of the log density") {
  const Schedule s;
  const auto x = test::random_spectrum(1, 4, 30);
  const auto y = test::random_spectrum(1, 4, 31);
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double tau = s.epsilon + (s.T - s.epsilon) * rng.uniform();
    auto st = forward_sample(x, y, s, tau, rng).first;
    const auto score = analytic_score(st, x, y, s);
    const double h = 1e-5;
    for (std::size_t m = 0; m < 4; ++m) {
      auto probe = [&](Complex dz) {
        DiffusionState p = st;
        p.state[m] += dz;
        return log_density(p, x, y, s);
      };
      const double d_re = (probe({h, 0}) - probe({-h, 0})) / (2 * h);
      const double d_im = (probe({0, h}) - probe({0, -h})) / (2 * h);
      const Complex fd = 0.5 * Complex(d_re, d_im);
      CHECK(std::abs(fd - score[m]) < 1e-4 * std::max(1.0, std::abs(score[m])));
    }
  }
}

TEST_CASE("variant reductions") {
  Schedule forced;
  forced.gamma = 0.0;  // interpolating coefficient identically 0
  const Schedule vpdm = with_variant(Variant::vpdm);
  const auto x = test::random_spectrum(3, 4, 40);
  const auto y = test::random_spectrum(3, 4, 41);
  const auto z = test::random_spectrum(3, 4, 42);
  for (double tau : {0.04, 0.33, 1.0}) {
    const auto a = state_from_draw(x, y, forced, tau, z);
    const auto b = state_from_draw(x, y, vpdm, tau, z);
    CHECK(a.state == b.state);
  }
  const Schedule ve = with_variant(Variant::veidm);
  for (double tau : {0.0, 0.5, 1.0}) CHECK(mean_scale(ve, tau) == 1.0);
}

TEST_CASE("initial error ratio equals the final mean scale") {
  const auto x = test::random_spectrum(4, 6, 50);
  const auto y = test::random_spectrum(4, 6, 51);
  const Schedule vp;
  const Schedule ve = with_variant(Variant::veidm);
  const double ratio = initial_error_norm(x, y, vp) / initial_error_norm(x, y, ve);
  CHECK(ratio == Approx(0.591555364367).epsilon(1e-9));
  const double lam = clean_weight(vp, 1.0);
  CHECK(initial_error_norm(x, y, ve) ==
        Approx(lam * std::sqrt((y - x).squared_norm())).epsilon(1e-12));
}
