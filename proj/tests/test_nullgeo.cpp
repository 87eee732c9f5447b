#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "nullot/nullgeo.hpp"

using namespace nullot;

namespace {

constexpr double kPi = std::numbers::pi;

// Point of the flat unit sphere slice of the light-cone of the origin, with
// hyperspherical angles; ray data for the outgoing generator.
RayInit flat_cone_point(int n, const std::vector<double>& ang, double radius = 1.0, double sign = 1.0) {
  const int K = n - 2;
  // ω(angles) on S^{n-2} ⊂ R^{n-1}
  auto omega = [&](const std::vector<double>& a) {
    Vec w = Vec::Zero(n - 1);
    double prod = 1.0;
    for (int i = 0; i < K - 1; ++i) {
      w(i) = prod * std::cos(a[i]);
      prod *= std::sin(a[i]);
    }
    w(K - 1) = prod * std::cos(a[K - 1]);
    w(K) = prod * std::sin(a[K - 1]);
    return w;
  };
  const Vec w = omega(ang);
  RayInit r;
  r.x = Vec::Zero(n);
  r.x(0) = radius;
  r.L = Vec::Zero(n);
  r.L(0) = 1.0;
  for (int i = 0; i < n - 1; ++i) {
    r.x(i + 1) = radius * w(i);
    r.L(i + 1) = sign * w(i);
  }
  const double h = 1e-5;
  for (int k = 0; k < K; ++k) {
    auto ap = ang, am = ang;
    ap[k] += h;
    am[k] -= h;
    const Vec dw = (omega(ap) - omega(am)) / (2 * h);
    Vec T = Vec::Zero(n), D = Vec::Zero(n);
    for (int i = 0; i < n - 1; ++i) {
      T(i + 1) = radius * dw(i);
      D(i + 1) = sign * dw(i);
    }
    r.tangents.push_back(T);
    r.dL.push_back(D);
  }
  return r;
}

std::vector<double> random_angles(int K, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> th(0.3, kPi - 0.3), ph(0.0, 2 * kPi);
  std::vector<double> a;
  for (int i = 0; i < K - 1; ++i) a.push_back(th(rng));
  a.push_back(ph(rng));
  return a;
}

RayInit lemaitre_horizon_point(const SchwarzschildLemaitre& m, double theta, double phi, double tau = 0.0) {
  RayInit r;
  r.x = make_vec({tau, tau + m.rho_minus_tau(m.schwarzschild_radius()), theta, phi});
  r.L = make_vec({1, 1, 0, 0});
  r.tangents = {make_vec({0, 0, 1, 0}), make_vec({0, 0, 0, 1})};
  r.dL = {Vec::Zero(4), Vec::Zero(4)};
  // ∇_{T} L = Γ(T, L) with L constant in chart components along the section
  const Christoffel G = christoffel(m, r.x);
  for (int k = 0; k < 2; ++k)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) r.dL[k](a) += G(a, b, c) * r.tangents[k](b) * r.L(c);
  return r;
}

}  // namespace

TEST_CASE("flat null geodesics are straight lines") {
  Minkowski m(4);
  const Vec x0 = make_vec({0.1, 0.2, -0.3, 0.4});
  const Vec v0 = make_vec({1.0, 0.6, 0.0, 0.8});
  std::vector<double> grid{0.0, 0.5, 1.0, 3.0};
  const auto out = integrate_null_geodesic(m, x0, v0, grid);
  for (const auto& s : out) CHECK((s.x - (x0 + s.t * v0)).norm() < 1e-12);
}

TEST_CASE("Lemaitre horizon generator stays on r = r_S") {
  SchwarzschildLemaitre m(1.0);
  const Vec x0 = make_vec({0.0, 2.0 / 3.0, 1.2, 0.4});
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.25 * i);
  const auto out = integrate_null_geodesic(m, x0, make_vec({1, 1, 0, 0}), grid);
  for (const auto& s : out) CHECK(std::abs(m.areal_radius(s.x) - 1.0) < 1e-10);
}

TEST_CASE("reversed grid retraces the forward solution") {
  SchwarzschildLemaitre m(1.0);
  const Vec x0 = make_vec({0.0, 2.5, 1.2, 0.4});
  Mat g = m.metric(x0);
  Vec v0 = make_vec({1.0, 0.3, 0.2, 0.0});
  // make v0 null by solving for the τ component
  const double spatial = v0.tail(3).dot(g.bottomRightCorner(3, 3) * v0.tail(3));
  v0(0) = std::sqrt(spatial);
  std::vector<double> back{0.0, -0.5, -1.0};
  const auto b = integrate_null_geodesic(m, x0, v0, back);
  std::vector<double> fwd{0.0, 0.5, 1.0};
  const auto f = integrate_null_geodesic(m, b.back().x, b.back().v, fwd);
  CHECK((f.back().x - x0).norm() < 1e-10);
  CHECK((f[1].x - b[1].x).norm() < 1e-10);
  CHECK_THROWS_AS(integrate_null_geodesic(m, x0, -v0, fwd), Error);
}

TEST_CASE("adapted frame on a flat cone") {
  Minkowski m(4);
  const RayInit r = flat_cone_point(4, {kPi / 2, 0.0});
  const AdaptedFrame f = build_adapted_frame(m, r.x, r.tangents, r.L);
  Mat eta = Mat::Identity(4, 4);
  eta(2, 2) = 0.0;
  eta(3, 3) = 0.0;
  eta(2, 3) = -1.0;
  eta(3, 2) = -1.0;
  CHECK((f.eta - eta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rigged_metric_check(m, f) <= 1e-12);

  const AdaptedFrame f2 = build_adapted_frame(m, r.x, r.tangents, 2.5 * r.L);
  CHECK((f2.e[3] - f.e[3] / 2.5).norm() < 1e-14);

  AdaptedFrame bad = f;
  bad.e[3] *= 2.0;  // g(L̄, L) = −2
  CHECK(rigged_metric_check(m, bad) > 1.0);

  std::vector<Vec> degenerate{r.tangents[0], r.tangents[0]};
  try {
    build_adapted_frame(m, r.x, degenerate, r.L);
    FAIL("expected DegenerateSection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSection);
  }
}

TEST_CASE("adapted frame on the Schwarzschild horizon with random bases") {
  SchwarzschildLemaitre m(1.0);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 10; ++k) {
    const RayInit r = lemaitre_horizon_point(m, 0.5 + 0.2 * k, 0.3 * k);
    // random invertible mix of the section tangents
    std::vector<Vec> T;
    for (int i = 0; i < 2; ++i) T.push_back(nd(rng) * r.tangents[0] + nd(rng) * r.tangents[1]);
    const AdaptedFrame f = build_adapted_frame(m, r.x, T, r.L);
    const Mat& eta = f.eta;
    CHECK((eta.topLeftCorner(2, 2) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(eta.topRightCorner(2, 2).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(eta(2, 2)) < 1e-10);
    CHECK(std::abs(eta(3, 3)) < 1e-10);
    CHECK(std::abs(eta(2, 3) + 1.0) < 1e-10);
    CHECK(rigged_metric_check(m, f) <= 1e-10);
  }
}

TEST_CASE("flat cone Jacobi law det = s^(n-2)") {
  std::mt19937_64 rng(1);
  for (int n = 3; n <= 6; ++n) {
    Minkowski m(n);
    const RayInit r = flat_cone_point(n, random_angles(n - 2, rng));
    PropagationOptions opt;
    opt.samples_per_unit = 64;
    const GeneratorRay ray = propagate_jacobi(m, r, -0.9, 4.0, opt);
    const std::size_t o = ray.origin();
    CHECK(ray.t(o) == 0.0);
    CHECK((ray.jbar(o) - Mat::Identity(n - 2, n - 2)).norm() < 1e-12);
    CHECK(ray.W(o) == 0.0);
    for (std::size_t i = 0; i < ray.size(); ++i) {
      const double s = 1.0 + ray.t(i);
      CHECK(ray.det(i) == doctest::Approx(std::pow(s, n - 2)).epsilon(1e-9));
      // J̄ = s·Id on the flat cone
      CHECK((ray.jbar(i) - s * Mat::Identity(n - 2, n - 2)).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(ray.det_at(1.2345) == doctest::Approx(std::pow(2.2345, n - 2)).epsilon(1e-9));
    CHECK(ray.diagnostics().structure < 1e-10);
    CHECK(ray.diagnostics().gauss < 1e-10);
    CHECK(ray.diagnostics().ubar_symmetry < 1e-9);
  }
}

TEST_CASE("ingoing flat sphere focuses at t = 1") {
  Minkowski m(4);
  const RayInit r = flat_cone_point(4, {1.0, 0.5}, 1.0, -1.0);
  PropagationOptions opt;
  opt.samples_per_unit = 50;
  try {
    propagate_jacobi(m, r, 0.0, 2.0, opt);
    FAIL("expected a focal point");
  } catch (const FocalPointError& e) {
    CHECK(e.parameter() == doctest::Approx(1.0).epsilon(1e-5));
  }
  opt.truncate_at_focal = true;
  const GeneratorRay ray = propagate_jacobi(m, r, 0.0, 2.0, opt);
  CHECK(ray.focal_hi() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(ray.t_hi() < 1.0 - 1.0 / 50 + 1e-9);
  CHECK_THROWS_AS(ray.position(1.5), Error);
}

TEST_CASE("Schwarzschild horizon has a constant area element") {
  SchwarzschildLemaitre m(1.0);
  PropagationOptions opt;
  opt.samples_per_unit = 64;
  const GeneratorRay ray = propagate_jacobi(m, lemaitre_horizon_point(m, 1.0, 0.3), 0.0, 3.0, opt);
  for (std::size_t i = 0; i < ray.size(); ++i) {
    CHECK(std::abs(ray.det(i) - 1.0) < 1e-9);
    CHECK((ray.jbar(i) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(m.areal_radius(ray.x(i)) - 1.0) < 1e-9);
  }
  CHECK(ray.diagnostics().structure < 1e-8);
  CHECK(ray.diagnostics().gauss < 1e-8);
  CHECK(ray.diagnostics().ubar_symmetry < 1e-10);
  CHECK(ray.diagnostics().null_defect < 1e-9);
}

TEST_CASE("semigroup property of the determinant") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SchwarzschildLemaitre m(1.0);
  // outgoing-ish null congruence off a sphere outside the horizon
  RayInit r;
  r.x = make_vec({0.0, m.rho_minus_tau(3.0), 1.1, 0.2});
  Mat g = m.metric(r.x);
  // L = a ∂τ + b ∂ρ null and future: −a² + g_ρρ b² = 0
  r.L = make_vec({1.0, 1.0 / std::sqrt(g(1, 1)), 0, 0});
  r.tangents = {make_vec({0, 0, 1, 0}), make_vec({0, 0, 0, 1})};
  const Christoffel G = christoffel(m, r.x);
  r.dL = {Vec::Zero(4), Vec::Zero(4)};
  for (int k = 0; k < 2; ++k)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) r.dL[k](a) += G(a, b, c) * r.tangents[k](b) * r.L(c);
  PropagationOptions opt;
  opt.samples_per_unit = 128;
  const GeneratorRay ray = propagate_jacobi(m, r, 0.0, 2.0, opt);
  CHECK(ray.diagnostics().structure < 1e-8);
  CHECK(ray.diagnostics().gauss < 1e-8);
  for (int k = 0; k < 20; ++k) {
    const double s = 0.8 * u(rng), t = 0.9 * u(rng);
    const GeneratorRay sub = propagate_jacobi(m, ray.rebased(s), 0.0, t, opt);
    const double lhs = ray.det_at(s + t);
    const double rhs = sub.det(sub.size() - 1) * ray.det_at(s);
    CHECK(std::abs(lhs - rhs) <= 1e-7 * std::abs(lhs));
  }
}

TEST_CASE("Taylor probe recovers null Ricci curvature") {
  Minkowski flat(4);
  const Vec p = make_vec({0.0, 0.0, 0.0, 0.0});
  CHECK(std::abs(taylor_ricci_probe(flat, p, make_vec({1, 0.6, 0.8, 0})).ricci) < 1e-6);

  auto well = make_metric("perturbed", {{"eps", 0.05}, {"sign", -1.0}});
  const Vec k = make_vec({1, 0.6, 0.8, 0});
  const Vec x = make_vec({0.1, 0.1, 0.0, 0.0});
  // k is null for the conformal metric at any point
  const auto est = taylor_ricci_probe(*well, x, k);
  const double exact = ricci(*well, x, k, k);
  CHECK(exact < 0.0);
  CHECK(est.ricci < 0.0);
  CHECK(est.ricci == doctest::Approx(exact).epsilon(1e-3));
}
