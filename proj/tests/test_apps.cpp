#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "nullot/apps.hpp"

using namespace nullot;

namespace {

constexpr double kPi = 3.14159265358979323846;

WeightField rigid(double N, int n) {
  const double c = std::log(unit_sphere_area(N - 2) / unit_sphere_area(n - 2));
  return WeightField([=](const Vec&, double s) { return (N - n) * std::log(s) + c; }, Smoothness::C2, "rigid");
}

ConeScenario flat_cone(int n, double N = 0, WeightField w = WeightField()) {
  ConeScenario sc;
  sc.model = std::make_shared<Minkowski>(n);
  sc.tip = Vec::Zero(n);
  sc.rule = n >= 5 ? sphere_rule(n - 2, 8, 4) : sphere_rule(n - 2, 8, 16);
  sc.N = N > 0 ? N : n;
  sc.weight = std::move(w);
  sc.samples_per_unit = 64;
  return sc;
}

std::shared_ptr<SchwarzschildLemaitre> hole() { return std::make_shared<SchwarzschildLemaitre>(1.0); }

ConeScenario schwarzschild_cone() {
  ConeScenario sc;
  auto m = hole();
  sc.model = m;
  sc.tip = make_vec({0.0, m->rho_minus_tau(6.0), 1.3, 0.7});
  sc.rule = sphere_rule(2, 8, 16);
  sc.s_max = 2.0;
  sc.samples_per_unit = 128;
  return sc;
}

double tilt(std::span<const double> u) { return 0.3 * std::sin(u[0]) * std::cos(u[1]); }

}  // namespace

TEST_CASE("light-cone comparison on flat cones") {
  for (int n = 3; n <= 6; ++n) {
    const auto c = lightcone_comparison(flat_cone(n));
    CHECK(c.max_deviation_from_one <= 1e-6);
    CHECK(c.monotone);
    CHECK(c.tip_ok);
    CHECK(c.s.front() == doctest::Approx(2e-3));
  }
  for (double N : {5.0, 5.5, 7.0}) {
    const auto c = lightcone_comparison(flat_cone(4, N, rigid(N, 4)));
    CHECK(c.max_deviation_from_one <= 1e-6);
    CHECK(c.monotone);
    CHECK(std::isnan(c.tip_value));
  }
  std::ostringstream os;
  write_cone_csv(lightcone_comparison(flat_cone(4)), os);
  CHECK(os.str().rfind("s,A\n", 0) == 0);
}

TEST_CASE("light-cone comparison on a Schwarzschild cone") {
  const auto c = lightcone_comparison(schwarzschild_cone());
  CHECK(c.monotone);
  CHECK(c.monotonicity_margin >= -1e-7);
  CHECK(c.A.back() < c.A.front() - 5e-6);
  CHECK(std::abs(c.A.front() - 1.0) <= 1e-6);
  // vacuum: no h³ term, so 1 − A(s) grows like s⁴ (shear squared) once it
  // clears the ~1e−8 quadrature floor
  std::size_t i1 = 0;
  for (std::size_t k = 0; k < c.s.size(); ++k)
    if (std::abs(c.s[k] - 1.0) < std::abs(c.s[i1] - 1.0)) i1 = k;
  const std::size_t i2 = c.s.size() - 1;
  const double slope = std::log((1 - c.A[i2]) / (1 - c.A[i1])) / std::log(c.s[i2] / c.s[i1]);
  CHECK(slope > 3.0);
  CHECK(slope < 5.0);
}

TEST_CASE("light-cone monotonicity violation") {
  auto sc = flat_cone(4, 6, WeightField([](const Vec&, double s) { return s * s; }, Smoothness::C2, "s^2"));
  try {
    lightcone_comparison(sc);
    FAIL("expected MonotonicityViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MonotonicityViolation);
  }
  sc.policy = VerdictPolicy::MarginReport;
  const auto c = lightcone_comparison(sc);
  CHECK(!c.monotone);
  CHECK(c.monotonicity_margin < -1e-3);
}

TEST_CASE("Hawking area on the Schwarzschild horizon") {
  auto m = hole();
  HorizonScenario sc;
  sc.model = m;
  sc.base = horizon_section(*m, 0.0, sphere_rule(2, 8, 16));
  sc.t1 = tilt;
  sc.t2 = [](std::span<const double> u) { return 1.0 + 0.2 * std::cos(u[0]) + 0.1 * std::sin(2 * u[1]); };
  auto r = hawking_area(sc);
  CHECK(r.pass);
  CHECK(r.equality);
  CHECK(std::abs(r.area1 - r.area2) / r.area2 <= 1e-8);
  CHECK(r.area2 == doctest::Approx(4 * kPi).epsilon(1e-8));
  CHECK(r.certified_to >= 1.0 + 10 * r.separation);

  const auto rig = rigidity_diagnostic(r.patch, RigidityMode::Horizon, 4);
  CHECK(rig.identity_deviation <= 1e-7);
  CHECK(rig.det_deviation <= 1e-7);
  CHECK(rig.ricci <= 1e-7);

  // a weight constant along generators scales both areas alike
  sc.weight = WeightField([](const Vec& x, double) { return 0.3 * std::cos(x(2)); }, Smoothness::C2, "0.3 cos theta");
  r = hawking_area(sc);
  CHECK(r.equality);
  CHECK(std::abs(r.area1 - r.area2) / r.area2 <= 1e-8);
  CHECK(r.area1 == doctest::Approx(2 * kPi * (std::exp(0.3) - std::exp(-0.3)) / 0.3).epsilon(1e-7));
}

TEST_CASE("Hawking area on a product spacetime") {
  for (auto surf : {ProductSurfaceM2::Surface::Sphere, ProductSurfaceM2::Surface::Flat}) {
    auto m = std::make_shared<ProductSurfaceM2>(surf, 1.5);
    HorizonScenario sc;
    sc.model = m;
    sc.base = surf == ProductSurfaceM2::Surface::Sphere
                  ? product_section(*m, 0.0, sphere_rule(2, 8, 16))
                  : product_section(*m, 0.0, box_rule({0.0, 0.0}, {1.0, 1.0}, {6, 6}));
    sc.t1 = [](std::span<const double> u) { return 0.2 * std::sin(u[0] + u[1]); };
    sc.t2 = [](std::span<const double> u) { return 2.0 + 0.5 * std::cos(u[0]); };
    const auto r = hawking_area(sc);
    CHECK(r.equality);
    CHECK(std::abs(r.area1 - r.area2) / r.area2 <= 1e-8);
    const double expect = surf == ProductSurfaceM2::Surface::Sphere ? 4 * kPi * 1.5 * 1.5 : 1.0;
    CHECK(r.area1 == doctest::Approx(expect).epsilon(1e-8));
    const auto rig = rigidity_diagnostic(r.patch, RigidityMode::Horizon, 4);
    CHECK(rig.identity_deviation <= 1e-7);
    CHECK(rig.ricci <= 1e-7);
  }
}

TEST_CASE("Hawking area on flat cone slices and incompleteness") {
  auto m = std::make_shared<Minkowski>(4);
  HorizonScenario sc;
  sc.model = m;
  sc.base = light_cone_section(*m, Vec::Zero(4), 1.0, sphere_rule(2, 8, 16));
  sc.t1 = [](std::span<const double>) { return 0.0; };
  sc.t2 = [](std::span<const double>) { return 1.0; };
  const auto r = hawking_area(sc);
  CHECK(r.pass);
  CHECK(!r.equality);
  CHECK(r.area1 / r.area2 == doctest::Approx(0.25).epsilon(1e-10));

  const auto rig = rigidity_diagnostic(r.patch, RigidityMode::Cone, 4);
  CHECK(rig.offdiagonal <= 1e-8);
  CHECK(rig.shape_deviation <= 1e-8);
  CHECK(rig.det_deviation <= 1e-8);

  // ingoing unit sphere focuses at t = 1, inside the certificate window
  HorizonScenario in;
  in.model = m;
  in.base = make_section(*m, sphere_rule(2, 4, 6), [](std::span<const double> u) {
    const double st = std::sin(u[0]), ct = std::cos(u[0]), sp = std::sin(u[1]), cp = std::cos(u[1]);
    RayInit r;
    r.x = make_vec({0, st * cp, st * sp, ct});
    r.L = make_vec({1, -st * cp, -st * sp, -ct});
    r.tangents = {make_vec({0, ct * cp, ct * sp, -st}), make_vec({0, -st * sp, st * cp, 0})};
    r.dL = {-r.tangents[0], -r.tangents[1]};
    return r;
  });
  in.t1 = [](std::span<const double>) { return 0.0; };
  in.t2 = [](std::span<const double>) { return 0.2; };
  try {
    hawking_area(in);
    FAIL("expected NotComplete");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotComplete);
  }
}

TEST_CASE("rigidity diagnostic on a curved cone is nonzero") {
  auto sc = schwarzschild_cone();
  sc.samples_per_unit = 64;
  const auto c = lightcone_comparison(sc);
  const auto rig = rigidity_diagnostic(c.patch, RigidityMode::Cone, 4, 4);
  CHECK(rig.shape_deviation > 1e-6);
  CHECK(rig.ricci <= 1e-8);  // vacuum
}

TEST_CASE("stability of NC1 margins") {
  StabilityScenario sc;
  sc.base = std::make_shared<Minkowski>(4);
  sc.h = std::make_shared<ConformalWell>(Vec::Zero(4), 1.0);
  sc.tip = Vec::Zero(4);
  sc.rule = sphere_rule(2, 3, 4);
  sc.config.N = 4;
  for (double e = 0.1; e > 1e-7; e /= 4) sc.eps.push_back(e);
  sc.eps.push_back(0.0);
  const auto r = stability_experiment(sc);
  CHECK(r.all_pass);
  CHECK(r.limit_pass);
  CHECK(r.resolution_monotone);
  CHECK(r.limit_gap <= 1e-6);
  CHECK(r.rows.back().margins == r.base_margins);  // ε = 0 is the base run
  CHECK(r.rate > 0.5);
  std::ostringstream os;
  write_stability_csv(r, os);
  CHECK(os.str().rfind("eps,amplitude,margin_64,margin_128,margin_256\n", 0) == 0);

  // β(ε) = ε (1 − ε/ε₀): NEC fails for ε > ε₀ only
  const double eps0 = 0.05;
  sc.amplitude = [=](double e) { return e * (1 - e / eps0); };
  sc.eps = {0.2, 0.1, 0.04, 0.01, 1e-3};
  const auto v = stability_experiment(sc);
  CHECK(!v.rows[0].pass);
  CHECK(!v.rows[1].pass);
  CHECK(v.rows[2].pass);
  CHECK(v.rows[3].pass);
  CHECK(v.rows[4].pass);
  CHECK(v.limit_pass);

  sc.amplitude = nullptr;
  sc.eps = {10.0};
  sc.tip = make_vec({0.5, 0.0, 0.0, 0.0});
  try {
    stability_experiment(sc);
    FAIL("expected SignatureLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SignatureLoss);
  }
}
