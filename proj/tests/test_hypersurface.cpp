#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nullot/hypersurface.hpp"

using namespace nullot;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const MetricModel> flat(int n) { return std::make_shared<Minkowski>(n); }

PatchOptions window(double lo, double hi, double density = 128) {
  PatchOptions o;
  o.t_min = lo;
  o.t_max = hi;
  o.propagation.samples_per_unit = density;
  return o;
}

QuadratureRule sphere_for(int n) { return sphere_rule(n - 2, n >= 6 ? 12 : 8, 16); }

// Tip at r = 6 r_S outside a unit Schwarzschild hole.
Vec exterior_tip(const SchwarzschildLemaitre& m) { return make_vec({0.0, m.rho_minus_tau(6.0), 1.3, 0.7}); }

}  // namespace

TEST_CASE("Gauss-Legendre and sphere quadrature") {
  const auto [x, w] = gauss_legendre(6, -1.0, 2.0);
  double s5 = 0.0, s11 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s5 += w[i] * std::pow(x[i], 5);
    s11 += w[i] * std::pow(x[i], 11);
  }
  CHECK(s5 == doctest::Approx((64.0 - 1.0) / 6.0).epsilon(1e-13));
  CHECK(s11 == doctest::Approx((4096.0 - 1.0) / 12.0).epsilon(1e-12));

  // 2D box of [0,1]×[0,3] integrates xy² exactly
  const auto box = box_rule({0.0, 0.0}, {1.0, 3.0}, {3, 3});
  double sb = 0.0;
  for (std::size_t i = 0; i < box.points.size(); ++i) sb += box.weights[i] * box.points[i][0] * std::pow(box.points[i][1], 2);
  CHECK(sb == doctest::Approx(4.5).epsilon(1e-13));

  SchwarzschildLemaitre m(1.0);
  const auto S = horizon_section(m, 0.0, sphere_rule(2, 8, 16));
  CHECK(S.area() == doctest::Approx(4 * kPi).epsilon(1e-8));
  for (int n = 3; n <= 6; ++n) {
    const auto C = light_cone_section(Minkowski(n), Vec::Zero(n), 1.0, sphere_for(n));
    CHECK(C.area() == doctest::Approx(unit_sphere_area(n - 2)).epsilon(1e-8));
  }
}

TEST_CASE("flow along Minkowski cone generators") {
  const auto model = flat(4);
  const auto patch = build_patch(model, light_cone_section(*model, Vec::Zero(4), 1.0, sphere_for(4)), WeightField(),
                                 window(-0.5, 3.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const std::size_t z = static_cast<std::size_t>(u(rng) * patch.size());
    const Vec x0 = patch.section().nodes[z].init.x;
    CHECK((flow(patch, z, 0.0) - x0).norm() < 1e-14);
    const double s = 0.5 + 3.5 * u(rng);
    CHECK((flow(patch, z, s - 1.0) - s * x0).norm() < 1e-9);
  }
  CHECK(extra_section_crossings(patch) == 0);

  // ingoing unit sphere: the window ends one step before the focal point t = 1
  const auto in = make_section(*model, sphere_rule(2, 4, 4), [](std::span<const double> a) {
    RayInit r;
    const double st = std::sin(a[0]), ct = std::cos(a[0]), sp = std::sin(a[1]), cp = std::cos(a[1]);
    r.x = make_vec({0, st * cp, st * sp, ct});
    r.L = make_vec({1, -st * cp, -st * sp, -ct});
    r.tangents = {make_vec({0, ct * cp, ct * sp, -st}), make_vec({0, -st * sp, st * cp, 0})};
    r.dL = {-r.tangents[0], -r.tangents[1]};
    return r;
  });
  const auto ip = build_patch(model, in, WeightField(), window(0.0, 2.0, 64));
  for (const auto& r : ip.rays()) {
    CHECK(r.focal_hi() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.t_hi() < 1.0);
  }
  CHECK_THROWS_AS(flow(ip, 0, 1.5), Error);
}

TEST_CASE("flow property on a Schwarzschild light-cone") {
  auto m = std::make_shared<SchwarzschildLemaitre>(1.0);
  const auto patch =
      build_patch(m, light_cone_section(*m, exterior_tip(*m), 0.2, sphere_rule(2, 3, 4)), WeightField(), window(0.0, 2.0, 256));
  CHECK(extra_section_crossings(patch) == 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t z = static_cast<std::size_t>(u(rng) * patch.size());
    const double t = 1.2 * u(rng), s = 0.8 * u(rng);
    const GeneratorRay& r = patch.ray(z);
    const RayInit mid = r.rebased(t);
    std::vector<double> grid{0.0, s};
    const auto g = integrate_null_geodesic(*m, mid.x, mid.L, grid);
    worst = std::max(worst, (g.back().x - flow(patch, z, t + s)).norm());
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("rigged measure integrals against closed forms") {
  for (int n = 3; n <= 5; ++n) {
    const auto model = flat(n);
    const auto patch = build_patch(model, light_cone_section(*model, Vec::Zero(n), 1.0, sphere_for(n)), WeightField(),
                                   window(0.0, 1.5, 64));
    const double h = 1.5;
    const double exact = unit_sphere_area(n - 2) * (std::pow(1 + h, n - 1) - 1.0) / (n - 1);
    const auto one = [](const Vec&, std::size_t, double) { return 1.0; };
    CHECK(integrate_measure(patch, one) == doctest::Approx(exact).epsilon(1e-8));

    // support outside the window
    const auto late = [](const Vec& x, std::size_t, double) { return x(0) > 5.0 ? 1.0 : 0.0; };
    CHECK(integrate_measure(patch, late) == 0.0);

    // linear and monotone in the integrand
    const auto f = [](const Vec& x, std::size_t, double) { return x(0) * x(0) + x(1); };
    const auto g = [](const Vec& x, std::size_t, double t) { return std::cos(x(1)) + t; };
    const double If = integrate_measure(patch, f), Ig = integrate_measure(patch, g);
    const double Ih = integrate_measure(patch, [&](const Vec& x, std::size_t z, double t) { return 2 * f(x, z, t) - 3 * g(x, z, t); });
    CHECK(Ih == doctest::Approx(2 * If - 3 * Ig).epsilon(1e-12));
    const double Ip = integrate_measure(patch, [](const Vec& x, std::size_t, double) { return x(1) * x(1); });
    CHECK(Ip >= 0.0);
    CHECK(integrate_measure(patch, [](const Vec& x, std::size_t, double) { return x(1) * x(1) + 0.1; }) >= Ip);
  }

  auto m = std::make_shared<SchwarzschildLemaitre>(1.0);
  const auto hp = build_patch(m, horizon_section(*m, 0.0, sphere_rule(2, 8, 16)), WeightField(), window(0.0, 2.0, 64));
  const double I = integrate_measure(hp, [](const Vec&, std::size_t, double) { return 1.0; });
  CHECK(I == doctest::Approx(4 * kPi * 2.0).epsilon(1e-8));
  for (const auto& r : hp.rays()) CHECK(r.a(r.size() - 1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("transverse rescaling") {
  const auto model = flat(4);
  const auto patch = build_patch(model, light_cone_section(*model, Vec::Zero(4), 1.0, sphere_for(4)), WeightField(),
                                 window(0.0, 2.0, 64));
  const auto one = [](const Vec&, std::size_t, double) { return 1.0; };
  const double I = integrate_measure(patch, one);

  const auto same = rescale_transverse(patch, [](std::span<const double>) { return 1.0; });
  for (std::size_t z = 0; z < patch.size(); ++z) {
    REQUIRE(same.patch.ray(z).size() == patch.ray(z).size());
    for (std::size_t i = 0; i < patch.ray(z).size(); ++i) CHECK(same.patch.ray(z).W(i) == patch.ray(z).W(i));
  }

  const auto twice = rescale_transverse(patch, [](std::span<const double>) { return 2.0; });
  CHECK(integrate_measure(twice.patch, one) == doctest::Approx(I / 2).epsilon(1e-8));
  CHECK(twice.flow_deviation < 1e-9);
  CHECK(twice.log_det_deviation < 1e-9);

  CHECK_THROWS_AS(rescale_transverse(patch, [](std::span<const double>) { return -1.0; }), Error);

  auto m = std::make_shared<SchwarzschildLemaitre>(1.0);
  const auto sp =
      build_patch(m, light_cone_section(*m, exterior_tip(*m), 0.2, sphere_rule(2, 3, 4)), WeightField(), window(0.0, 1.5, 256));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int k = 0; k < 5; ++k) {
    const double c0 = u(rng), c1 = u(rng) - 1.25, c2 = u(rng) - 1.25;
    const auto phi = [=](std::span<const double> a) {
      return std::clamp(c0 + 0.2 * c1 * std::cos(a[0]) + 0.2 * c2 * std::sin(a[1]), 0.5, 2.0);
    };
    const auto res = rescale_transverse(sp, phi);
    CHECK(res.flow_deviation <= 1e-7);
    CHECK(res.log_det_deviation <= 1e-7);
    CHECK(res.density_deviation <= 1e-7);
  }
}

TEST_CASE("graph section transfer") {
  const auto model = flat(4);
  const auto patch = build_patch(model, light_cone_section(*model, Vec::Zero(4), 1.0, sphere_for(4)), WeightField(),
                                 window(-0.5, 3.0, 64));
  const double A = patch.section().area();
  const auto S0 = graph_section_transfer(patch, [](std::span<const double>) { return 0.0; });
  CHECK(S0.area() == doctest::Approx(A).epsilon(1e-12));
  for (double s : {0.5, 1.7, 4.0}) {
    const auto S = graph_section_transfer(patch, [s](std::span<const double>) { return s - 1.0; });
    CHECK(S.area() == doctest::Approx(unit_sphere_area(2) * s * s).epsilon(1e-8));
  }

  // tilted graph: area equals ∫ det J(z, t_L(z)) dH
  const auto tl = [](std::span<const double> a) { return 0.8 + 0.5 * std::cos(a[0]) * std::sin(a[1]); };
  const auto St = graph_section_transfer(patch, tl);
  const double via_det = patch.section().integrate(
      [&](std::size_t z) { return patch.ray(z).det_at(tl(patch.section().nodes[z].u)); });
  CHECK(St.area() == doctest::Approx(via_det).epsilon(1e-9));

  // S1 → S2 → S1
  const auto p2 = build_patch(model, St, WeightField(), window(-2.0, 1.0, 64));
  const auto back = graph_section_transfer(p2, [&](std::span<const double> a) { return -tl(a); });
  CHECK(back.area() == doctest::Approx(A).epsilon(2e-8));

  auto m = std::make_shared<SchwarzschildLemaitre>(1.0);
  const auto hp = build_patch(m, horizon_section(*m, 0.0, sphere_rule(2, 8, 16)), WeightField(), window(0.0, 3.0, 64));
  const auto later = graph_section_transfer(hp, [](std::span<const double>) { return 2.5; });
  CHECK(later.area() == doctest::Approx(4 * kPi).epsilon(1e-8));
}

TEST_CASE("cross-section independence") {
  const auto model = flat(4);
  const auto p1 = build_patch(model, light_cone_section(*model, Vec::Zero(4), 1.0, sphere_for(4)), WeightField(),
                              window(-0.5, 3.0, 64));
  const auto S2 = graph_section_transfer(p1, [](std::span<const double>) { return 1.0; });
  const auto p2 = build_patch(model, S2, WeightField(), window(-1.5, 2.0, 64));
  std::vector<double> shift(p1.size(), 1.0);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::vector<Integrand> fs;
  for (int k = 0; k < 10; ++k) {
    const double a0 = c(rng), a1 = c(rng), a2 = c(rng), a3 = c(rng), a4 = c(rng);
    fs.push_back([=](const Vec& x, std::size_t, double) {
      return a0 + a1 * x(0) + a2 * x(1) * x(2) + a3 * x(3) * x(3) + a4 * x(0) * x(1) * x(3);
    });
  }
  const auto same = cross_section_independence_check(p1, p1, std::vector<double>(p1.size(), 0.0), 0.2, 2.5, fs);
  CHECK(same.max_discrepancy == 0.0);
  const auto rep = cross_section_independence_check(p1, p2, shift, 0.2, 2.5, fs);
  CHECK(rep.max_discrepancy <= 1e-8);
  const auto bad = cross_section_independence_check(p1, p2, shift, 0.2, 2.5, fs, 2.0);
  CHECK(bad.max_discrepancy > 1e-2);
}

TEST_CASE("patch CSV dump") {
  const auto model = flat(4);
  const auto patch = build_patch(model, light_cone_section(*model, Vec::Zero(4), 1.0, sphere_rule(2, 2, 2)), WeightField(),
                                 window(0.0, 1.0, 8));
  std::ostringstream os;
  write_patch_csv(patch, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "node,t,x0,x1,x2,x3,W_L,a_z,det_Jbar");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 4 * 9);
}
