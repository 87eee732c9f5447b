#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nullot/transport.hpp"

using namespace nullot;

namespace {

PatchOptions window(double lo, double hi, double density = 64) {
  PatchOptions o;
  o.t_min = lo;
  o.t_max = hi;
  o.propagation.samples_per_unit = density;
  return o;
}

// Σ_flat × M²: a ≡ 0, so the reference on each generator is Lebesgue.
NullHypersurfacePatch flat_product_patch(double lo, double hi, int nodes_per_axis = 2) {
  auto m = std::make_shared<ProductSurfaceM2>(ProductSurfaceM2::Surface::Flat, 1.0);
  auto S = product_section(*m, 0.0, box_rule({0.0, 0.0}, {1.0, 1.0}, {nodes_per_axis, nodes_per_axis}));
  return build_patch(m, std::move(S), WeightField(), window(lo, hi));
}

NullHypersurfacePatch cone_patch(double lo, double hi, const QuadratureRule& rule, double density = 64) {
  auto m = std::make_shared<Minkowski>(4);
  return build_patch(m, light_cone_section(*m, Vec::Zero(4), 1.0, rule), WeightField(), window(lo, hi, density));
}

std::vector<std::pair<double, double>> same_windows(std::size_t m, double lo, double hi) {
  return std::vector<std::pair<double, double>>(m, {lo, hi});
}

}  // namespace

TEST_CASE("density profiles") {
  const DensityProfile p({0.0, 1.0, 1.5, 3.0}, {0.2, 0.0, 0.4});
  CHECK(p.mass() == doctest::Approx(0.8));
  CHECK(p.cdf(-1.0) == 0.0);
  CHECK(p.cdf(0.5) == doctest::Approx(0.1));
  CHECK(p.cdf(1.2) == doctest::Approx(0.2));
  CHECK(p.cdf(10.0) == doctest::Approx(0.8));
  CHECK(p.quantile(0.2) == doctest::Approx(1.0));
  CHECK(p.quantile(0.4) == doctest::Approx(2.0));
  CHECK(p.support().first == 0.0);
  CHECK(p.support().second == 3.0);
  double last = 0.0;
  for (double t = -0.5; t < 3.5; t += 0.01) {
    CHECK(p.cdf(t) >= last);
    last = p.cdf(t);
  }
  CHECK_THROWS_AS(DensityProfile({0.0, 1.0}, {-1.0}), Error);
}

TEST_CASE("monotone rearrangement closed forms") {
  const auto u01 = DensityProfile::uniform(0.0, 1.0, 1.0);
  const auto plan = monotone_rearrangement(u01, DensityProfile::uniform(2.0, 4.0, 1.0));
  for (double x = 0.0; x <= 1.0; x += 0.125) CHECK(plan.map(x) == doctest::Approx(2.0 + 2.0 * x).epsilon(1e-14));
  CHECK(plan.nondecreasing());
  CHECK(plan.min_displacement() == doctest::Approx(2.0));

  const DensityProfile p({0.0, 0.3, 0.7, 1.0}, {1.0, 0.5, 2.0});
  const auto id = monotone_rearrangement(p, p);
  for (double x = 0.0; x <= 1.0; x += 0.05) CHECK(id.map(x) == doctest::Approx(x).epsilon(1e-14));

  // interpolation: uniform on [2t, 1 + 3t]
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    const auto mt = pushforward(plan, t);
    CHECK(cdf_distance(mt, DensityProfile::uniform(2 * t, 1 + 3 * t, 1.0)) <= 1e-14);
  }
  for (double t : {0.0, 0.3, 1.0}) CHECK(cdf_distance(pushforward(id, t), p) <= 1e-14);

  CHECK_THROWS_AS(monotone_rearrangement(u01, DensityProfile::uniform(0.0, 1.0, 1.1)), Error);
  try {
    monotone_rearrangement(DensityProfile({0.0, 1.0}, {0.0}), u01);
    FAIL("expected EmptySupport");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySupport);
  }
  // within the tolerance ρ1 is renormalized
  const auto close = monotone_rearrangement(u01, DensityProfile::uniform(0.0, 1.0, 1.0 + 1e-12));
  CHECK(cdf_distance(pushforward(close, 1.0), u01) <= 1e-12);
}

TEST_CASE("monotone rearrangement matches exhaustive permutation search") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 10.0), shift(0.0, 3.0);
  std::uniform_int_distribution<int> count(1, 6);
  const double width = 1e-3;
  int mismatches = 0, causal_instances = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int k = count(rng);
    std::vector<double> x(k), y(k);
    for (auto& v : x) v = pos(rng);
    // half the instances admit a causal coupling by construction
    if (inst % 2 == 0) {
      std::vector<int> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int i = 0; i < k; ++i) y[perm[i]] = x[i] + shift(rng);
    } else {
      for (auto& v : y) v = pos(rng);
    }
    // brute force over all permutations: causal (y ≥ x) and least Σ (y − x)²
    std::vector<int> sigma(k), best;
    std::iota(sigma.begin(), sigma.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      bool causal = true;
      for (int i = 0; i < k; ++i) {
        const double d = y[sigma[i]] - x[i];
        if (d < 0.0) causal = false;
        c += d * d;
      }
      if (causal && c < best_cost) {
        best_cost = c;
        best = sigma;
      }
    } while (std::next_permutation(sigma.begin(), sigma.end()));

    // atoms as narrow bumps; bumps never overlap at this width for random data
    auto bumps = [&](const std::vector<double>& c) {
      std::vector<double> s = c;
      std::sort(s.begin(), s.end());
      std::vector<double> e, f;
      for (double v : s) {
        if (!e.empty() && v - width / 2 <= e.back()) return DensityProfile();
        if (!e.empty()) f.push_back(0.0);
        if (e.empty() || v - width / 2 > e.back()) e.push_back(v - width / 2);
        e.push_back(v + width / 2);
        f.push_back(1.0 / (k * width));
      }
      return DensityProfile(e, f);
    };
    const DensityProfile p0 = bumps(x), p1 = bumps(y);
    REQUIRE(!p0.empty());
    REQUIRE(!p1.empty());
    const FiberPlan plan = monotone_rearrangement(p0, p1);
    CHECK(plan.nondecreasing());
    CHECK(cdf_distance(pushforward(plan, 1.0), p1) <= 1e-10);
    std::vector<int> ours(k);
    for (int i = 0; i < k; ++i) {
      const double image = plan.map(x[i]);
      int j = 0;
      for (int q = 1; q < k; ++q)
        if (std::abs(y[q] - image) < std::abs(y[j] - image)) j = q;
      ours[i] = j;
    }
    const bool causal = plan.min_displacement() >= -width;
    if (!best.empty()) {
      ++causal_instances;
      if (ours != best || !causal) {
        ++mismatches;
        MESSAGE("instance " << inst << " k=" << k << " causal=" << causal);
      }
    } else if (causal) {
      ++mismatches;  // the monotone plan is causal whenever any coupling is
    }
  }
  CHECK(mismatches == 0);
  CHECK(causal_instances >= 50);
}

TEST_CASE("null connection of fibered measures") {
  const auto patch = flat_product_patch(0.0, 4.0);
  const std::size_t m = patch.size();
  auto mu0 = fiber_uniform(patch, same_windows(m, 0.0, 1.0), std::vector<double>(m, 1.0));
  mu0.normalize();
  const auto shifted = flow_pushforward(mu0, std::vector<double>(m, 1.0));
  auto c = check_null_connected(mu0, shifted);
  CHECK(c.connected);
  CHECK(c.mismatch == 0.0);

  // 10% of one fiber's mass moved to another generator
  FiberedMeasure moved = mu0;
  const double fm = mu0.fibers[0].mass();
  moved.fibers[0] = mu0.fibers[0].scaled(0.9);
  moved.fibers[1] = mu0.fibers[1].scaled(1.0 + 0.1 * fm / mu0.fibers[1].mass());
  c = check_null_connected(mu0, moved);
  CHECK(!c.connected);
  CHECK(c.mismatch == doctest::Approx(0.1 * fm).epsilon(1e-12));
  CHECK_THROWS_AS(monotone_plan(mu0, moved), Error);

  // uniform measures on disjoint windows of the same generators
  auto late = fiber_uniform(patch, same_windows(m, 2.5, 3.5), std::vector<double>(m, 1.0));
  late.normalize();
  CHECK(check_null_connected(mu0, late).connected);
}

TEST_CASE("interpolation conserves mass and transverse integrals") {
  const auto patch = cone_patch(0.0, 3.0, sphere_rule(2, 4, 6));
  const std::size_t m = patch.size();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> w0(m), w1(m);
  std::vector<double> mass(m), label(m);
  for (std::size_t z = 0; z < m; ++z) {
    const double a = 0.8 * u(rng);
    w0[z] = {a, a + 0.3 + 0.5 * u(rng)};
    const double b = 1.2 + 1.0 * u(rng);
    w1[z] = {b, b + 0.2 + 0.4 * u(rng)};
    mass[z] = 0.5 + u(rng);
    label[z] = std::sin(3.0 * z) + 2.0;
  }
  auto mu0 = from_reference_density(patch, w0, [](const Vec& x, std::size_t, double t) { return 1.0 + x(1) * x(1) + t; });
  mu0.normalize();
  auto mu1 = fiber_uniform(patch, w1, std::vector<double>(m, 1.0));
  for (std::size_t z = 0; z < m; ++z) mu1.fibers[z] = mu1.fibers[z].scaled(mu0.fibers[z].mass());
  const auto plan = monotone_plan(mu0, mu1);
  CHECK(plan.min_displacement() > 0.0);
  const double phi0 = mu0.integrate_label(label);
  for (int k = 0; k <= 16; ++k) {
    const double t = k / 16.0;
    const auto mt = interpolate(plan, t);
    CHECK(std::abs(mt.total_mass() - 1.0) <= 1e-10);
    CHECK(std::abs(mt.integrate_label(label) - phi0) <= 1e-9);
  }
  const auto end0 = interpolate(plan, 0.0), end1 = interpolate(plan, 1.0);
  for (std::size_t z = 0; z < m; ++z) {
    CHECK(cdf_distance(end0.fibers[z], mu0.fibers[z]) <= 1e-8);
    CHECK(cdf_distance(end1.fibers[z], mu1.fibers[z]) <= 1e-8);
    for (const auto& s : plan.fibers[z].segments) CHECK(s.y1 >= s.y0);
  }
}

TEST_CASE("entropy closed forms") {
  // Lebesgue reference
  const auto patch = flat_product_patch(0.0, 4.0);
  const std::size_t m = patch.size();
  for (double len : {0.5, 1.0, 2.5}) {
    auto mu = fiber_uniform(patch, same_windows(m, 0.5, 0.5 + len), std::vector<double>(m, 1.0));
    mu.normalize();
    CHECK(entropy(mu, patch) == doctest::Approx(-std::log(len)).epsilon(1e-12));
    CHECK(entropy_power(mu, patch, 3.0) == doctest::Approx(std::pow(len, 1.0 / 3.0)).epsilon(1e-12));
  }
  CHECK(entropy_power(0.0, 2.0) == 1.0);
  CHECK(entropy_power(std::numeric_limits<double>::infinity(), 2.0) == 0.0);

  // fiber masses w(z) on windows of reference mass m_z
  std::vector<double> w(m), len(m);
  for (std::size_t z = 0; z < m; ++z) {
    w[z] = 0.5 + 0.25 * z;
    len[z] = 1.0 + 0.5 * z;
  }
  std::vector<std::pair<double, double>> win(m);
  for (std::size_t z = 0; z < m; ++z) win[z] = {0.0, len[z]};
  auto mu = fiber_uniform(patch, win, w);
  const double total = mu.total_mass();
  for (auto& x : w) x /= total;
  mu.normalize();
  double exact = 0.0;
  for (std::size_t z = 0; z < m; ++z) exact += mu.section_weights[z] * w[z] * std::log(w[z] / len[z]);
  CHECK(entropy(mu, patch) == doctest::Approx(exact).epsilon(1e-12));

  // two narrow bumps of width ε: Ent = log(1/(2ε)) per unit section area
  double prev = -std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.01, 0.001, 1e-4}) {
    FiberedMeasure b;
    b.section_weights = mu.section_weights;
    for (std::size_t z = 0; z < m; ++z) b.fibers.push_back(DensityProfile({1.0, 1.0 + eps, 2.0, 2.0 + eps}, {0.5 / eps, 0.0, 0.5 / eps}));
    const double e = entropy(b, patch);
    CHECK(e == doctest::Approx(std::log(1.0 / (2 * eps))).epsilon(1e-12));
    CHECK(e > prev);
    prev = e;
  }

  // curved reference: uniform against (1 + t)² dt on the flat cone
  const auto cp = cone_patch(0.0, 2.0, sphere_rule(2, 4, 6), 128);
  std::vector<double> ones(cp.size(), 1.0);
  auto cu = fiber_uniform(cp, same_windows(cp.size(), 0.5, 1.5), ones, 8);
  cu.normalize();
  const double ref_mass = cp.section().area() * (std::pow(2.5, 3) - std::pow(1.5, 3)) / 3.0;
  CHECK(entropy(cu, cp) == doctest::Approx(-std::log(ref_mass)).epsilon(1e-8));

  // mass outside the reference window
  const auto outside = flow_pushforward(cu, std::vector<double>(cp.size(), 5.0));
  try {
    entropy(outside, cp);
    FAIL("expected NotAbsolutelyContinuous");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotAbsolutelyContinuous);
  }
}

TEST_CASE("one-dimensional entropy convexity on a cone generator") {
  // single generator; (R, (1+t)² dt) satisfies CD(0, 3)
  const auto patch = cone_patch(0.0, 6.0, sphere_rule(2, 1, 1), 256);
  auto mu0 = fiber_uniform(patch, {{0.2, 0.9}}, {1.0});
  auto mu1 = fiber_uniform(patch, {{3.0, 5.5}}, {1.0});
  mu0.normalize();
  mu1.normalize();
  const auto plan = monotone_plan(mu0, mu1);
  const auto curve = entropy_curve(plan, patch, 2.0, 65);
  const double h = curve.t[1] - curve.t[0];
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < curve.t.size(); ++k) {
    const double e2 = (curve.ent[k + 1] - 2 * curve.ent[k] + curve.ent[k - 1]) / (h * h);
    const double e1 = (curve.ent[k + 1] - curve.ent[k - 1]) / (2 * h);
    worst = std::min(worst, e2 - e1 * e1 / 3.0);
  }
  CHECK(worst >= -1e-4);

  std::ostringstream os;
  write_entropy_csv(curve, os);
  CHECK(os.str().rfind("t,Ent,U\n", 0) == 0);
}
