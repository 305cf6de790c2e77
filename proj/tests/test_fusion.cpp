#include <doctest.h>

#include <cmath>
#include <random>

#include "panoflow/errors.hpp"
#include "panoflow/estimate.hpp"
#include "panoflow/fusion.hpp"
#include "panoflow/metrics.hpp"

using namespace panoflow;

namespace {

const ProjectionSpec kEq = ProjectionSpec::equirect(128, 64);

ConfidenceMap const_map(double v) {
  ConfidenceMap t(kEq.width, kEq.height, 1);
  for (auto& x : t.data) x = static_cast<float>(v);
  return t;
}

FlowField random_field(uint64_t seed, float amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uf(-amp, amp);
  FlowField f = make_flow(kEq);
  for (size_t i = 0; i < f.size(); ++i) {
    f.u[i] = uf(rng);
    f.v[i] = uf(rng) * 0.5f;
  }
  return f;
}

}  // namespace

TEST_CASE("blend endpoints") {
  const FlowField a = random_field(1, 0.05f);
  const FlowField b = random_field(2, 0.05f);

  const FlowField all_a = blend(a, b, const_map(1.0));
  CHECK(all_a.u == a.u);
  CHECK(all_a.v == a.v);

  const FlowField mid_same = blend(a, a, const_map(0.5));
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(mid_same.u[i] == doctest::Approx(a.u[i]).epsilon(1e-6));
    CHECK(mid_same.v[i] == doctest::Approx(a.v[i]).epsilon(1e-6));
  }
  // idempotent for any t when both inputs agree
  const FlowField t03 = blend(a, a, const_map(0.3));
  for (size_t i = 0; i < a.size(); ++i) CHECK(t03.u[i] == doctest::Approx(a.u[i]).epsilon(1e-6));
}

TEST_CASE("blend wraps longitude across the seam") {
  FlowField a = make_flow(kEq), b = make_flow(kEq);
  for (size_t i = 0; i < a.size(); ++i) {
    a.u[i] = static_cast<float>(kPi - 0.1);
    b.u[i] = static_cast<float>(-kPi + 0.1);
  }
  const FlowField out = blend(a, b, const_map(0.5));
  // shortest-arc midpoint of pi-0.1 and -pi+0.1 is pi, not zero
  for (size_t i = 0; i < out.size(); ++i)
    CHECK(std::abs(out.u[i]) == doctest::Approx(kPi).epsilon(1e-5));
}

TEST_CASE("blend validity handling") {
  FlowField a = random_field(3, 0.02f), b = random_field(4, 0.02f);
  a.valid[10] = 0;
  b.valid[20] = 0;
  a.valid[30] = 0;
  b.valid[30] = 0;
  const FlowField out = blend(a, b, const_map(0.5));
  CHECK(out.u[10] == b.u[10]);  // only b valid there
  CHECK(out.u[20] == a.u[20]);
  CHECK_FALSE((out.valid[30] & FlowField::kValid) != 0);
}

TEST_CASE("blend endpoint stays between the inputs") {
  const FlowField a = random_field(5, 0.06f);
  const FlowField b = random_field(6, 0.06f);
  const FlowField mid = blend(a, b, const_map(0.4));
  const double tol = kPi / kEq.width;  // half pixel
  for (int y = 0; y < kEq.height; y += 3)
    for (int x = 0; x < kEq.width; x += 3) {
      const auto ea = endpoint_dir(a, x, y);
      const auto eb = endpoint_dir(b, x, y);
      const auto em = endpoint_dir(mid, x, y);
      REQUIRE(ea);
      REQUIRE(eb);
      REQUIRE(em);
      CHECK(great_circle_angle(*em, *ea) <= great_circle_angle(*ea, *eb) + tol);
      CHECK(great_circle_angle(*em, *eb) <= great_circle_angle(*ea, *eb) + tol);
    }
}

TEST_CASE("oracle bounds bracket the predictions") {
  const FlowField gt = random_field(7, 0.03f);
  const FlowField b = random_field(8, 0.05f);
  const auto bounds = oracle_bounds(gt, b, gt);  // p_a == gt
  CHECK(bounds.lower.u == gt.u);
  CHECK(bounds.lower.v == gt.v);
  // upper picks b wherever it differs
  bool any_b = false;
  for (size_t i = 0; i < gt.size(); ++i)
    if (bounds.upper.u[i] == b.u[i] && b.u[i] != gt.u[i]) any_b = true;
  CHECK(any_b);

  // pointwise dominance, exact by construction
  const FlowField a = random_field(9, 0.05f);
  const auto ab = oracle_bounds(a, b, gt);
  for (int y = 0; y < kEq.height; ++y)
    for (int x = 0; x < kEq.width; ++x) {
      const auto eg = endpoint_dir(gt, x, y);
      const auto ea = endpoint_dir(a, x, y);
      const auto eb = endpoint_dir(b, x, y);
      const auto el = endpoint_dir(ab.lower, x, y);
      const auto eu = endpoint_dir(ab.upper, x, y);
      REQUIRE(el);
      const double derr_l = great_circle_angle(*el, *eg);
      const double derr_u = great_circle_angle(*eu, *eg);
      CHECK(derr_l <= great_circle_angle(*ea, *eg) + 1e-15);
      CHECK(derr_l <= great_circle_angle(*eb, *eg) + 1e-15);
      CHECK(derr_u >= great_circle_angle(*ea, *eg) - 1e-15);
      CHECK(derr_u >= great_circle_angle(*eb, *eg) - 1e-15);
    }

  // aggregate dominance follows
  const EvalReport rl = evaluate(ab.lower, gt);
  const EvalReport ru = evaluate(ab.upper, gt);
  const EvalReport raa = evaluate(a, gt);
  const EvalReport rbb = evaluate(b, gt);
  CHECK(rl.epe_mean <= std::min(raa.epe_mean, rbb.epe_mean) + 1e-12);
  CHECK(ru.epe_mean >= std::max(raa.epe_mean, rbb.epe_mean) - 1e-12);
}

TEST_CASE("oracle lower bound is strictly better on complementary errors") {
  const FlowField gt = random_field(10, 0.02f);
  PerturbModel eq_fav, pole_fav;
  eq_fav.profile = PerturbModel::Profile::EquatorFavoring;
  eq_fav.gain_px = 2.5;
  eq_fav.base_px = 0.05;
  pole_fav.profile = PerturbModel::Profile::PoleFavoring;
  pole_fav.gain_px = 2.5;
  pole_fav.base_px = 0.05;
  const FlowField pa = perturb_gt(gt, eq_fav, 31);
  const FlowField pb = perturb_gt(gt, pole_fav, 32);
  const auto bounds = oracle_bounds(pa, pb, gt);
  const double lower = evaluate(bounds.lower, gt).epe_mean;
  const double single = std::min(evaluate(pa, gt).epe_mean, evaluate(pb, gt).epe_mean);
  CHECK(lower < 0.9 * single);
}

TEST_CASE("heuristic confidence is symmetric on equal cues") {
  FusionCues a, b;
  a.area_prior = b.area_prior = const_map(1.2);
  a.boundary_margin = b.boundary_margin = const_map(0.7);
  a.fb_error = b.fb_error = const_map(0.4);
  const ConfidenceMap t = heuristic_confidence(a, b);
  for (int y = 0; y < kEq.height; y += 5)
    for (int x = 0; x < kEq.width; x += 5)
      CHECK(t.at(x, y) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("forward-backward consistency dominates when cues differ") {
  FusionCues a, b;
  a.area_prior = b.area_prior = const_map(1.0);
  a.boundary_margin = b.boundary_margin = const_map(0.5);
  a.fb_error = const_map(0.0);
  b.fb_error = const_map(3.0);
  const ConfidenceMap t = heuristic_confidence(a, b);
  CHECK(t.at(10, 10) > 0.9f);

  // fb term is ignored if either side lacks it
  b.fb_error = const_map(-1.0);
  const ConfidenceMap t2 = heuristic_confidence(a, b);
  CHECK(t2.at(10, 10) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("equator pixels favor equirect over tri-cylinder") {
  const ProjectionSpec cyl = ProjectionSpec::tri_cylinder(128, 108);
  const FusionCues ce = compute_cues(kEq, kEq);
  const FusionCues cc = compute_cues(cyl, kEq);
  const ConfidenceMap t = heuristic_confidence(ce, cc);
  const int eq_row = kEq.height / 2;
  double mean = 0;
  for (int x = 0; x < kEq.width; ++x) mean += t.at(x, eq_row);
  mean /= kEq.width;
  CHECK(mean > 0.5);

  // near the poles the tri-cylinder side takes over
  double pole = 0;
  for (int x = 0; x < kEq.width; ++x) pole += t.at(x, 1);
  pole /= kEq.width;
  CHECK(pole < 0.5);
}

TEST_CASE("fusion rejects mismatched inputs") {
  const FlowField a = random_field(1, 0.01f);
  FlowField b = make_flow(ProjectionSpec::equirect(64, 32));
  CHECK_THROWS_AS(blend(a, b, const_map(0.5)), DataError);
  const FlowField cyl = make_flow(ProjectionSpec::tri_cylinder(128, 108));
  CHECK_THROWS_AS(oracle_bounds(cyl, cyl, cyl), DataError);
}
