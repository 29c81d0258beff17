#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "gaitopt/gait.hpp"
#include "gaitopt/rng.hpp"

using namespace gaitopt;

TEST_CASE("wrap reduces components into [0,1) with non-negative modulo", "[gait]") {
  const GaitCommand g = wrap({1.2, -0.3, 0.5});
  CHECK(g[0] == Catch::Approx(0.2).margin(1e-15));
  CHECK(g[1] == Catch::Approx(0.7).margin(1e-15));
  CHECK(g[2] == Catch::Approx(0.5).margin(1e-15));

  const GaitCommand zero = wrap({0.0, 0.0, 0.0});
  CHECK(zero == gaits::pronk);

  const GaitCommand exact = wrap({2.0, 1.0, 0.999});
  CHECK(exact[0] == 0.0);
  CHECK(exact[1] == 0.0);
  CHECK(exact[2] == Catch::Approx(0.999).margin(1e-15));
}

TEST_CASE("wrap rejects non-finite components", "[gait]") {
  CHECK_THROWS_AS(wrap({std::numeric_limits<double>::quiet_NaN(), 0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(wrap({0, std::numeric_limits<double>::infinity(), 0}),
                  std::invalid_argument);
}

TEST_CASE("wrap is idempotent and shift-invariant", "[gait]") {
  RngStream rs(123, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::array<double, 3> raw{rs.uniform(-50.0, 50.0), rs.uniform(-50.0, 50.0),
                                    rs.uniform(-50.0, 50.0)};
    const GaitCommand once = wrap(raw);
    const GaitCommand twice = wrap(once.offsets());
    CHECK(once == twice);
    for (int i = 0; i < 3; ++i) {
      CHECK(once[i] >= 0.0);
      CHECK(once[i] < 1.0);
    }
    const int k = static_cast<int>(rs.below(7)) - 3;
    const GaitCommand shifted = wrap({raw[0] + k, raw[1] + k, raw[2] + k});
    for (int i = 0; i < 3; ++i) CHECK(shifted[i] == Catch::Approx(once[i]).margin(1e-9));
  }
}

TEST_CASE("gait distance examples", "[gait]") {
  const GaitCommand a = wrap({0.9, 0.0, 0.0});
  const GaitCommand b = wrap({0.1, 0.0, 0.0});
  CHECK(gait_distance_sq(a, a) == 0.0);
  CHECK(gait_distance_sq(a, b) == Catch::Approx(0.04).margin(1e-12));
  CHECK(gait_distance_sq(gaits::trot, gaits::pronk) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("gait distance is a circular metric", "[gait]") {
  RngStream rs(7, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const GaitCommand x = wrap({rs.uniform(), rs.uniform(), rs.uniform()});
    const GaitCommand y = wrap({rs.uniform(), rs.uniform(), rs.uniform()});
    const double dxy = gait_distance_sq(x, y);
    CHECK(dxy >= 0.0);
    CHECK(dxy == gait_distance_sq(y, x));
    CHECK(gait_distance_sq(x, x) == 0.0);
    if (dxy == 0.0) CHECK(x == y);

    // wrap-compatibility: distance of raw coordinates equals distance of
    // their wrapped images
    const std::array<double, 3> raw_x{x[0] + 2.0, x[1] - 3.0, x[2] + 1.0};
    CHECK(gait_distance_sq(wrap(raw_x), y) == Catch::Approx(dxy).margin(1e-9));
  }
}

TEST_CASE("foot offsets map the command onto (FL, FR, RL, RR)", "[gait]") {
  CHECK(foot_offsets(gaits::pronk) == std::array<double, 4>{0, 0, 0, 0});
  CHECK(foot_offsets(gaits::trot) == std::array<double, 4>{0, 0.5, 0.5, 0});
  const GaitCommand g = wrap({0.25, 0.5, 0.75});
  CHECK(foot_offsets(g) == std::array<double, 4>{0, 0.25, 0.5, 0.75});
}

TEST_CASE("contact schedule examples", "[gait]") {
  const ContactState pronk = contact_schedule(gaits::pronk, 0.0, 0.5);
  CHECK(pronk.stance == std::array<bool, 4>{true, true, true, true});

  const ContactState trot0 = contact_schedule(gaits::trot, 0.0, 0.5);
  CHECK(trot0.stance == std::array<bool, 4>{true, false, false, true});

  const ContactState trot_half = contact_schedule(gaits::trot, 0.5, 0.5);
  CHECK(trot_half.stance == std::array<bool, 4>{false, true, true, false});

  CHECK_THROWS_AS(contact_schedule(gaits::trot, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(contact_schedule(gaits::trot, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("stance fraction over a uniform phase sweep equals duty", "[gait]") {
  RngStream rs(99, 3);
  const int period = 200;
  for (int trial = 0; trial < 20; ++trial) {
    const GaitCommand g = wrap({rs.uniform(), rs.uniform(), rs.uniform()});
    const double duty = rs.uniform(0.1, 0.9);
    std::array<int, 4> in_stance{0, 0, 0, 0};
    for (int s = 0; s < period; ++s) {
      const ContactState c = contact_schedule(g, static_cast<double>(s) / period, duty);
      for (int f = 0; f < 4; ++f) in_stance[f] += c.stance[f] ? 1 : 0;
    }
    const int expected = static_cast<int>(std::ceil(period * duty));
    for (int f = 0; f < 4; ++f) {
      CHECK(in_stance[f] >= expected - 1);
      CHECK(in_stance[f] <= expected + 1);
    }
  }
}

TEST_CASE("canonical weights: maxima, symmetry, normalization", "[gait]") {
  const auto w_pronk = canonical_weights(gaits::pronk);
  for (int i = 0; i < 3; ++i) CHECK(w_pronk[3] > w_pronk[i]);

  // g equidistant from trot and pace
  const GaitCommand mid = wrap({0.5, 0.25, 0.25});
  const auto w_mid = canonical_weights(mid);
  CHECK(w_mid[0] == Catch::Approx(w_mid[1]).margin(1e-14));

  // direct evaluation of the softmin formula at sigma_w = 0.25:
  // d^2 = (0.125, 0.125, 0.375, 0.375) against (trot, pace, bound, pronk)
  const double e2 = std::exp(-0.125 / 0.0625);
  const double e6 = std::exp(-0.375 / 0.0625);
  const double z = 2.0 * e2 + 2.0 * e6;
  CHECK(w_mid[0] == Catch::Approx(e2 / z).margin(1e-12));
  CHECK(w_mid[2] == Catch::Approx(e6 / z).margin(1e-12));
  CHECK(w_mid[0] + w_mid[1] + w_mid[2] + w_mid[3] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("canonical weights sum to one for random gaits", "[gait]") {
  RngStream rs(5, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const GaitCommand g = wrap({rs.uniform(), rs.uniform(), rs.uniform()});
    const double sigma_w = rs.uniform(0.05, 1.0);
    const auto w = canonical_weights(g, sigma_w);
    double sum = 0.0;
    for (double wi : w) {
      CHECK(wi >= 0.0);
      sum += wi;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("nearest canonical distance is zero exactly on the table", "[gait]") {
  for (const auto& g : canonical_gaits()) CHECK(nearest_canonical_distance(g) == 0.0);
  const GaitCommand off = wrap({0.45, 0.5, 0.0});
  CHECK(nearest_canonical_distance(off) == Catch::Approx(0.05).margin(1e-12));
}
