#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "velan/traveltime.hpp"

using namespace velan;

TEST_CASE("halfpoints follow trace geometry", "[traveltime]") {
  CdpGather g = testutil::make_gather({{0.0f, 0.0f}}, 244);
  g.traces[0].sx = 0.0f;
  g.traces[0].gx = 100.0f;
  CHECK(compute_halfpoints(g)[0].h2 == 2500.0f);

  g.traces[0].gx = 0.0f;
  CHECK(compute_halfpoints(g)[0].h2 == 0.0f);

  g.traces[0].gx = 30.0f;
  g.traces[0].gy = 40.0f;
  CHECK(compute_halfpoints(g)[0].h2 == 625.0f);

  CdpGather empty;
  CHECK_THROWS_AS(compute_halfpoints(empty), parameter_error);
}

TEST_CASE("velocity grid spans [vmin, vmax]", "[traveltime]") {
  VelocityGrid grid(2000.0f, 3000.0f, 101);
  CHECK(grid.value(0) == 2000.0f);
  CHECK(grid.value(100) == 3000.0f);
  CHECK(grid.value(50) == Catch::Approx(2500.0f));

  VelocityGrid one(1500.0f, 9999.0f, 1);
  CHECK(one.value(0) == 1500.0f);

  CHECK_THROWS_AS(VelocityGrid(0.0f, 100.0f, 4), parameter_error);
  CHECK_THROWS_AS(VelocityGrid(200.0f, 100.0f, 4), parameter_error);
  CHECK_THROWS_AS(VelocityGrid(100.0f, 200.0f, 0), parameter_error);
}

TEST_CASE("nmo traveltime hyperbola", "[traveltime]") {
  CHECK(nmo_traveltime(0.5f, 0.0f, 2500.0f) == 0.5f);
  CHECK(nmo_traveltime(0.0f, 2500.0f, 1000.0f) == Catch::Approx(0.1));
  // direct arithmetic oracle
  const double expect = std::sqrt(1.0 + 4.0 * 2500.0 / (2000.0 * 2000.0));
  CHECK(nmo_traveltime(1.0f, 2500.0f, 2000.0f) ==
        Catch::Approx(expect).epsilon(1e-6));
  CHECK_THROWS_AS(nmo_traveltime(1.0f, 100.0f, 0.0f), parameter_error);
  CHECK_THROWS_AS(nmo_traveltime(1.0f, 100.0f, -5.0f), parameter_error);
}

TEST_CASE("crs traveltime extends the hyperbola by d2", "[traveltime]") {
  CHECK(crs_traveltime(0.0f, 0.0f, 10000.0f, 1000.0f) == Catch::Approx(0.1));
  const double expect = std::sqrt(1.0 + (4.0 * 2500.0 + 400.0) / 4.0e6);
  CHECK(crs_traveltime(1.0f, 2500.0f, 400.0f, 2000.0f) ==
        Catch::Approx(expect).epsilon(1e-6));

  // d2 = 0 must take the identical expression path, bit for bit
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> t0d(0.0f, 2.0f);
  std::uniform_real_distribution<float> h2d(0.0f, 1.0e6f);
  std::uniform_real_distribution<float> vd(500.0f, 6000.0f);
  for (int i = 0; i < 1000; ++i) {
    const float t0 = t0d(rng), h2 = h2d(rng), v = vd(rng);
    CHECK(crs_traveltime(t0, h2, 0.0f, v) == nmo_traveltime(t0, h2, v));
  }
}

TEST_CASE("nmo traveltime properties", "[traveltime]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> t0d(0.01f, 2.0f);
  std::uniform_real_distribution<float> h2d(1.0f, 1.0e6f);
  std::uniform_real_distribution<float> vd(500.0f, 6000.0f);
  for (int i = 0; i < 1000; ++i) {
    const float t0 = t0d(rng), h2 = h2d(rng);
    float v1 = vd(rng), v2 = vd(rng);
    if (v1 > v2) std::swap(v1, v2);
    // non-increasing in v; never below t0
    CHECK(nmo_traveltime(t0, h2, v1) >= nmo_traveltime(t0, h2, v2));
    CHECK(nmo_traveltime(t0, h2, v1) >= t0);
    CHECK(nmo_traveltime(t0, 0.0f, v1) == t0);
  }
}

TEST_CASE("hit_for centers the window on the curve", "[traveltime]") {
  const double dt = 1.0 / 4096.0;  // exact in binary

  SECTION("integer sample, centered window") {
    const CurveHit hit = hit_for(static_cast<float>(100.0 * dt), dt, 200, 4);
    CHECK(hit.k1 == 98);
    CHECK(hit.x == 0.0f);
    CHECK(hit.valid);
  }
  SECTION("window underflow") {
    const CurveHit hit = hit_for(0.0f, dt, 200, 4);
    CHECK(hit.k1 == -2);
    CHECK_FALSE(hit.valid);
  }
  SECTION("fractional sample") {
    const CurveHit hit = hit_for(static_cast<float>(10.25 * dt), dt, 200, 3);
    CHECK(hit.k1 == 9);
    CHECK(hit.x == 0.25f);
    CHECK(hit.valid);
  }
  SECTION("upper bound: window plus neighbor must fit") {
    // ns = 105: valid needs k1 + w < ns, so base <= 102
    CHECK(hit_for(static_cast<float>(102.0 * dt), dt, 105, 4).valid);
    CHECK_FALSE(hit_for(static_cast<float>(103.0 * dt), dt, 105, 4).valid);
  }
}

TEST_CASE("hit_for recovers the sample position", "[traveltime]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> sd(0.0, 500.0);
  const double dt = 220e-6;
  const int ns = 512;
  for (int i = 0; i < 2000; ++i) {
    const int w = 1 + static_cast<int>(rng() % 16);
    const double s = sd(rng);
    const float t = static_cast<float>(s * dt);
    const CurveHit hit = hit_for(t, dt, ns, w);
    CHECK(hit.x >= 0.0f);
    CHECK(hit.x < 1.0f);
    if (hit.valid) {
      const double s_rec = hit.k1 + w / 2 + static_cast<double>(hit.x);
      const double t_rec = s_rec * dt;
      CHECK(std::abs(t_rec - static_cast<double>(t)) <=
            static_cast<double>(
                std::nextafter(t, 2.0f * t + 1.0f) - t));
    }
  }
}
