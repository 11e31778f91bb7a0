#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lanetrack/geometry.hpp"
#include "lanetrack/rng.hpp"
#include "support/oracles.hpp"

using namespace lanetrack;

namespace {
const ImageGeometry kGeom{640, 368, 320.0, 150.0};
}

TEST_CASE("bottom intercept of a vertical line is its own x", "[geometry]") {
    const LineParam vertical{320.0, 90.0};
    const auto x = line_bottom_intercept(vertical, kGeom);
    REQUIRE(x.has_value());
    REQUIRE(*x == Catch::Approx(320.0));
}

TEST_CASE("horizontal line has no bottom intercept", "[geometry]") {
    const LineParam horizontal{50.0, 0.0};
    REQUIRE_FALSE(line_bottom_intercept(horizontal, kGeom).has_value());
}

TEST_CASE("bottom intercept at 45 degrees matches the analytic solution and the raster scan",
          "[geometry]") {
    const LineParam line{100.0, 45.0};
    // x sin45 - 367 cos45 = 100  =>  x = (100 + 367 cos45) / sin45
    const double expected = (100.0 + 367.0 * std::cos(deg_to_rad(45.0))) / std::sin(deg_to_rad(45.0));
    REQUIRE(expected == Catch::Approx(508.4213562373095).epsilon(1e-12));
    const auto x = line_bottom_intercept(line, kGeom);
    REQUIRE(x.has_value());
    REQUIRE(*x == Catch::Approx(expected).epsilon(1e-12));
    REQUIRE(*x == Catch::Approx(oracle::rasterized_bottom_intercept(line, kGeom.width, kGeom.height))
                      .margin(0.5));
}

TEST_CASE("point-line distance basics", "[geometry]") {
    const LineParam line{120.0, 70.0};
    SECTION("point on the line") {
        // pick the foot of the perpendicular from the origin
        const double t = deg_to_rad(line.theta);
        const double px = line.rho * std::sin(t);
        const double py = -line.rho * std::cos(t);
        REQUIRE(point_line_distance(px, py, line) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("origin is rho away") {
        REQUIRE(point_line_distance(0.0, 0.0, line) == Catch::Approx(line.rho));
    }
    SECTION("distance to the y-axis line (rho=0, theta=90)") {
        const LineParam y_axis{0.0, 90.0};
        const double d = point_line_distance(10.0, 0.0, y_axis);
        REQUIRE(d == Catch::Approx(10.0));
        REQUIRE(d == Catch::Approx(oracle::two_point_distance(10.0, 0.0, 0.0, 0.0, 0.0, 50.0)));
    }
    SECTION("point on the x-axis boundary line") {
        const LineParam x_axis{0.0, 0.0};  // theta=0 sits on the open range boundary
        REQUIRE(point_line_distance(10.0, 0.0, x_axis) == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(point_line_distance(10.0, 7.0, x_axis) == Catch::Approx(7.0));
    }
}

TEST_CASE("distance is non-negative and zero iff the point satisfies the line equation",
          "[geometry]") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const LineParam line{rng.uniform(0.0, 500.0), rng.uniform(1.0, 179.0)};
        const double px = rng.uniform(-200.0, 800.0);
        const double py = rng.uniform(-200.0, 600.0);
        const double d = point_line_distance(px, py, line);
        REQUIRE(d >= 0.0);
        double x0, y0, x1, y1;
        oracle::points_on_line(line, x0, y0, x1, y1);
        REQUIRE(d == Catch::Approx(oracle::two_point_distance(px, py, x0, y0, x1, y1)).margin(1e-8));
        REQUIRE((d < 1e-9) == (std::abs(line_residual(px, py, line)) < 1e-9));
        // any point projected onto the line must then be at distance zero
        const double t = deg_to_rad(line.theta);
        const double shift = line_residual(px, py, line);
        const double qx = px - shift * std::sin(t);
        const double qy = py + shift * std::cos(t);
        REQUIRE(point_line_distance(qx, qy, line) == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("bottom intercept round-trips through line_through_points", "[geometry]") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = rng.uniform(10.0, 630.0);
        const LineParam line =
            line_through_points(x, kGeom.bottom_row(), kGeom.focus_x, kGeom.focus_y);
        if (!line.valid()) continue;  // horizontal-ish corner cases excluded by construction
        const auto back = line_bottom_intercept(line, kGeom);
        REQUIRE(back.has_value());
        REQUIRE(*back == Catch::Approx(x).margin(1e-6));
    }
}

TEST_CASE("line normalization canonicalizes the angle range", "[geometry]") {
    const LineParam a = LineParam::normalized(100.0, 200.0);
    REQUIRE(a.theta == Catch::Approx(20.0));
    REQUIRE(a.rho == Catch::Approx(-100.0));  // mirrored representative

    const LineParam b = LineParam::normalized(-100.0, 200.0);
    REQUIRE(b.theta == Catch::Approx(20.0));
    REQUIRE(b.rho == Catch::Approx(100.0));
    REQUIRE(b.valid());

    // normalization preserves the point set of the line
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const double rho = rng.uniform(-300.0, 300.0);
        const double theta = rng.uniform(-360.0, 720.0);
        const LineParam norm = LineParam::normalized(rho, theta);
        const double px = rng.uniform(-100.0, 700.0);
        const double t = deg_to_rad(theta);
        const double d_raw = std::abs(px * std::sin(t) - 42.0 * std::cos(t) - rho);
        REQUIRE(point_line_distance(px, 42.0, norm) == Catch::Approx(d_raw).margin(1e-9));
    }
}

TEST_CASE("lane state projects to a line and validates finiteness", "[geometry]") {
    const LaneState s{218.0, 5.0, 63.0, 0.4};
    REQUIRE(s.finite());
    const LineParam line = s.line();
    REQUIRE(line.rho == 218.0);
    REQUIRE(line.theta == 63.0);
    REQUIRE(line.valid());

    LaneState bad = s;
    bad.v_theta = std::nan("");
    REQUIRE_FALSE(bad.finite());

    const Vec4 v = s.to_vec4();
    const LaneState back = LaneState::from_vec4(v);
    REQUIRE(back.rho == s.rho);
    REQUIRE(back.v_theta == s.v_theta);
}

TEST_CASE("image geometry sanity", "[geometry]") {
    REQUIRE(kGeom.valid());
    REQUIRE(kGeom.bottom_midpoint_x() == 320.0);
    REQUIRE(kGeom.bottom_row() == 367);
    ImageGeometry bad = kGeom;
    bad.focus_x = 800.0;
    REQUIRE_FALSE(bad.valid());
}
