#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lanetrack/kalman.hpp"
#include "lanetrack/rng.hpp"
#include "support/oracles.hpp"

using namespace lanetrack;

namespace {

ObservationSet single_mode(double rho, double theta, int frame = 0) {
    ObservationSet obs;
    obs.frame_index = frame;
    obs.modes.push_back(ObservationMode{LineParam{rho, theta}, 1.0});
    return obs;
}

}  // namespace

TEST_CASE("predict is exact against a hand-multiplied covariance", "[kalman]") {
    SECTION("T=0 with zero noise is the identity") {
        KalmanConfig cfg;
        cfg.dynamics = DynamicsConfig{0.0, 0.0, 0.0};
        GaussianBelief b{LaneState{100.0, 10.0, 45.0, -2.0}, diag4(1.0, 2.0, 3.0, 4.0)};
        const GaussianBelief out = kf_predict(b, cfg);
        REQUIRE(out.mean.rho == b.mean.rho);
        REQUIRE(out.mean.v_rho == b.mean.v_rho);
        REQUIRE(out.cov == b.cov);
    }
    SECTION("deterministic propagation with zero covariance") {
        KalmanConfig cfg;
        cfg.dynamics = DynamicsConfig{0.06, 0.0, 0.0};
        GaussianBelief b{LaneState{100.0, 10.0, 45.0, 0.0}, Mat4::zero()};
        const GaussianBelief out = kf_predict(b, cfg);
        REQUIRE(out.mean.rho == Catch::Approx(100.6));
        REQUIRE(out.mean.theta == 45.0);
        for (double v : out.cov.m) REQUIRE(v == 0.0);
    }
    SECTION("unit covariance, T=1, unit sigmas") {
        KalmanConfig cfg;
        cfg.dynamics = DynamicsConfig{1.0, 1.0, 1.0};
        GaussianBelief b{LaneState{}, Mat4::identity()};
        const GaussianBelief out = kf_predict(b, cfg);
        REQUIRE(out.cov(0, 0) == Catch::Approx(7.0 / 3.0));
        // cross-check the whole covariance with the naive multiply oracle
        const Mat4 f = transition_matrix(cfg.dynamics);
        const Mat4 want = oracle::mul4(oracle::mul4(f, b.cov), f.transposed()) +
                          process_noise_cov(cfg.dynamics);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                REQUIRE(out.cov(r, c) == Catch::Approx(want(r, c)).margin(1e-12));
    }
}

TEST_CASE("update behaves like a textbook Kalman filter", "[kalman]") {
    KalmanConfig cfg;
    cfg.dynamics = DynamicsConfig{0.0625, 1.0, 1.0};

    SECTION("zero innovation keeps the mean and shrinks the covariance") {
        GaussianBelief b{LaneState{200.0, 3.0, 65.0, 0.1}, diag4(9.0, 4.0, 2.0, 1.0)};
        const GaussianBelief out = kf_update(b, LineParam{200.0, 65.0}, cfg);
        REQUIRE(out.mean.rho == Catch::Approx(200.0));
        REQUIRE(out.mean.theta == Catch::Approx(65.0));
        REQUIRE(out.cov.trace() < b.cov.trace());
    }

    SECTION("an uninformative observation leaves the posterior at the prior") {
        KalmanConfig wide = cfg;
        wide.r = diag2(5e12, 5e12);
        GaussianBelief b{LaneState{200.0, 3.0, 65.0, 0.1}, diag4(9.0, 4.0, 2.0, 1.0)};
        const GaussianBelief out = kf_update(b, LineParam{150.0, 90.0}, wide);
        REQUIRE(out.mean.rho == Catch::Approx(b.mean.rho).epsilon(1e-6));
        REQUIRE(out.mean.theta == Catch::Approx(b.mean.theta).epsilon(1e-6));
        for (int i = 0; i < 4; ++i)
            REQUIRE(out.cov(i, i) == Catch::Approx(b.cov(i, i)).epsilon(1e-6));
    }

    SECTION("scalar case reproduces the closed-form gain p/(p+r)") {
        KalmanConfig unit = cfg;
        unit.r = diag2(1.0, 1.0);
        GaussianBelief b{LaneState{100.0, 0.0, 45.0, 0.0}, diag4(1.0, 0.0, 0.0, 0.0)};
        const GaussianBelief out = kf_update(b, LineParam{102.0, 45.0}, unit);
        REQUIRE(out.mean.rho == Catch::Approx(101.0));  // gain 0.5 on a +2 innovation
        REQUIRE(out.mean.theta == Catch::Approx(45.0));
        REQUIRE(out.cov(0, 0) == Catch::Approx(0.5));
    }

    SECTION("degenerate innovation covariance raises SingularInnovation") {
        KalmanConfig degenerate = cfg;
        degenerate.r = mat2(1.0, 0.0, 0.0, 0.0);
        GaussianBelief b{LaneState{}, diag4(1.0, 0.0, 0.0, 0.0)};
        REQUIRE_THROWS_AS(kf_update(b, LineParam{1.0, 1.0}, degenerate), SingularInnovation);
    }

    SECTION("joseph form agrees with the simple form on healthy input") {
        KalmanConfig joseph = cfg;
        joseph.joseph_form = true;
        GaussianBelief b{LaneState{200.0, 3.0, 65.0, 0.1}, diag4(9.0, 4.0, 2.0, 1.0)};
        const GaussianBelief simple = kf_update(b, LineParam{204.0, 64.0}, cfg);
        const GaussianBelief robust = kf_update(b, LineParam{204.0, 64.0}, joseph);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                REQUIRE(simple.cov(r, c) == Catch::Approx(robust.cov(r, c)).margin(1e-9));
        REQUIRE(simple.mean.rho == Catch::Approx(robust.mean.rho));
    }
}

TEST_CASE("kf_step honors the missing-observation and head-mode contracts", "[kalman]") {
    KalmanConfig cfg;
    cfg.dynamics = DynamicsConfig{0.0625, 2.0, 1.0};
    const GaussianBelief start = initial_belief(LineParam{218.0, 63.0});

    SECTION("five empty frames equal five chained predictions, bitwise") {
        GaussianBelief stepped = start;
        GaussianBelief predicted = start;
        for (int i = 0; i < 5; ++i) {
            ObservationSet empty;
            empty.frame_index = i;
            stepped = kf_step(stepped, empty, cfg);
            predicted = kf_predict(predicted, cfg);
        }
        REQUIRE(stepped.mean.rho == predicted.mean.rho);
        REQUIRE(stepped.mean.v_rho == predicted.mean.v_rho);
        REQUIRE(stepped.mean.theta == predicted.mean.theta);
        REQUIRE(stepped.mean.v_theta == predicted.mean.v_theta);
        REQUIRE(stepped.cov == predicted.cov);
    }

    SECTION("no observation set at all behaves the same way") {
        const GaussianBelief a = kf_step(start, std::nullopt, cfg);
        const GaussianBelief b = kf_predict(start, cfg);
        REQUIRE(a.mean.rho == b.mean.rho);
        REQUIRE(a.cov == b.cov);
    }

    SECTION("K=1 equals predict followed by update") {
        const ObservationSet obs = single_mode(220.0, 62.5);
        const GaussianBelief a = kf_step(start, obs, cfg);
        const GaussianBelief b = kf_update(kf_predict(start, cfg), obs.modes[0].line, cfg);
        REQUIRE(a.mean.rho == b.mean.rho);
        REQUIRE(a.cov == b.cov);
    }

    SECTION("only the head mode matters") {
        ObservationSet three = single_mode(220.0, 62.5);
        three.modes.push_back(ObservationMode{LineParam{300.0, 45.0}, 0.2});
        three.modes.push_back(ObservationMode{LineParam{100.0, 120.0}, 0.1});
        const GaussianBelief a = kf_step(start, three, cfg);
        const GaussianBelief b = kf_step(start, single_mode(220.0, 62.5), cfg);
        REQUIRE(a.mean.rho == b.mean.rho);
        REQUIRE(a.mean.theta == b.mean.theta);
        REQUIRE(a.cov == b.cov);
    }
}

TEST_CASE("covariance stays symmetric PSD and updates never add information", "[kalman]") {
    Rng rng(2025);
    KalmanConfig cfg;
    cfg.dynamics = DynamicsConfig{0.0625, 5.0, 2.0};
    GaussianBelief b = initial_belief(LineParam{218.0, 63.0});
    for (int step = 0; step < 2000; ++step) {
        b = kf_predict(b, cfg);
        REQUIRE(is_symmetric_psd(b.cov, 1e-9));
        if (rng.uniform() < 0.7) {
            const double before = b.cov.trace();
            b = kf_update(b,
                          LineParam{b.mean.rho + rng.normal(0.0, 3.0),
                                    b.mean.theta + rng.normal(0.0, 1.5)},
                          cfg);
            REQUIRE(is_symmetric_psd(b.cov, 1e-9));
            REQUIRE(b.cov.trace() <= before + 1e-12);
        }
    }
}

TEST_CASE("initial belief wraps the first detection", "[kalman]") {
    const GaussianBelief b = initial_belief(LineParam{305.5, 117.25});
    REQUIRE(b.mean.rho == 305.5);
    REQUIRE(b.mean.theta == 117.25);
    REQUIRE(b.mean.v_rho == 0.0);
    REQUIRE(b.mean.v_theta == 0.0);
    REQUIRE(b.cov(0, 0) == 100.0);
    REQUIRE(b.cov(1, 1) == 400.0);
    REQUIRE(b.cov(2, 2) == 25.0);
    REQUIRE(b.cov(3, 3) == 100.0);
}
