#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "lanetrack/dynamics.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/matrix.hpp"
#include "lanetrack/observation.hpp"

namespace lanetrack {

/// Innovation covariance was (numerically) singular; signals a degenerate
/// R / covariance configuration rather than a transient data problem.
struct SingularInnovation : std::runtime_error {
    SingularInnovation() : std::runtime_error("kalman: singular innovation covariance") {}
};

/// Gaussian posterior over the lane state.
struct GaussianBelief {
    LaneState mean;
    Mat4 cov;
};

struct KalmanConfig {
    DynamicsConfig dynamics;
    Mat2 r = diag2(5.0, 5.0);  // observation noise covariance
    bool joseph_form = false;  // covariance update variant for long horizons

    /// Observation matrix: picks rho and theta out of the state.
    static Mat24 h() {
        Mat24 h;
        h(0, 0) = 1.0;
        h(1, 2) = 1.0;
        return h;
    }

    bool valid() const { return dynamics.valid() && r(0, 1) == r(1, 0) && r(0, 0) > 0.0 && det2(r) > 0.0; }
};

/// Wide default prior around a first detection: trusts the measured line,
/// knows nothing about its rates of change.
inline GaussianBelief initial_belief(const LineParam& first_detection) {
    GaussianBelief b;
    b.mean = LaneState{first_detection.rho, 0.0, first_detection.theta, 0.0};
    b.cov = diag4(100.0, 400.0, 25.0, 100.0);
    return b;
}

inline GaussianBelief kf_predict(const GaussianBelief& belief, const KalmanConfig& cfg) {
    const Mat4 f = transition_matrix(cfg.dynamics);
    GaussianBelief out;
    out.mean = propagate(belief.mean, cfg.dynamics);
    out.cov = symmetrized(f * belief.cov * f.transposed() + process_noise_cov(cfg.dynamics));
    return out;
}

inline GaussianBelief kf_update(const GaussianBelief& belief, const LineParam& z,
                                const KalmanConfig& cfg) {
    const Mat24 h = KalmanConfig::h();
    const Mat42 ht = h.transposed();
    const Mat2 s = h * belief.cov * ht + cfg.r;
    const auto eig = symmetric_eigenvalues(s);
    if (!(eig[0] > 0.0) || eig[1] / eig[0] > 1e12) throw SingularInnovation{};
    const Mat42 gain = belief.cov * ht * inverse2(s);
    const Vec2 innovation =
        vec2(z.rho - belief.mean.rho, z.theta - belief.mean.theta);
    GaussianBelief out;
    out.mean = LaneState::from_vec4(belief.mean.to_vec4() + gain * innovation);
    const Mat4 ikh = Mat4::identity() - gain * h;
    if (cfg.joseph_form) {
        out.cov = ikh * belief.cov * ikh.transposed() + gain * cfg.r * gain.transposed();
    } else {
        out.cov = ikh * belief.cov;
    }
    out.cov = symmetrized(out.cov);
    return out;
}

/// One tracking step: predict, then update with the top-scoring candidate
/// (the head of the detection list). A missing observation (K = 0) leaves
/// the prediction untouched.
inline GaussianBelief kf_step(const GaussianBelief& belief, const std::optional<ObservationSet>& obs,
                              const KalmanConfig& cfg) {
    GaussianBelief predicted = kf_predict(belief, cfg);
    if (!obs || obs->empty()) return predicted;
    return kf_update(predicted, obs->modes.front().line, cfg);
}

}  // namespace lanetrack
