#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "lanetrack/geometry.hpp"
#include "lanetrack/matrix.hpp"
#include "lanetrack/rng.hpp"

namespace lanetrack {

/// Constant-velocity motion model parameters. sigma_rho / sigma_theta are
/// standard deviations of the (unmodeled) accelerations driving the process
/// noise; they are scenario properties, so the defaults are only a fallback
/// for detector-driven runs without calibration data.
struct DynamicsConfig {
    double frame_interval = 0.0625;  // seconds per frame
    double sigma_rho = 50.0;         // px / s^2
    double sigma_theta = 20.0;       // deg / s^2

    bool valid() const {
        return frame_interval > 0.0 && sigma_rho >= 0.0 && sigma_theta >= 0.0;
    }
};

/// State transition matrix F for state order [rho, v_rho, theta, v_theta].
inline Mat4 transition_matrix(const DynamicsConfig& cfg) {
    Mat4 f = Mat4::identity();
    f(0, 1) = cfg.frame_interval;
    f(2, 3) = cfg.frame_interval;
    return f;
}

/// Process noise covariance of the constant-velocity model: block-diagonal
/// with [[T^3/3, T^2/2], [T^2/2, T]] * sigma^2 per coordinate.
inline Mat4 process_noise_cov(const DynamicsConfig& cfg) {
    const double t = cfg.frame_interval;
    const double t3 = t * t * t / 3.0;
    const double t2 = t * t / 2.0;
    const double vr = cfg.sigma_rho * cfg.sigma_rho;
    const double vt = cfg.sigma_theta * cfg.sigma_theta;
    Mat4 q;
    q(0, 0) = t3 * vr;
    q(0, 1) = q(1, 0) = t2 * vr;
    q(1, 1) = t * vr;
    q(2, 2) = t3 * vt;
    q(2, 3) = q(3, 2) = t2 * vt;
    q(3, 3) = t * vt;
    return q;
}

/// One draw from N(0, Q). Q's 2x2 blocks have the closed-form Cholesky
/// factor [[s*sqrt(T^3/3), 0], [s*sqrt(3T)/2, s*sqrt(T)/2]], which degrades
/// gracefully to zero columns when sigma = 0.
inline Vec4 sample_process_noise(const DynamicsConfig& cfg, Rng& rng) {
    const double t = cfg.frame_interval;
    const double l00 = std::sqrt(t * t * t / 3.0);
    const double l10 = std::sqrt(3.0 * t) / 2.0;
    const double l11 = std::sqrt(t) / 2.0;
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double z3 = rng.normal();
    return vec4(cfg.sigma_rho * l00 * z0, cfg.sigma_rho * (l10 * z0 + l11 * z1),
                cfg.sigma_theta * l00 * z2, cfg.sigma_theta * (l10 * z2 + l11 * z3));
}

/// F*x (+ noise when given).
inline LaneState propagate(const LaneState& state, const DynamicsConfig& cfg,
                           const std::optional<Vec4>& noise = std::nullopt) {
    const double t = cfg.frame_interval;
    LaneState out{state.rho + t * state.v_rho, state.v_rho, state.theta + t * state.v_theta,
                  state.v_theta};
    if (noise) {
        out.rho += (*noise)[0];
        out.v_rho += (*noise)[1];
        out.theta += (*noise)[2];
        out.v_theta += (*noise)[3];
    }
    return out;
}

}  // namespace lanetrack
