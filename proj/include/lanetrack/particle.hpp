#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lanetrack/dynamics.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/observation.hpp"
#include "lanetrack/rng.hpp"

namespace lanetrack {

struct Particle {
    LaneState state;
    double weight = 0.0;
};

struct ParticleSet {
    std::vector<Particle> particles;
    int frame_index = 0;

    std::size_t size() const { return particles.size(); }
};

struct ParticleConfig {
    std::size_t n_particles = 500;
    DynamicsConfig dynamics;
    ObservationConfig obs_cfg;
    // Resample when ESS < threshold * N. 0 disables resampling; values
    // above 1 force it every step.
    double resample_threshold = 0.5;
    std::uint64_t rng_seed = 0;

    // initial velocity spread (px/s, deg/s)
    double velocity_sigma_rho = 50.0;
    double velocity_sigma_theta = 20.0;

    // (rho, theta) box for observation-free initialization, matching the
    // detector's limits
    double rho_min = 0.0;
    double rho_max = 739.0;
    double theta_min = 15.0;
    double theta_max = 165.0;

    bool valid() const {
        return n_particles >= 2 && dynamics.valid() && obs_cfg.valid() &&
               resample_threshold >= 0.0 && resample_threshold <= 1.0;
    }
};

/// Per-step diagnostics, mostly for traces and tests.
struct StepStats {
    double ess = 0.0;
    bool resampled = false;
    bool weight_collapse = false;
};

namespace detail {

// rng lane tags so every randomness consumer gets its own stream
inline constexpr std::uint64_t kLaneInit = 0x1000;
inline constexpr std::uint64_t kLanePropagate = 0x2000;
inline constexpr std::uint64_t kLaneResample = 0x3000;

}  // namespace detail

inline double effective_sample_size(const ParticleSet& ps) {
    double sum_sq = 0.0;
    for (const auto& p : ps.particles) sum_sq += p.weight * p.weight;
    if (sum_sq == 0.0) return 0.0;
    return 1.0 / sum_sq;
}

/// Draw the initial cloud from the first frame's observation mixture, or
/// uniformly over the feasible box when nothing was detected. Velocities
/// start as zero-mean Gaussians; weights start uniform.
inline ParticleSet pf_init(const ObservationSet& initial_obs, const ParticleConfig& cfg) {
    ParticleSet ps;
    ps.frame_index = initial_obs.frame_index;
    ps.particles.resize(cfg.n_particles);
    const Mat2 sigma_chol = cholesky_lower(cfg.obs_cfg.sigma);
    const double w0 = 1.0 / static_cast<double>(cfg.n_particles);
    for (std::size_t i = 0; i < cfg.n_particles; ++i) {
        Rng rng = Rng::stream(cfg.rng_seed, detail::kLaneInit + static_cast<std::uint64_t>(initial_obs.frame_index), i);
        LaneState state;
        if (initial_obs.empty()) {
            state.rho = rng.uniform(cfg.rho_min, cfg.rho_max);
            state.theta = rng.uniform(cfg.theta_min, cfg.theta_max);
        } else {
            // pick a mode by weight, then jitter with the mode covariance
            const double u = rng.uniform();
            double cum = 0.0;
            const ObservationMode* chosen = &initial_obs.modes.back();
            for (const auto& mode : initial_obs.modes) {
                cum += mode.weight;
                if (u < cum) {
                    chosen = &mode;
                    break;
                }
            }
            const double z0 = rng.normal();
            const double z1 = rng.normal();
            state.rho = chosen->line.rho + sigma_chol(0, 0) * z0;
            state.theta = chosen->line.theta + sigma_chol(1, 0) * z0 + sigma_chol(1, 1) * z1;
        }
        state.v_rho = rng.normal(0.0, cfg.velocity_sigma_rho);
        state.v_theta = rng.normal(0.0, cfg.velocity_sigma_theta);
        ps.particles[i] = Particle{state, w0};
    }
    return ps;
}

/// Systematic resampling: N equally spaced positions with one shared
/// uniform offset. Copy counts stay within floor/ceil of N * weight, and
/// equal weights reproduce the input set unchanged.
inline ParticleSet resample(const ParticleSet& ps, Rng& rng) {
    const std::size_t n = ps.size();
    ParticleSet out;
    out.frame_index = ps.frame_index;
    out.particles.reserve(n);
    const double offset = rng.uniform();
    const double step = 1.0 / static_cast<double>(n);
    double cumulative = 0.0;
    std::size_t i = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double target = (static_cast<double>(j) + offset) * step;
        while (cumulative + ps.particles[i].weight < target && i + 1 < n) {
            cumulative += ps.particles[i].weight;
            ++i;
        }
        out.particles.push_back(Particle{ps.particles[i].state, step});
    }
    return out;
}

/// Weighted mean of the cloud: the tracker's point estimate.
inline LaneState estimate(const ParticleSet& ps) {
    Vec4 acc;
    for (const auto& p : ps.particles) acc += p.weight * p.state.to_vec4();
    return LaneState::from_vec4(acc);
}

/// One SIR step: propagate every particle through the dynamics with fresh
/// process noise, reweight by the observation likelihood, normalize, sort
/// by weight, and resample when the effective sample size drops below the
/// configured fraction.
///
/// All randomness comes from streams keyed on (seed, frame, particle), so
/// results are bit-reproducible and independent of evaluation order. A
/// total likelihood underflow (only possible when every particle sits far
/// outside every mode) recovers by resetting to uniform weights.
inline ParticleSet pf_step(const ParticleSet& ps, const ObservationSet& obs,
                           const ParticleConfig& cfg, StepStats* stats = nullptr) {
    const std::uint64_t frame = static_cast<std::uint64_t>(obs.frame_index);
    ParticleSet out;
    out.frame_index = obs.frame_index;
    out.particles.resize(ps.size());
    const bool informative = !obs.empty();
    double total = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Rng rng = Rng::stream(cfg.rng_seed, detail::kLanePropagate + frame, i);
        const Vec4 noise = sample_process_noise(cfg.dynamics, rng);
        Particle p;
        p.state = propagate(ps.particles[i].state, cfg.dynamics, noise);
        // a K = 0 frame multiplies every weight by the same uniform
        // density, so the normalized weights are left untouched
        p.weight = informative ? ps.particles[i].weight * likelihood(p.state, obs, cfg.obs_cfg)
                               : ps.particles[i].weight;
        total += p.weight;
        out.particles[i] = p;
    }
    bool collapsed = false;
    if (informative) {
        if (total <= 0.0 || !std::isfinite(total)) {
            collapsed = true;
            const double w0 = 1.0 / static_cast<double>(out.size());
            for (auto& p : out.particles) p.weight = w0;
        } else {
            for (auto& p : out.particles) p.weight /= total;
        }
    }
    std::stable_sort(out.particles.begin(), out.particles.end(),
                     [](const Particle& a, const Particle& b) { return a.weight > b.weight; });
    const double ess = effective_sample_size(out);
    bool resampled = false;
    if (ess < cfg.resample_threshold * static_cast<double>(out.size())) {
        Rng rng = Rng::stream(cfg.rng_seed, detail::kLaneResample + frame, 0);
        out = resample(out, rng);
        resampled = true;
    }
    if (stats) {
        stats->ess = ess;
        stats->resampled = resampled;
        stats->weight_collapse = collapsed;
    }
    return out;
}

}  // namespace lanetrack
