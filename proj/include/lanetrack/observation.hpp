#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "lanetrack/detection.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/matrix.hpp"

namespace lanetrack {

/// One detected lane candidate together with its plausibility weight.
struct ObservationMode {
    LineParam line;
    double weight = 1.0;
};

/// One frame's observation: zero or more weighted modes. K = 0 encodes a
/// missing observation (dropout); K >= 1 sets carry weights normalized to
/// sum to one.
struct ObservationSet {
    std::vector<ObservationMode> modes;
    int frame_index = 0;

    int k() const { return static_cast<int>(modes.size()); }
    bool empty() const { return modes.empty(); }
};

/// Mixture-model settings. sigma is the shared per-mode covariance over
/// (rho, theta); uniform_density is the stand-in likelihood when no
/// candidate was detected; epsilon_dist floors the two weighting distances
/// so lines through the reference points keep finite weight.
struct ObservationConfig {
    Mat2 sigma = diag2(25.0, 4.0);  // px^2, deg^2
    double uniform_density = 1.0 / (739.0 * 150.0);  // over the default detector limit box
    double epsilon_dist = 1.0;

    bool valid() const {
        return sigma(0, 1) == sigma(1, 0) && det2(sigma) > 0.0 && sigma(0, 0) > 0.0 &&
               uniform_density > 0.0 && epsilon_dist > 0.0;
    }
};

/// Proper uniform density over the detector's feasible (rho, theta) box.
inline double uniform_density_for_limits(double rho_min, double rho_max, double theta_min,
                                         double theta_max) {
    const double area = (rho_max - rho_min) * (theta_max - theta_min);
    if (area <= 0.0) throw std::invalid_argument("uniform_density_for_limits: empty box");
    return 1.0 / area;
}

/// Unnormalized candidate weight 1 / (d_car * d_focus): d_car is how far
/// the line's bottom-edge intercept sits from the vehicle (bottom midpoint),
/// d_focus how far the line passes from the lane vanishing point. Lines
/// parallel to the bottom edge take the image width as d_car.
inline double mode_weight(const LineParam& line, const ImageGeometry& geom,
                          const ObservationConfig& cfg) {
    const auto intercept = line_bottom_intercept(line, geom);
    const double d_car = intercept ? std::abs(*intercept - geom.bottom_midpoint_x())
                                   : static_cast<double>(geom.width);
    const double d_focus = point_line_distance(geom.focus_x, geom.focus_y, line);
    return 1.0 / (std::max(d_car, cfg.epsilon_dist) * std::max(d_focus, cfg.epsilon_dist));
}

/// Turns a (threshold- and limit-filtered) candidate list into a normalized
/// observation set. Candidate order is preserved so the head of the list is
/// still the top-scoring detection. Accumulator scores gate candidacy and
/// ordering only; the mode weights come from the two distances alone.
inline ObservationSet build_observation(const std::vector<ScoredLine>& candidates,
                                        const ImageGeometry& geom, const ObservationConfig& cfg,
                                        int frame_index) {
    ObservationSet obs;
    obs.frame_index = frame_index;
    if (candidates.empty()) return obs;
    obs.modes.reserve(candidates.size());
    double total = 0.0;
    for (const auto& cand : candidates) {
        const double w = mode_weight(cand.line, geom, cfg);
        obs.modes.push_back(ObservationMode{cand.line, w});
        total += w;
    }
    for (auto& mode : obs.modes) mode.weight /= total;
    return obs;
}

namespace detail {

inline double gaussian2(double drho, double dtheta, const Mat2& sigma) {
    const double det = det2(sigma);
    const Mat2 inv = inverse2(sigma);
    const double quad = drho * (inv(0, 0) * drho + inv(0, 1) * dtheta) +
                        dtheta * (inv(1, 0) * drho + inv(1, 1) * dtheta);
    return std::exp(-0.5 * quad) / (2.0 * kPi * std::sqrt(det));
}

}  // namespace detail

/// GMM observation density at the state's (rho, theta); the K = 0 case
/// reduces to the configured uniform density.
inline double likelihood(const LaneState& state, const ObservationSet& obs,
                         const ObservationConfig& cfg) {
    if (obs.empty()) return cfg.uniform_density;
    double p = 0.0;
    for (const auto& mode : obs.modes)
        p += mode.weight *
             detail::gaussian2(state.rho - mode.line.rho, state.theta - mode.line.theta, cfg.sigma);
    return p;
}

/// Line-oriented text record: "frame_index K" then K rows "rho theta
/// weight". Lets detection and tracking run as separate processes.
inline void write_observation_record(std::ostream& out, const ObservationSet& obs) {
    out << obs.frame_index << " " << obs.k() << "\n";
    out.precision(17);
    for (const auto& mode : obs.modes)
        out << mode.line.rho << " " << mode.line.theta << " " << mode.weight << "\n";
}

inline ObservationSet read_observation_record(std::istream& in) {
    ObservationSet obs;
    int k = 0;
    if (!(in >> obs.frame_index >> k)) throw std::runtime_error("observation record: bad header");
    if (k < 0) throw std::runtime_error("observation record: negative K");
    obs.modes.resize(static_cast<std::size_t>(k));
    for (auto& mode : obs.modes)
        if (!(in >> mode.line.rho >> mode.line.theta >> mode.weight))
            throw std::runtime_error("observation record: truncated modes");
    return obs;
}

}  // namespace lanetrack
