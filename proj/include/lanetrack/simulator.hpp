#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanetrack/config.hpp"
#include "lanetrack/detection.hpp"
#include "lanetrack/dynamics.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/image.hpp"
#include "lanetrack/observation.hpp"
#include "lanetrack/rng.hpp"

namespace lanetrack {

enum class Side { kLeft, kRight };

inline const char* side_name(Side s) { return s == Side::kLeft ? "left" : "right"; }

inline Side side_from_name(const std::string& name) {
    if (name == "left") return Side::kLeft;
    if (name == "right") return Side::kRight;
    throw std::invalid_argument("unknown side '" + name + "' (expected left|right)");
}

/// Which tracker a candidate line belongs to. Left markings lean one way,
/// right markings the other, so the line angle decides.
inline Side side_of_theta(double theta, double theta_split) {
    return theta >= theta_split ? Side::kLeft : Side::kRight;
}

/// One true lane marking: its initial state plus the detector noise its
/// candidates carry.
struct LaneSpec {
    Side side = Side::kRight;
    LaneState initial;
    double noise_rho = 2.0;    // px std on emitted candidates
    double noise_theta = 1.0;  // deg std
};

/// A persistent false edge (guardrail, shadow, pavement seam): a fixed line
/// re-detected with jitter over a frame range.
struct ClutterSpec {
    LineParam line;
    int from = 0;  // active over [from, to)
    int to = 0;
    double jitter_rho = 1.0;
    double jitter_theta = 0.5;
    double intensity = -1.0;  // rendered stripe brightness; < 0 uses lane_intensity
};

/// Frames where true markings emit no candidate (intersections, worn paint).
struct DropoutSpec {
    int from = 0;  // [from, to)
    int to = 0;
    std::optional<Side> side;  // absent = both sides
};

struct ScenarioConfig {
    std::string name = "custom";
    int n_frames = 100;
    DynamicsConfig dynamics{0.0625, 6.0, 2.0};
    ImageGeometry geometry;
    std::vector<LaneSpec> lanes;
    std::vector<ClutterSpec> clutter;
    std::vector<DropoutSpec> dropouts;
    int true_score = 60;     // accumulator score stand-in for true candidates
    int clutter_score = 50;  // ... and for clutter candidates
    std::uint64_t seed = 1;
    double theta_split = 90.0;

    // rendering
    double lane_intensity = 0.9;
    double background = 0.15;
    double pixel_noise = 0.02;
    double stripe_width = 4.0;

    bool dropout_active(int frame, Side side) const {
        for (const auto& d : dropouts)
            if (frame >= d.from && frame < d.to && (!d.side || *d.side == side)) return true;
        return false;
    }

    void validate() const {
        if (n_frames <= 0) throw std::invalid_argument("scenario: n_frames must be positive");
        if (!dynamics.valid()) throw std::invalid_argument("scenario: bad dynamics");
        if (!geometry.valid()) throw std::invalid_argument("scenario: bad geometry");
        if (lanes.empty()) throw std::invalid_argument("scenario: needs at least one lane");
        for (const auto& d : dropouts)
            if (d.from < 0 || d.to > n_frames || d.from > d.to)
                throw std::invalid_argument("scenario: dropout range outside [0, n_frames)");
        for (const auto& c : clutter)
            if (c.from < 0 || c.to > n_frames || c.from > c.to)
                throw std::invalid_argument("scenario: clutter range outside [0, n_frames)");
    }
};

struct GroundTruthTrajectory {
    std::vector<LaneState> states;
    int clamp_events = 0;
};

namespace detail {

// rng lane tags per randomness consumer; lane index is folded in so the
// second marking gets independent draws
inline constexpr std::uint64_t kSimTrajectory = 0x10000;
inline constexpr std::uint64_t kSimDetection = 0x20000;
inline constexpr std::uint64_t kSimClutter = 0x30000;
inline constexpr std::uint64_t kSimPixels = 0x40000;

}  // namespace detail

/// Roll the true state forward with the same constant-velocity dynamics the
/// filters assume. States are clamped into the valid line range; clamps are
/// counted so a scenario that fights its own geometry is visible.
inline GroundTruthTrajectory simulate_trajectory(const ScenarioConfig& cfg, std::size_t lane_index = 0) {
    cfg.validate();
    const LaneSpec& lane = cfg.lanes.at(lane_index);
    const double rho_max = std::hypot(cfg.geometry.width, cfg.geometry.height);
    GroundTruthTrajectory out;
    out.states.reserve(static_cast<std::size_t>(cfg.n_frames));
    LaneState state = lane.initial;
    for (int frame = 0; frame < cfg.n_frames; ++frame) {
        if (frame > 0) {
            Rng rng = Rng::stream(cfg.seed, detail::kSimTrajectory + lane_index,
                                  static_cast<std::uint64_t>(frame));
            state = propagate(state, cfg.dynamics, sample_process_noise(cfg.dynamics, rng));
        }
        const double rho_clamped = std::clamp(state.rho, 0.0, rho_max);
        const double theta_clamped = std::clamp(state.theta, 0.5, 179.5);
        if (rho_clamped != state.rho || theta_clamped != state.theta) ++out.clamp_events;
        state.rho = rho_clamped;
        state.theta = theta_clamped;
        out.states.push_back(state);
    }
    return out;
}

/// Direct observation path: noisy candidates straight from the ground
/// truth, skipping image rendering. Candidates carry the configured scores
/// and are ordered by score (truth first on ties), which is what the
/// rendered-and-detected path would produce; per-side sets are weighted and
/// normalized by the observation model.
inline std::map<Side, std::vector<ObservationSet>> emit_observations(
    const std::vector<GroundTruthTrajectory>& truths, const ScenarioConfig& cfg,
    const ObservationConfig& obs_cfg) {
    cfg.validate();
    if (truths.size() != cfg.lanes.size())
        throw std::invalid_argument("emit_observations: one trajectory per lane required");
    std::map<Side, std::vector<ObservationSet>> out;
    for (const auto& lane : cfg.lanes) out[lane.side];  // ensure side presence
    for (const auto& c : cfg.clutter) out[side_of_theta(c.line.theta, cfg.theta_split)];
    for (int frame = 0; frame < cfg.n_frames; ++frame) {
        std::map<Side, std::vector<ScoredLine>> candidates;
        for (const auto& kvp : out) candidates[kvp.first];
        for (std::size_t li = 0; li < cfg.lanes.size(); ++li) {
            const LaneSpec& lane = cfg.lanes[li];
            if (cfg.dropout_active(frame, lane.side)) continue;
            Rng rng = Rng::stream(cfg.seed, detail::kSimDetection + li,
                                  static_cast<std::uint64_t>(frame));
            const LaneState& truth = truths[li].states[static_cast<std::size_t>(frame)];
            const LineParam line = LineParam::normalized(truth.rho + rng.normal(0.0, lane.noise_rho),
                                                         truth.theta + rng.normal(0.0, lane.noise_theta));
            candidates[lane.side].push_back(ScoredLine{line, cfg.true_score});
        }
        for (std::size_t ci = 0; ci < cfg.clutter.size(); ++ci) {
            const ClutterSpec& c = cfg.clutter[ci];
            if (frame < c.from || frame >= c.to) continue;
            Rng rng = Rng::stream(cfg.seed, detail::kSimClutter + ci,
                                  static_cast<std::uint64_t>(frame));
            const LineParam line = LineParam::normalized(c.line.rho + rng.normal(0.0, c.jitter_rho),
                                                         c.line.theta + rng.normal(0.0, c.jitter_theta));
            candidates[side_of_theta(c.line.theta, cfg.theta_split)].push_back(
                ScoredLine{line, cfg.clutter_score});
        }
        for (auto& [side, list] : candidates) {
            std::stable_sort(list.begin(), list.end(),
                             [](const ScoredLine& a, const ScoredLine& b) { return a.score > b.score; });
            out[side].push_back(build_observation(list, cfg.geometry, obs_cfg, frame));
        }
    }
    return out;
}

namespace detail {

inline void draw_stripe(Image& img, const LineParam& line, double half_width, double intensity) {
    const double t = deg_to_rad(line.theta);
    const double sin_t = std::sin(t);
    const double cos_t = std::cos(t);
    if (std::abs(sin_t) < 1e-6) return;  // horizontal stripes never occur in valid scenarios
    const double reach = (half_width + 1.0) / std::abs(sin_t);
    for (int y = 0; y < img.height; ++y) {
        const double xc = (line.rho + y * cos_t) / sin_t;
        const int x0 = std::max(0, static_cast<int>(std::floor(xc - reach)));
        const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(xc + reach)));
        for (int x = x0; x <= x1; ++x) {
            const double dist = std::abs(x * sin_t - y * cos_t - line.rho);
            const double coverage = std::clamp(half_width + 0.5 - dist, 0.0, 1.0);
            if (coverage <= 0.0) continue;
            for (int c = 0; c < img.channels; ++c) {
                const double base = img.at(x, y, c);
                img.at(x, y, c) = base + (intensity - base) * coverage;
            }
        }
    }
}

}  // namespace detail

/// Rendered path: gray road, bright anti-aliased stripes along the true
/// lanes and any active clutter, plus mild gray pixel noise. The same noise
/// value hits all three channels so a noisy gray pixel stays achromatic.
inline std::vector<Image> render_frames(const std::vector<GroundTruthTrajectory>& truths,
                                        const ScenarioConfig& cfg) {
    cfg.validate();
    if (truths.size() != cfg.lanes.size())
        throw std::invalid_argument("render_frames: one trajectory per lane required");
    std::vector<Image> frames;
    frames.reserve(static_cast<std::size_t>(cfg.n_frames));
    const double half_width = cfg.stripe_width / 2.0;
    for (int frame = 0; frame < cfg.n_frames; ++frame) {
        Image img(cfg.geometry.width, cfg.geometry.height, 3, cfg.background);
        for (std::size_t li = 0; li < cfg.lanes.size(); ++li) {
            if (cfg.dropout_active(frame, cfg.lanes[li].side)) continue;
            const LaneState& truth = truths[li].states[static_cast<std::size_t>(frame)];
            detail::draw_stripe(img, truth.line(), half_width, cfg.lane_intensity);
        }
        for (const auto& c : cfg.clutter) {
            if (frame < c.from || frame >= c.to) continue;
            const double intensity = c.intensity >= 0.0 ? c.intensity : cfg.lane_intensity;
            detail::draw_stripe(img, c.line, half_width, intensity);
        }
        if (cfg.pixel_noise > 0.0) {
            Rng rng = Rng::stream(cfg.seed, detail::kSimPixels, static_cast<std::uint64_t>(frame));
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x) {
                    const double n = rng.normal(0.0, cfg.pixel_noise);
                    for (int c = 0; c < 3; ++c)
                        img.at(x, y, c) = std::clamp(img.at(x, y, c) + n, 0.0, 1.0);
                }
        }
        frames.push_back(std::move(img));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// scenario file format: flat `key = value`, lists as repeated keys
// ---------------------------------------------------------------------------

/// Applies scenario keys from `kv` on top of `base` (layering: presets or
/// earlier files provide the base, later sources override). List keys
/// (lane / clutter / dropout), when present, replace the base lists.
inline ScenarioConfig scenario_from_config(const KeyValueConfig& kv, ScenarioConfig base = {}) {
    ScenarioConfig cfg = std::move(base);
    cfg.name = kv.get_string("name", cfg.name);
    cfg.n_frames = static_cast<int>(kv.get_long("n_frames", cfg.n_frames));
    cfg.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(cfg.seed)));
    cfg.dynamics.frame_interval = kv.get_double("frame_interval", cfg.dynamics.frame_interval);
    cfg.dynamics.sigma_rho = kv.get_double("sigma_rho", cfg.dynamics.sigma_rho);
    cfg.dynamics.sigma_theta = kv.get_double("sigma_theta", cfg.dynamics.sigma_theta);
    cfg.geometry.width = static_cast<int>(kv.get_long("width", cfg.geometry.width));
    cfg.geometry.height = static_cast<int>(kv.get_long("height", cfg.geometry.height));
    cfg.geometry.focus_x = kv.get_double("focus_x", cfg.geometry.focus_x);
    cfg.geometry.focus_y = kv.get_double("focus_y", cfg.geometry.focus_y);
    cfg.theta_split = kv.get_double("theta_split", cfg.theta_split);
    cfg.true_score = static_cast<int>(kv.get_long("true_score", cfg.true_score));
    cfg.clutter_score = static_cast<int>(kv.get_long("clutter_score", cfg.clutter_score));
    cfg.lane_intensity = kv.get_double("lane_intensity", cfg.lane_intensity);
    cfg.background = kv.get_double("background", cfg.background);
    cfg.pixel_noise = kv.get_double("pixel_noise", cfg.pixel_noise);
    cfg.stripe_width = kv.get_double("stripe_width", cfg.stripe_width);

    if (kv.has("lane")) cfg.lanes.clear();
    if (kv.has("clutter")) cfg.clutter.clear();
    if (kv.has("dropout")) cfg.dropouts.clear();
    for (const auto* e : kv.all("lane")) {
        const auto f = KeyValueConfig::fields(*e);
        if (f.size() != 7)
            throw ConfigError(e->line, "lane expects: side rho v_rho theta v_theta noise_rho noise_theta");
        LaneSpec lane;
        try {
            lane.side = side_from_name(f[0]);
            lane.initial = LaneState{std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
            lane.noise_rho = std::stod(f[5]);
            lane.noise_theta = std::stod(f[6]);
        } catch (const std::exception& err) {
            throw ConfigError(e->line, std::string("lane: ") + err.what());
        }
        cfg.lanes.push_back(lane);
    }
    for (const auto* e : kv.all("clutter")) {
        const auto f = KeyValueConfig::fields(*e);
        if (f.size() != 6 && f.size() != 7)
            throw ConfigError(e->line,
                              "clutter expects: rho theta from to jitter_rho jitter_theta [intensity]");
        ClutterSpec c;
        try {
            c.line = LineParam{std::stod(f[0]), std::stod(f[1])};
            c.from = std::stoi(f[2]);
            c.to = std::stoi(f[3]);
            c.jitter_rho = std::stod(f[4]);
            c.jitter_theta = std::stod(f[5]);
            if (f.size() == 7) c.intensity = std::stod(f[6]);
        } catch (const std::exception& err) {
            throw ConfigError(e->line, std::string("clutter: ") + err.what());
        }
        cfg.clutter.push_back(c);
    }
    for (const auto* e : kv.all("dropout")) {
        const auto f = KeyValueConfig::fields(*e);
        if (f.size() != 2 && f.size() != 3)
            throw ConfigError(e->line, "dropout expects: from to [side]");
        DropoutSpec d;
        try {
            d.from = std::stoi(f[0]);
            d.to = std::stoi(f[1]);
            if (f.size() == 3) d.side = side_from_name(f[2]);
        } catch (const std::exception& err) {
            throw ConfigError(e->line, std::string("dropout: ") + err.what());
        }
        cfg.dropouts.push_back(d);
    }
    return cfg;
}

inline std::string scenario_to_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "name = " << cfg.name << "\n";
    out << "n_frames = " << cfg.n_frames << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "frame_interval = " << cfg.dynamics.frame_interval << "\n";
    out << "sigma_rho = " << cfg.dynamics.sigma_rho << "\n";
    out << "sigma_theta = " << cfg.dynamics.sigma_theta << "\n";
    out << "width = " << cfg.geometry.width << "\n";
    out << "height = " << cfg.geometry.height << "\n";
    out << "focus_x = " << cfg.geometry.focus_x << "\n";
    out << "focus_y = " << cfg.geometry.focus_y << "\n";
    out << "theta_split = " << cfg.theta_split << "\n";
    out << "true_score = " << cfg.true_score << "\n";
    out << "clutter_score = " << cfg.clutter_score << "\n";
    out << "lane_intensity = " << cfg.lane_intensity << "\n";
    out << "background = " << cfg.background << "\n";
    out << "pixel_noise = " << cfg.pixel_noise << "\n";
    out << "stripe_width = " << cfg.stripe_width << "\n";
    for (const auto& lane : cfg.lanes)
        out << "lane = " << side_name(lane.side) << " " << lane.initial.rho << " "
            << lane.initial.v_rho << " " << lane.initial.theta << " " << lane.initial.v_theta << " "
            << lane.noise_rho << " " << lane.noise_theta << "\n";
    for (const auto& c : cfg.clutter) {
        out << "clutter = " << c.line.rho << " " << c.line.theta << " " << c.from << " " << c.to
            << " " << c.jitter_rho << " " << c.jitter_theta;
        if (c.intensity >= 0.0) out << " " << c.intensity;
        out << "\n";
    }
    for (const auto& d : cfg.dropouts) {
        out << "dropout = " << d.from << " " << d.to;
        if (d.side) out << " " << side_name(*d.side);
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// named presets, modeled on the qualitative failure modes the trackers are
// compared on: A stresses persistent false edges plus dropouts, B/C mix in
// intermittent clutter, D is plain moderate noise, E is the clean baseline
// ---------------------------------------------------------------------------

inline ScenarioConfig scenario_preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    cfg.geometry = ImageGeometry{640, 368, 320.0, 150.0};

    // canonical right lane: from (430, 367) up toward the focus point
    const LaneState right_lane{218.0, 5.0, 63.0, 0.4};
    // canonical left lane: from (210, 367) up toward the focus point
    const LaneState left_lane{353.0, -4.0, 117.0, -0.3};

    if (name == "A") {
        // side roads: markings vanish near intersections while a strong
        // background edge persists; the false edge outscores the real one
        cfg.n_frames = 160;
        cfg.seed = 11;
        cfg.dynamics = DynamicsConfig{0.0625, 6.0, 2.0};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 2.0, 1.0});
        cfg.true_score = 60;
        cfg.clutter_score = 90;
        cfg.clutter.push_back(ClutterSpec{LineParam{378.0, 55.0}, 30, 120, 1.0, 0.5, 1.0});
        cfg.dropouts.push_back(DropoutSpec{50, 58, Side::kRight});
        cfg.dropouts.push_back(DropoutSpec{100, 108, Side::kRight});
        cfg.dropouts.push_back(DropoutSpec{140, 150, Side::kRight});
    } else if (name == "B") {
        cfg.n_frames = 140;
        cfg.seed = 23;
        cfg.dynamics = DynamicsConfig{0.0625, 8.0, 2.5};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 2.5, 1.0});
        cfg.true_score = 60;
        cfg.clutter_score = 75;
        cfg.clutter.push_back(ClutterSpec{LineParam{285.0, 58.0}, 20, 40, 1.5, 0.8, 1.0});
        cfg.clutter.push_back(ClutterSpec{LineParam{160.0, 70.0}, 80, 100, 1.5, 0.8, 1.0});
        cfg.dropouts.push_back(DropoutSpec{30, 38, Side::kRight});
    } else if (name == "C") {
        cfg.n_frames = 140;
        cfg.seed = 37;
        cfg.dynamics = DynamicsConfig{0.0625, 10.0, 3.0};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 3.0, 1.5});
        cfg.true_score = 60;
        cfg.clutter_score = 70;
        cfg.clutter.push_back(ClutterSpec{LineParam{300.0, 55.0}, 40, 70, 2.0, 1.0, 1.0});
        cfg.dropouts.push_back(DropoutSpec{55, 62, Side::kRight});
        cfg.dropouts.push_back(DropoutSpec{110, 118, Side::kRight});
    } else if (name == "D") {
        cfg.n_frames = 120;
        cfg.seed = 53;
        cfg.dynamics = DynamicsConfig{0.0625, 10.0, 3.0};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 3.0, 1.2});
        cfg.dropouts.push_back(DropoutSpec{45, 52, Side::kRight});
    } else if (name == "E") {
        // clean single-mode scene: Gaussian noise only, nothing missing
        cfg.n_frames = 120;
        cfg.seed = 71;
        cfg.dynamics = DynamicsConfig{0.0625, 4.0, 1.5};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 2.0, 1.0});
    } else if (name == "AB") {
        // two-sided variant of A for exercising the left/right pipeline
        cfg.n_frames = 160;
        cfg.seed = 11;
        cfg.dynamics = DynamicsConfig{0.0625, 6.0, 2.0};
        cfg.lanes.push_back(LaneSpec{Side::kRight, right_lane, 2.0, 1.0});
        cfg.lanes.push_back(LaneSpec{Side::kLeft, left_lane, 2.0, 1.0});
        cfg.true_score = 60;
        cfg.clutter_score = 90;
        cfg.clutter.push_back(ClutterSpec{LineParam{378.0, 55.0}, 30, 120, 1.0, 0.5, 1.0});
        cfg.dropouts.push_back(DropoutSpec{50, 58, Side::kRight});
        cfg.dropouts.push_back(DropoutSpec{100, 108, std::nullopt});
    } else {
        throw std::invalid_argument("unknown scenario preset '" + name + "'");
    }
    return cfg;
}

}  // namespace lanetrack
