// lanetrack command line: scenario generation, frame detection, KF/PF
// tracking and evaluation, wired together through on-disk CSV artifacts so
// every stage can be rerun and inspected in isolation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lanetrack/lanetrack.hpp"

namespace fs = std::filesystem;
using namespace lanetrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModuleConfigs {
    DetectionConfig det;
    ObservationConfig obs;
    KalmanConfig kf;
    ParticleConfig pf;
    bool obs_density_overridden = false;

    /// The uniform fallback density tracks the detector's limit box unless
    /// a config pinned it explicitly.
    void sync_derived() {
        if (!obs_density_overridden)
            obs.uniform_density = uniform_density_for_limits(det.rho_min, det.rho_max,
                                                             det.theta_min, det.theta_max);
        pf.obs_cfg = obs;
        pf.rho_min = det.rho_min;
        pf.rho_max = det.rho_max;
        pf.theta_min = det.theta_min;
        pf.theta_max = det.theta_max;
    }
};

void apply_module_keys(const KeyValueConfig& kv, ModuleConfigs& m) {
    m.det.downscale_width = static_cast<int>(kv.get_long("det.downscale_width", m.det.downscale_width));
    m.det.downscale_height =
        static_cast<int>(kv.get_long("det.downscale_height", m.det.downscale_height));
    m.det.gradient_threshold = kv.get_double("det.gradient_threshold", m.det.gradient_threshold);
    m.det.scanline_stride = static_cast<int>(kv.get_long("det.scanline_stride", m.det.scanline_stride));
    m.det.center_markings = kv.get_long("det.center_markings", m.det.center_markings ? 1 : 0) != 0;
    m.det.max_marking_width =
        static_cast<int>(kv.get_long("det.max_marking_width", m.det.max_marking_width));
    m.det.refine_peaks = kv.get_long("det.refine_peaks", m.det.refine_peaks ? 1 : 0) != 0;
    m.det.refine_band = kv.get_double("det.refine_band", m.det.refine_band);
    m.det.dedup_rho = kv.get_double("det.dedup_rho", m.det.dedup_rho);
    m.det.dedup_theta = kv.get_double("det.dedup_theta", m.det.dedup_theta);
    m.det.hough_rho_resolution = kv.get_double("det.rho_resolution", m.det.hough_rho_resolution);
    m.det.hough_theta_resolution =
        kv.get_double("det.theta_resolution", m.det.hough_theta_resolution);
    m.det.accumulator_threshold =
        static_cast<int>(kv.get_long("det.accumulator_threshold", m.det.accumulator_threshold));
    m.det.theta_min = kv.get_double("det.theta_min", m.det.theta_min);
    m.det.theta_max = kv.get_double("det.theta_max", m.det.theta_max);
    m.det.rho_min = kv.get_double("det.rho_min", m.det.rho_min);
    m.det.rho_max = kv.get_double("det.rho_max", m.det.rho_max);
    m.det.theta_split = kv.get_double("det.theta_split", m.det.theta_split);
    const std::string reducer = kv.get_string("det.reducer", "");
    if (reducer == "max")
        m.det.reducer = ChannelReducer::kMaxAbs;
    else if (reducer == "sum")
        m.det.reducer = ChannelReducer::kSumAbs;
    else if (reducer == "value")
        m.det.reducer = ChannelReducer::kValueOnly;
    else if (!reducer.empty())
        throw UsageError("det.reducer expects max|sum|value, got '" + reducer + "'");

    const double var_rho = kv.get_double("obs.var_rho", m.obs.sigma(0, 0));
    const double var_theta = kv.get_double("obs.var_theta", m.obs.sigma(1, 1));
    const double cov_rt = kv.get_double("obs.cov_rho_theta", m.obs.sigma(0, 1));
    m.obs.sigma = mat2(var_rho, cov_rt, cov_rt, var_theta);
    m.obs.epsilon_dist = kv.get_double("obs.epsilon_dist", m.obs.epsilon_dist);
    if (kv.has("obs.uniform_density")) {
        m.obs.uniform_density = kv.get_double("obs.uniform_density", m.obs.uniform_density);
        m.obs_density_overridden = true;
    }

    const double r_rho = kv.get_double("kf.r_rho", m.kf.r(0, 0));
    const double r_theta = kv.get_double("kf.r_theta", m.kf.r(1, 1));
    m.kf.r = diag2(r_rho, r_theta);
    m.kf.joseph_form = kv.get_long("kf.joseph_form", m.kf.joseph_form ? 1 : 0) != 0;

    m.pf.n_particles = static_cast<std::size_t>(kv.get_long("pf.n_particles",
                                                            static_cast<long>(m.pf.n_particles)));
    m.pf.resample_threshold = kv.get_double("pf.resample_threshold", m.pf.resample_threshold);
    m.pf.velocity_sigma_rho = kv.get_double("pf.velocity_sigma_rho", m.pf.velocity_sigma_rho);
    m.pf.velocity_sigma_theta = kv.get_double("pf.velocity_sigma_theta", m.pf.velocity_sigma_theta);
}

std::string module_keys_to_config(const ModuleConfigs& m) {
    std::ostringstream out;
    out.precision(17);
    out << "det.gradient_threshold = " << m.det.gradient_threshold << "\n";
    out << "det.scanline_stride = " << m.det.scanline_stride << "\n";
    out << "det.center_markings = " << (m.det.center_markings ? 1 : 0) << "\n";
    out << "det.refine_peaks = " << (m.det.refine_peaks ? 1 : 0) << "\n";
    out << "det.accumulator_threshold = " << m.det.accumulator_threshold << "\n";
    out << "det.theta_min = " << m.det.theta_min << "\n";
    out << "det.theta_max = " << m.det.theta_max << "\n";
    out << "det.rho_min = " << m.det.rho_min << "\n";
    out << "det.rho_max = " << m.det.rho_max << "\n";
    out << "det.theta_split = " << m.det.theta_split << "\n";
    out << "obs.var_rho = " << m.obs.sigma(0, 0) << "\n";
    out << "obs.var_theta = " << m.obs.sigma(1, 1) << "\n";
    out << "obs.cov_rho_theta = " << m.obs.sigma(0, 1) << "\n";
    out << "obs.uniform_density = " << m.obs.uniform_density << "\n";
    out << "obs.epsilon_dist = " << m.obs.epsilon_dist << "\n";
    out << "kf.r_rho = " << m.kf.r(0, 0) << "\n";
    out << "kf.r_theta = " << m.kf.r(1, 1) << "\n";
    out << "kf.joseph_form = " << (m.kf.joseph_form ? 1 : 0) << "\n";
    out << "pf.n_particles = " << m.pf.n_particles << "\n";
    out << "pf.resample_threshold = " << m.pf.resample_threshold << "\n";
    out << "pf.velocity_sigma_rho = " << m.pf.velocity_sigma_rho << "\n";
    out << "pf.velocity_sigma_theta = " << m.pf.velocity_sigma_theta << "\n";
    return out.str();
}

/// Layered load: preset (optional) < config file (optional) < CLI flags
/// (handled by the callers). Unknown keys are an error with line numbers.
struct LoadedConfig {
    ScenarioConfig scenario;
    ModuleConfigs modules;
    bool have_scenario = false;
};

LoadedConfig load_config(const std::string& preset, const std::string& config_path,
                         bool scenario_required) {
    LoadedConfig loaded;
    if (!preset.empty()) {
        loaded.scenario = scenario_preset(preset);  // throws for unknown presets
        loaded.have_scenario = true;
    }
    if (!config_path.empty()) {
        if (!fs::exists(config_path)) throw IoError("config file not found: " + config_path);
        const KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
        loaded.scenario = scenario_from_config(kv, loaded.scenario);
        apply_module_keys(kv, loaded.modules);
        if (const auto* stray = kv.first_unused())
            throw ConfigError(stray->line, "unknown config key '" + stray->key + "'");
        loaded.have_scenario = loaded.have_scenario || !loaded.scenario.lanes.empty();
    }
    if (scenario_required && !loaded.have_scenario)
        throw UsageError("no scenario: pass --preset NAME or --config FILE with lane definitions");
    loaded.modules.sync_derived();
    return loaded;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
}

std::string frame_name(int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.%s", index, ext);
    return buf;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string preset;
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    bool write_frames = false;
};

int run_simulate(const SimulateArgs& args) {
    LoadedConfig loaded = load_config(args.preset, args.config_path, true);
    ScenarioConfig& scenario = loaded.scenario;
    if (args.seed >= 0) scenario.seed = static_cast<std::uint64_t>(args.seed);
    scenario.validate();
    {
        std::map<Side, int> lanes_per_side;
        for (const auto& lane : scenario.lanes)
            if (++lanes_per_side[lane.side] > 1)
                throw UsageError("scenario defines more than one lane per side");
    }

    ensure_dir(args.out_dir);
    // effective configuration echo, for provenance and for `track`
    write_text_file((fs::path(args.out_dir) / "scenario.cfg").string(),
                    scenario_to_config(scenario) + module_keys_to_config(loaded.modules));

    std::vector<GroundTruthTrajectory> truths;
    for (std::size_t i = 0; i < scenario.lanes.size(); ++i)
        truths.push_back(simulate_trajectory(scenario, i));

    int files = 0;
    for (std::size_t i = 0; i < scenario.lanes.size(); ++i) {
        const std::string name = std::string("truth_") + side_name(scenario.lanes[i].side) + ".csv";
        std::ostringstream out;
        write_state_csv(out, truths[i].states);
        write_text_file((fs::path(args.out_dir) / name).string(), out.str());
        ++files;
        if (truths[i].clamp_events > 0)
            std::cerr << "note: " << truths[i].clamp_events << " state clamp(s) on lane "
                      << side_name(scenario.lanes[i].side) << "\n";
    }

    const auto per_side = emit_observations(truths, scenario, loaded.modules.obs);
    for (const auto& [side, sets] : per_side) {
        std::ostringstream out;
        write_observations_csv(out, sets);
        write_text_file(
            (fs::path(args.out_dir) / (std::string("observations_") + side_name(side) + ".csv"))
                .string(),
            out.str());
        ++files;
    }

    if (args.write_frames) {
        const fs::path frames_dir = fs::path(args.out_dir) / "frames";
        ensure_dir(frames_dir);
        const auto frames = render_frames(truths, scenario);
        for (int f = 0; f < scenario.n_frames; ++f) {
            write_pnm(frames[static_cast<std::size_t>(f)], (frames_dir / frame_name(f, "ppm")).string());
            ++files;
        }
    }

    std::cout << "simulate " << scenario.name << ": " << scenario.n_frames << " frames, "
              << scenario.lanes.size() << " lane(s), seed " << scenario.seed << ", " << files
              << " files -> " << args.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string frames_dir;
    std::string config_path;
    std::string out_dir = "out";
    bool dump_edges = false;
};

int run_detect(const DetectArgs& args) {
    if (!fs::is_directory(args.frames_dir)) throw IoError("frames directory not found: " + args.frames_dir);
    LoadedConfig loaded = load_config("", args.config_path, false);
    const ModuleConfigs& m = loaded.modules;
    ImageGeometry geom = loaded.have_scenario ? loaded.scenario.geometry : ImageGeometry{};
    geom.width = m.det.downscale_width;
    geom.height = m.det.downscale_height;

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.frames_dir)) {
        const auto ext = entry.path().extension().string();
        if (ext == ".ppm" || ext == ".pgm") files.push_back(entry.path());
    }
    if (files.empty()) throw IoError("no .ppm/.pgm frames in " + args.frames_dir);
    std::sort(files.begin(), files.end());

    ensure_dir(args.out_dir);
    const fs::path edges_dir = fs::path(args.out_dir) / "edges";
    if (args.dump_edges) ensure_dir(edges_dir);

    std::map<Side, std::vector<ObservationSet>> per_side;
    per_side[Side::kLeft];
    per_side[Side::kRight];
    for (int f = 0; f < static_cast<int>(files.size()); ++f) {
        Image frame = read_pnm(files[static_cast<std::size_t>(f)].string());
        if (frame.channels == 1) {
            // grayscale input: replicate into the three channels the pipeline expects
            Image rgb(frame.width, frame.height, 3);
            for (int y = 0; y < frame.height; ++y)
                for (int x = 0; x < frame.width; ++x)
                    for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = frame.at(x, y);
            frame = std::move(rgb);
        }
        std::vector<ScoredLine> candidates;
        if (args.dump_edges) {
            Image edges;
            candidates = detect_with_edges(frame, m.det, edges);
            write_pnm(edges, (edges_dir / frame_name(f, "pgm")).string());
        } else {
            candidates = detect(frame, m.det);
        }
        std::map<Side, std::vector<ScoredLine>> split;
        for (const auto& cand : candidates)
            split[side_of_theta(cand.line.theta, m.det.theta_split)].push_back(cand);
        for (auto& [side, sets] : per_side)
            sets.push_back(build_observation(split[side], geom, m.obs, f));
    }

    for (const auto& [side, sets] : per_side) {
        std::ostringstream out;
        write_observations_csv(out, sets);
        write_text_file(
            (fs::path(args.out_dir) / (std::string("observations_") + side_name(side) + ".csv"))
                .string(),
            out.str());
    }
    std::cout << "detect: " << files.size() << " frames -> " << args.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

struct TrackArgs {
    std::string scenario_dir;
    std::string config_path;
    std::string out_dir;
    std::string tracker = "both";
    std::int64_t seed = 1;
    int n_seeds = 1;
    std::int64_t particles = -1;
    bool trace = false;
};

std::vector<ObservationSet> load_observations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_observations_csv(in);
}

std::vector<LaneState> kf_track(const std::vector<ObservationSet>& obs, const KalmanConfig& cfg,
                                const ModuleConfigs& m, std::ostream* trace) {
    std::vector<LaneState> states;
    states.reserve(obs.size());
    if (trace) write_belief_trace_header(*trace);
    GaussianBelief belief;
    bool initialized = false;
    for (std::size_t f = 0; f < obs.size(); ++f) {
        if (!initialized) {
            // first detection seeds the belief; a blind start falls back to
            // the middle of the feasible box
            if (!obs[f].empty()) {
                belief = initial_belief(obs[f].modes.front().line);
                initialized = true;
            } else if (f == 0) {
                belief = initial_belief(LineParam{0.5 * (m.det.rho_min + m.det.rho_max),
                                                  0.5 * (m.det.theta_min + m.det.theta_max)});
                initialized = true;
            }
        } else {
            belief = kf_step(belief, obs[f], cfg);
        }
        states.push_back(belief.mean);
        if (trace) write_belief_trace_row(*trace, obs[f].frame_index, belief);
    }
    return states;
}

std::vector<LaneState> pf_track(const std::vector<ObservationSet>& obs, ParticleConfig cfg,
                                std::uint64_t seed, std::ostream* trace) {
    cfg.rng_seed = seed;
    std::vector<LaneState> states;
    states.reserve(obs.size());
    if (trace) write_cloud_trace_header(*trace);
    ParticleSet ps;
    for (std::size_t f = 0; f < obs.size(); ++f) {
        if (f == 0)
            ps = pf_init(obs[f], cfg);
        else
            ps = pf_step(ps, obs[f], cfg, nullptr);
        states.push_back(estimate(ps));
        if (trace) write_cloud_trace_rows(*trace, ps);
    }
    return states;
}

int run_track(const TrackArgs& args) {
    const fs::path scenario_dir(args.scenario_dir);
    if (!fs::is_directory(scenario_dir)) throw IoError("scenario directory not found: " + args.scenario_dir);
    if (args.tracker != "kf" && args.tracker != "pf" && args.tracker != "both")
        throw UsageError("--tracker expects kf|pf|both");

    // layered config: the scenario echo, then the user file
    LoadedConfig loaded;
    const fs::path echo = scenario_dir / "scenario.cfg";
    if (fs::exists(echo)) {
        const KeyValueConfig kv = KeyValueConfig::parse_file(echo.string());
        loaded.scenario = scenario_from_config(kv, loaded.scenario);
        apply_module_keys(kv, loaded.modules);
        loaded.have_scenario = true;
    }
    if (!args.config_path.empty()) {
        if (!fs::exists(args.config_path)) throw IoError("config file not found: " + args.config_path);
        const KeyValueConfig kv = KeyValueConfig::parse_file(args.config_path);
        loaded.scenario = scenario_from_config(kv, loaded.scenario);
        apply_module_keys(kv, loaded.modules);
        if (const auto* stray = kv.first_unused())
            throw ConfigError(stray->line, "unknown config key '" + stray->key + "'");
    }
    ModuleConfigs& m = loaded.modules;
    if (args.particles > 0) m.pf.n_particles = static_cast<std::size_t>(args.particles);
    if (loaded.have_scenario) {
        m.pf.dynamics = loaded.scenario.dynamics;
        m.kf.dynamics = loaded.scenario.dynamics;
    }
    m.sync_derived();

    const fs::path out_dir = args.out_dir.empty() ? scenario_dir : fs::path(args.out_dir);
    ensure_dir(out_dir);

    int files = 0;
    for (Side side : {Side::kLeft, Side::kRight}) {
        const fs::path obs_path =
            scenario_dir / (std::string("observations_") + side_name(side) + ".csv");
        if (!fs::exists(obs_path)) continue;
        const auto obs = load_observations(obs_path);
        if (obs.empty()) continue;

        if (args.tracker == "kf" || args.tracker == "both") {
            std::ostringstream trace;
            std::ostringstream csv;
            const auto states =
                kf_track(obs, m.kf, m, args.trace ? &trace : nullptr);
            write_state_csv(csv, states);
            write_text_file((out_dir / (std::string("track_kf_") + side_name(side) + ".csv")).string(),
                            csv.str());
            ++files;
            if (args.trace) {
                write_text_file(
                    (out_dir / (std::string("trace_kf_") + side_name(side) + ".csv")).string(),
                    trace.str());
            }
        }
        if (args.tracker == "pf" || args.tracker == "both") {
            for (int k = 0; k < args.n_seeds; ++k) {
                const std::uint64_t seed = static_cast<std::uint64_t>(args.seed) + static_cast<std::uint64_t>(k);
                std::ostringstream trace;
                std::ostringstream csv;
                const auto states = pf_track(obs, m.pf, seed, args.trace ? &trace : nullptr);
                write_state_csv(csv, states);
                write_text_file((out_dir / (std::string("track_pf_") + side_name(side) + "_s" +
                                            std::to_string(seed) + ".csv"))
                                    .string(),
                                csv.str());
                ++files;
                if (args.trace) {
                    write_text_file((out_dir / (std::string("trace_pf_") + side_name(side) + "_s" +
                                                std::to_string(seed) + ".csv"))
                                        .string(),
                                    trace.str());
                }
            }
        }
    }
    if (files == 0) throw IoError("no observations_<side>.csv found in " + args.scenario_dir);
    std::cout << "track (" << args.tracker << "): " << files << " track file(s) -> "
              << out_dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string scenario_dir;
    std::string tracks_dir;
    std::string out_dir;
};

int run_evaluate(const EvaluateArgs& args) {
    const fs::path scenario_dir(args.scenario_dir);
    if (!fs::is_directory(scenario_dir)) throw IoError("scenario directory not found: " + args.scenario_dir);
    const fs::path tracks_dir = args.tracks_dir.empty() ? scenario_dir : fs::path(args.tracks_dir);
    const fs::path out_dir = args.out_dir.empty() ? tracks_dir : fs::path(args.out_dir);
    ensure_dir(out_dir);

    std::string scenario_name = "scenario";
    const fs::path echo = scenario_dir / "scenario.cfg";
    if (fs::exists(echo))
        scenario_name = KeyValueConfig::parse_file(echo.string()).get_string("name", scenario_name);

    std::vector<ReportRow> rows;
    std::vector<ComparisonRow> table_rows;
    std::ostringstream spread_notes;
    int evaluated_sides = 0;

    for (Side side : {Side::kLeft, Side::kRight}) {
        const fs::path truth_path = scenario_dir / (std::string("truth_") + side_name(side) + ".csv");
        if (!fs::exists(truth_path)) continue;
        std::ifstream truth_in(truth_path);
        GroundTruthTrajectory truth;
        truth.states = read_state_csv(truth_in);

        auto read_track = [&](const fs::path& p, const char* tracker) {
            std::ifstream in(p);
            if (!in) throw IoError("cannot open " + p.string());
            TrackRecord rec;
            rec.states = read_state_csv(in);
            rec.tracker = tracker;
            rec.scenario = scenario_name;
            return rec;
        };

        std::optional<ErrorReport> kf_report;
        const fs::path kf_path = tracks_dir / (std::string("track_kf_") + side_name(side) + ".csv");
        if (fs::exists(kf_path)) kf_report = mse(read_track(kf_path, "kf"), truth);

        // PF: mean MSE over every seed file present, with the spread kept
        std::vector<ErrorReport> pf_reports;
        const std::string pf_prefix = std::string("track_pf_") + side_name(side) + "_s";
        std::vector<fs::path> pf_files;
        for (const auto& entry : fs::directory_iterator(tracks_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind(pf_prefix, 0) == 0 && name.size() > pf_prefix.size() &&
                entry.path().extension() == ".csv" && name.find("trace") == std::string::npos)
                pf_files.push_back(entry.path());
        }
        std::sort(pf_files.begin(), pf_files.end());
        for (const auto& p : pf_files) pf_reports.push_back(mse(read_track(p, "pf"), truth));

        std::optional<ErrorReport> pf_mean;
        if (!pf_reports.empty()) {
            ErrorReport mean;
            mean.scenario = scenario_name;
            mean.tracker = "pf";
            double lo_r = 1e300, hi_r = -1e300, lo_t = 1e300, hi_t = -1e300;
            for (const auto& r : pf_reports) {
                mean.mse_rho += r.mse_rho;
                mean.mse_theta += r.mse_theta;
                lo_r = std::min(lo_r, r.mse_rho);
                hi_r = std::max(hi_r, r.mse_rho);
                lo_t = std::min(lo_t, r.mse_theta);
                hi_t = std::max(hi_t, r.mse_theta);
            }
            mean.mse_rho /= static_cast<double>(pf_reports.size());
            mean.mse_theta /= static_cast<double>(pf_reports.size());
            pf_mean = mean;
            spread_notes << "pf " << side_name(side) << ": " << pf_reports.size()
                         << " seed(s), mse_rho in [" << lo_r << ", " << hi_r << "], mse_theta in ["
                         << lo_t << ", " << hi_t << "]\n";
        }

        const std::string suffix = std::string("_") + side_name(side);
        auto push_row = [&](const char* tracker, const char* variable, double mse_value,
                            double rmse_value, const std::string& verdict) {
            rows.push_back(ReportRow{scenario_name, variable + suffix, tracker, mse_value,
                                     rmse_value, verdict});
        };

        if (kf_report && pf_mean) {
            const auto cmp = compare(*kf_report, *pf_mean);
            for (const auto& row : cmp) {
                ComparisonRow tagged = row;
                tagged.variable += suffix;
                table_rows.push_back(tagged);
            }
            push_row("kf", "rho", kf_report->mse_rho, kf_report->rmse_rho(),
                     verdict_name(cmp[0].kf_verdict));
            push_row("kf", "theta", kf_report->mse_theta, kf_report->rmse_theta(),
                     verdict_name(cmp[1].kf_verdict));
            push_row("pf", "rho", pf_mean->mse_rho, pf_mean->rmse_rho(),
                     verdict_name(cmp[0].pf_verdict));
            push_row("pf", "theta", pf_mean->mse_theta, pf_mean->rmse_theta(),
                     verdict_name(cmp[1].pf_verdict));
        } else if (kf_report) {
            push_row("kf", "rho", kf_report->mse_rho, kf_report->rmse_rho(), "");
            push_row("kf", "theta", kf_report->mse_theta, kf_report->rmse_theta(), "");
        } else if (pf_mean) {
            push_row("pf", "rho", pf_mean->mse_rho, pf_mean->rmse_rho(), "");
            push_row("pf", "theta", pf_mean->mse_theta, pf_mean->rmse_theta(), "");
        } else {
            continue;
        }
        ++evaluated_sides;
    }
    if (evaluated_sides == 0) throw IoError("nothing to evaluate in " + tracks_dir.string());

    std::ostringstream report_csv;
    write_report_csv(report_csv, rows);
    write_text_file((out_dir / "report.csv").string(), report_csv.str());

    std::string table = table_rows.empty() ? std::string("(no KF/PF pair to compare)\n")
                                           : format_comparison_table(table_rows);
    if (spread_notes.str().size() > 0) table += "\n" + spread_notes.str();
    write_text_file((out_dir / "report.txt").string(), table);
    std::cout << table;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string preset;
    std::string config_path;
    std::string frames_dir;
    std::string out_dir;
    std::int64_t particles = -1;
};

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
}

int run_bench(const BenchArgs& args) {
    using clock = std::chrono::steady_clock;
    LoadedConfig loaded = load_config(args.preset, args.config_path, true);
    ModuleConfigs& m = loaded.modules;
    if (args.particles > 0) m.pf.n_particles = static_cast<std::size_t>(args.particles);
    m.pf.dynamics = loaded.scenario.dynamics;
    m.sync_derived();

    const ScenarioConfig& scenario = loaded.scenario;
    std::vector<GroundTruthTrajectory> truths;
    for (std::size_t i = 0; i < scenario.lanes.size(); ++i)
        truths.push_back(simulate_trajectory(scenario, i));
    const auto per_side = emit_observations(truths, scenario, m.obs);
    const auto& obs = per_side.begin()->second;

    std::vector<double> likelihood_ms;
    std::vector<double> resample_ms;
    ParticleSet ps = pf_init(obs[0], m.pf);
    Rng resample_rng(scenario.seed ^ 0xbeefULL);
    for (std::size_t f = 1; f < obs.size(); ++f) {
        // propagate + weight (the per-particle work of a PF step)
        auto t0 = clock::now();
        double total = 0.0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            Rng rng = Rng::stream(m.pf.rng_seed, 0x2000 + f, i);
            Particle& p = ps.particles[i];
            p.state = propagate(p.state, m.pf.dynamics, sample_process_noise(m.pf.dynamics, rng));
            p.weight *= likelihood(p.state, obs[f], m.pf.obs_cfg);
            total += p.weight;
        }
        auto t1 = clock::now();
        likelihood_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (total > 0.0) {
            for (auto& p : ps.particles) p.weight /= total;
        } else {
            for (auto& p : ps.particles) p.weight = 1.0 / static_cast<double>(ps.size());
        }
        t0 = clock::now();
        ps = resample(ps, resample_rng);
        t1 = clock::now();
        resample_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    std::vector<double> detect_ms;
    if (!args.frames_dir.empty()) {
        if (!fs::is_directory(args.frames_dir))
            throw IoError("frames directory not found: " + args.frames_dir);
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(args.frames_dir))
            if (entry.path().extension() == ".ppm") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            const Image frame = read_pnm(file.string());
            const auto t0 = clock::now();
            const auto candidates = detect(frame, m.det);
            const auto t1 = clock::now();
            (void)candidates;
            detect_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }

    std::ostringstream report;
    report << "stage,median_ms_per_frame,frames,particles\n";
    report << "likelihood," << median(likelihood_ms) << "," << likelihood_ms.size() << ","
           << m.pf.n_particles << "\n";
    report << "resample," << median(resample_ms) << "," << resample_ms.size() << ","
           << m.pf.n_particles << "\n";
    if (!detect_ms.empty())
        report << "detect," << median(detect_ms) << "," << detect_ms.size() << ",\n";
    std::cout << report.str();
    if (!args.out_dir.empty()) {
        ensure_dir(args.out_dir);
        write_text_file((fs::path(args.out_dir) / "bench.csv").string(), report.str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lane tracking benchmark: synthetic scenarios, scan-line + Hough detection, "
                 "Kalman and particle-filter trackers, MSE evaluation"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "generate scenario artifacts (truth, observations, frames)");
    simulate_cmd->add_option("--preset", sim.preset, "built-in scenario preset (A|B|C|D|E|AB)");
    simulate_cmd->add_option("--config", sim.config_path, "scenario/module config file");
    simulate_cmd->add_option("--out", sim.out_dir, "output directory")->capture_default_str();
    simulate_cmd->add_option("--seed", sim.seed, "override the scenario seed");
    simulate_cmd->add_flag("--frames", sim.write_frames, "also render PPM frames");

    DetectArgs det;
    auto* detect_cmd = app.add_subcommand("detect", "run the detection pipeline over a frame directory");
    detect_cmd->add_option("--frames-dir", det.frames_dir, "directory of .ppm/.pgm frames")->required();
    detect_cmd->add_option("--config", det.config_path, "detector/observation config file");
    detect_cmd->add_option("--out", det.out_dir, "output directory")->capture_default_str();
    detect_cmd->add_flag("--dump-edges", det.dump_edges, "write intermediate binary edge maps (PGM)");

    TrackArgs trk;
    auto* track_cmd = app.add_subcommand("track", "run KF/PF trackers over scenario observations");
    track_cmd->add_option("--scenario", trk.scenario_dir, "scenario artifact directory")->required();
    track_cmd->add_option("--config", trk.config_path, "config overrides");
    track_cmd->add_option("--out", trk.out_dir, "output directory (default: scenario dir)");
    track_cmd->add_option("--tracker", trk.tracker, "kf|pf|both")->capture_default_str();
    track_cmd->add_option("--seed", trk.seed, "base PF seed")->capture_default_str();
    track_cmd->add_option("--seeds", trk.n_seeds, "number of PF seeds (seed, seed+1, ...)")
        ->capture_default_str();
    track_cmd->add_option("--particles", trk.particles, "particle count override");
    track_cmd->add_flag("--trace", trk.trace, "write belief / particle-cloud traces");

    EvaluateArgs eva;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score tracks against ground truth");
    evaluate_cmd->add_option("--scenario", eva.scenario_dir, "scenario artifact directory")->required();
    evaluate_cmd->add_option("--tracks", eva.tracks_dir, "track directory (default: scenario dir)");
    evaluate_cmd->add_option("--out", eva.out_dir, "report directory (default: tracks dir)");

    BenchArgs ben;
    auto* bench_cmd = app.add_subcommand("bench", "per-stage wall-time medians");
    bench_cmd->add_option("--preset", ben.preset, "built-in scenario preset");
    bench_cmd->add_option("--config", ben.config_path, "scenario/module config file");
    bench_cmd->add_option("--frames-dir", ben.frames_dir, "also time detect() over these frames");
    bench_cmd->add_option("--particles", ben.particles, "particle count override");
    bench_cmd->add_option("--out", ben.out_dir, "also write bench.csv here");

    try {
        app.parse(argc, argv);
        if (*simulate_cmd) return run_simulate(sim);
        if (*detect_cmd) return run_detect(det);
        if (*track_cmd) return run_track(trk);
        if (*evaluate_cmd) return run_evaluate(eva);
        if (*bench_cmd) return run_bench(ben);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // 0 for --help, nonzero for usage errors
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SingularInnovation& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    }
}
