#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanetrack/geometry.hpp"
#include "lanetrack/kalman.hpp"
#include "lanetrack/observation.hpp"
#include "lanetrack/particle.hpp"

namespace lanetrack {

// CSV artifacts exchanged between the pipeline stages. Numbers are printed
// with %.17g so a parse/print round trip is exact and runs with the same
// seed stay byte-identical.

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    return out;
}

}  // namespace detail

/// truth / track schema: frame,rho,v_rho,theta,v_theta
inline void write_state_csv(std::ostream& out, const std::vector<LaneState>& states) {
    out << "frame,rho,v_rho,theta,v_theta\n";
    for (std::size_t i = 0; i < states.size(); ++i)
        out << i << ',' << detail::fmt(states[i].rho) << ',' << detail::fmt(states[i].v_rho) << ','
            << detail::fmt(states[i].theta) << ',' << detail::fmt(states[i].v_theta) << '\n';
}

inline std::vector<LaneState> read_state_csv(std::istream& in) {
    std::vector<LaneState> states;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("state csv: empty file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) throw std::runtime_error("state csv: expected 5 fields, got: " + line);
        try {
            states.push_back(
                LaneState{std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
        } catch (const std::exception&) {
            throw std::runtime_error("state csv: bad number in: " + line);
        }
    }
    return states;
}

/// observations schema: frame,k,rho,theta,weight with one row per mode;
/// a K = 0 frame is kept visible as a single row with k = -1.
inline void write_observations_csv(std::ostream& out, const std::vector<ObservationSet>& sets) {
    out << "frame,k,rho,theta,weight\n";
    for (const auto& obs : sets) {
        if (obs.empty()) {
            out << obs.frame_index << ",-1,0,0,0\n";
            continue;
        }
        for (int k = 0; k < obs.k(); ++k) {
            const auto& mode = obs.modes[static_cast<std::size_t>(k)];
            out << obs.frame_index << ',' << k << ',' << detail::fmt(mode.line.rho) << ','
                << detail::fmt(mode.line.theta) << ',' << detail::fmt(mode.weight) << '\n';
        }
    }
}

inline std::vector<ObservationSet> read_observations_csv(std::istream& in) {
    std::map<int, ObservationSet> by_frame;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("observations csv: empty file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5)
            throw std::runtime_error("observations csv: expected 5 fields, got: " + line);
        try {
            const int frame = std::stoi(f[0]);
            const int k = std::stoi(f[1]);
            auto& obs = by_frame[frame];
            obs.frame_index = frame;
            if (k >= 0)
                obs.modes.push_back(ObservationMode{LineParam{std::stod(f[2]), std::stod(f[3])},
                                                    std::stod(f[4])});
        } catch (const std::exception&) {
            throw std::runtime_error("observations csv: bad number in: " + line);
        }
    }
    std::vector<ObservationSet> out;
    out.reserve(by_frame.size());
    for (auto& [frame, obs] : by_frame) out.push_back(std::move(obs));
    return out;
}

/// report schema: scenario,variable,tracker,mse,rmse,verdict
struct ReportRow {
    std::string scenario;
    std::string variable;
    std::string tracker;
    double mse = 0.0;
    double rmse = 0.0;
    std::string verdict;
};

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "scenario,variable,tracker,mse,rmse,verdict\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << r.variable << ',' << r.tracker << ',' << detail::fmt(r.mse)
            << ',' << detail::fmt(r.rmse) << ',' << r.verdict << '\n';
}

/// Kalman belief trace: per-frame mean and covariance diagonal.
inline void write_belief_trace_header(std::ostream& out) {
    out << "frame,rho,v_rho,theta,v_theta,p00,p11,p22,p33\n";
}

inline void write_belief_trace_row(std::ostream& out, int frame, const GaussianBelief& belief) {
    out << frame << ',' << detail::fmt(belief.mean.rho) << ',' << detail::fmt(belief.mean.v_rho)
        << ',' << detail::fmt(belief.mean.theta) << ',' << detail::fmt(belief.mean.v_theta);
    for (int i = 0; i < 4; ++i) out << ',' << detail::fmt(belief.cov(i, i));
    out << '\n';
}

/// Particle cloud trace: frame,i,rho,v_rho,theta,v_theta,weight
inline void write_cloud_trace_header(std::ostream& out) {
    out << "frame,i,rho,v_rho,theta,v_theta,weight\n";
}

inline void write_cloud_trace_rows(std::ostream& out, const ParticleSet& ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& p = ps.particles[i];
        out << ps.frame_index << ',' << i << ',' << detail::fmt(p.state.rho) << ','
            << detail::fmt(p.state.v_rho) << ',' << detail::fmt(p.state.theta) << ','
            << detail::fmt(p.state.v_theta) << ',' << detail::fmt(p.weight) << '\n';
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lanetrack
