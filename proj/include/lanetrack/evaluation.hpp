#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanetrack/geometry.hpp"
#include "lanetrack/simulator.hpp"

namespace lanetrack {

struct LengthMismatch : std::runtime_error {
    LengthMismatch(std::size_t track, std::size_t truth)
        : std::runtime_error("track length " + std::to_string(track) +
                             " != truth length " + std::to_string(truth)) {}
};

/// Per-frame estimates from one tracker on one scenario.
struct TrackRecord {
    std::vector<LaneState> states;
    std::string tracker;   // "kf" | "pf"
    std::string scenario;
};

/// Tracking error summary for one (tracker, lane) pair.
struct ErrorReport {
    std::string scenario;
    std::string tracker;
    double mse_rho = 0.0;
    double mse_theta = 0.0;
    std::vector<double> err_rho;    // signed per-frame errors
    std::vector<double> err_theta;

    double rmse_rho() const { return std::sqrt(mse_rho); }
    double rmse_theta() const { return std::sqrt(mse_theta); }
};

inline ErrorReport mse(const TrackRecord& track, const GroundTruthTrajectory& truth) {
    if (track.states.size() != truth.states.size())
        throw LengthMismatch(track.states.size(), truth.states.size());
    ErrorReport rep;
    rep.scenario = track.scenario;
    rep.tracker = track.tracker;
    const std::size_t n = track.states.size();
    rep.err_rho.reserve(n);
    rep.err_theta.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double er = track.states[i].rho - truth.states[i].rho;
        const double et = track.states[i].theta - truth.states[i].theta;
        rep.err_rho.push_back(er);
        rep.err_theta.push_back(et);
        rep.mse_rho += er * er;
        rep.mse_theta += et * et;
    }
    rep.mse_rho /= static_cast<double>(n);
    rep.mse_theta /= static_cast<double>(n);
    return rep;
}

enum class Verdict { kBetter, kWorse, kIndistinguishable };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::kBetter: return "better";
        case Verdict::kWorse: return "worse";
        default: return "indistinguishable";
    }
}

/// RMSE gaps inside the detector resolution don't mean anything, so the
/// verdict is computed on RMSE (same units as the resolutions), not MSE.
inline Verdict judge(double rmse_self, double rmse_other, double resolution) {
    if (std::abs(rmse_self - rmse_other) <= resolution) return Verdict::kIndistinguishable;
    return rmse_self < rmse_other ? Verdict::kBetter : Verdict::kWorse;
}

struct ComparisonRow {
    std::string scenario;
    std::string variable;  // "rho" | "theta"
    double mse_kf = 0.0;
    double mse_pf = 0.0;
    double rmse_kf = 0.0;
    double rmse_pf = 0.0;
    Verdict kf_verdict = Verdict::kIndistinguishable;
    Verdict pf_verdict = Verdict::kIndistinguishable;
};

/// Side-by-side comparison of a KF and a PF report on the same scenario.
/// Resolutions default to the 1 px / 1 degree detector grid.
inline std::vector<ComparisonRow> compare(const ErrorReport& kf, const ErrorReport& pf,
                                          double rho_resolution = 1.0,
                                          double theta_resolution = 1.0) {
    if (kf.scenario != pf.scenario)
        throw std::invalid_argument("compare: reports from different scenarios");
    std::vector<ComparisonRow> rows;
    ComparisonRow rho_row{kf.scenario, "rho", kf.mse_rho, pf.mse_rho,
                          kf.rmse_rho(), pf.rmse_rho(),
                          judge(kf.rmse_rho(), pf.rmse_rho(), rho_resolution),
                          judge(pf.rmse_rho(), kf.rmse_rho(), rho_resolution)};
    ComparisonRow theta_row{kf.scenario, "theta", kf.mse_theta, pf.mse_theta,
                            kf.rmse_theta(), pf.rmse_theta(),
                            judge(kf.rmse_theta(), pf.rmse_theta(), theta_resolution),
                            judge(pf.rmse_theta(), kf.rmse_theta(), theta_resolution)};
    rows.push_back(rho_row);
    rows.push_back(theta_row);
    return rows;
}

/// Aligned plain-text table: scenario, state variable, KF and PF columns.
inline std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "scenario" << std::setw(9) << "state" << std::right
        << std::setw(12) << "KF mse" << std::setw(12) << "PF mse" << std::setw(11) << "KF rmse"
        << std::setw(11) << "PF rmse" << "  verdict(PF)\n";
    out << std::string(78, '-') << "\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        out << std::left << std::setw(10) << r.scenario << std::setw(9) << r.variable << std::right
            << std::setw(12) << r.mse_kf << std::setw(12) << r.mse_pf << std::setw(11) << r.rmse_kf
            << std::setw(11) << r.rmse_pf << "  " << verdict_name(r.pf_verdict) << "\n";
    }
    return out.str();
}

}  // namespace lanetrack
