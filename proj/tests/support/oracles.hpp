#pragma once

// Independent reference implementations the tests check the library
// against. Everything here is deliberately written the dumb direct way and
// must not call into the code paths it verifies.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "lanetrack/detection.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/image.hpp"
#include "lanetrack/matrix.hpp"
#include "lanetrack/observation.hpp"

namespace oracle {

/// Distance from a point to the line through two points, straight from the
/// cross-product formula.
inline double two_point_distance(double px, double py, double x0, double y0, double x1, double y1) {
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    return std::abs(dx * (py - y0) - dy * (px - x0)) / std::hypot(dx, dy);
}

/// Two sample points on a (rho, theta) line, via its closest point to the
/// origin and its direction vector.
inline void points_on_line(const lanetrack::LineParam& line, double& x0, double& y0, double& x1,
                           double& y1) {
    const double t = lanetrack::deg_to_rad(line.theta);
    // foot of the perpendicular from the origin
    const double fx = line.rho * std::sin(t);
    const double fy = -line.rho * std::cos(t);
    x0 = fx - 1000.0 * std::cos(t);
    y0 = fy - 1000.0 * std::sin(t);
    x1 = fx + 1000.0 * std::cos(t);
    y1 = fy + 1000.0 * std::sin(t);
}

/// Bottom-row crossing found by scanning the bottom row for the x that
/// minimizes the distance to the line (sub-pixel refined by a parabola fit
/// over the discrete scan).
inline double rasterized_bottom_intercept(const lanetrack::LineParam& line, int width, int height) {
    const int y = height - 1;
    double best_x = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    double px0, py0, px1, py1;
    points_on_line(line, px0, py0, px1, py1);
    for (int xi = -4 * width; xi <= 5 * width; ++xi) {
        const double d = two_point_distance(xi, y, px0, py0, px1, py1);
        if (d < best_d) {
            best_d = d;
            best_x = xi;
        }
    }
    return best_x;
}

/// 4x4 matrix product written as the literal triple loop.
inline lanetrack::Mat4 mul4(const lanetrack::Mat4& a, const lanetrack::Mat4& b) {
    lanetrack::Mat4 out;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a(r, k) * b(k, c);
            out(r, c) = s;
        }
    return out;
}

/// Brute-force Hough accumulator + peak extraction mirroring the documented
/// contract: vote gate strictly greater than the threshold, rho/theta
/// limits, 3x3 NMS with lexicographic plateau ties, score-then-rho-then-
/// theta ordering.
struct BruteHough {
    int n_theta = 0;
    int n_rho = 0;
    std::vector<int> acc;  // indexed [rho][theta]

    int votes(int i, int j) const {
        if (i < 0 || i >= n_rho || j < 0 || j >= n_theta) return -1;
        return acc[static_cast<std::size_t>(i) * n_theta + j];
    }
};

inline BruteHough brute_hough_accumulator(const lanetrack::Image& binary,
                                          const lanetrack::DetectionConfig& cfg) {
    BruteHough h;
    h.n_theta = std::max(1, static_cast<int>(std::lround(180.0 / cfg.hough_theta_resolution)));
    h.n_rho = static_cast<int>(std::floor(std::hypot(binary.width, binary.height) /
                                          cfg.hough_rho_resolution)) +
              1;
    h.acc.assign(static_cast<std::size_t>(h.n_theta) * h.n_rho, 0);
    for (int y = 0; y < binary.height; ++y)
        for (int x = 0; x < binary.width; ++x) {
            if (binary.at(x, y) == 0.0) continue;
            for (int j = 0; j < h.n_theta; ++j) {
                const double theta = (j + 0.5) * cfg.hough_theta_resolution;
                const double rad = lanetrack::deg_to_rad(theta);
                const double rho = x * std::sin(rad) - y * std::cos(rad);
                const long i = std::lround(rho / cfg.hough_rho_resolution);
                if (i < 0 || i >= h.n_rho) continue;
                h.acc[static_cast<std::size_t>(i) * h.n_theta + j] += 1;
            }
        }
    return h;
}

inline std::vector<lanetrack::ScoredLine> brute_hough_lines(const lanetrack::Image& binary,
                                                            const lanetrack::DetectionConfig& cfg) {
    const BruteHough h = brute_hough_accumulator(binary, cfg);
    std::vector<lanetrack::ScoredLine> out;
    for (int i = 0; i < h.n_rho; ++i) {
        const double rho = i * cfg.hough_rho_resolution;
        if (rho < cfg.rho_min || rho > cfg.rho_max) continue;
        for (int j = 0; j < h.n_theta; ++j) {
            const double theta = (j + 0.5) * cfg.hough_theta_resolution;
            if (theta < cfg.theta_min || theta > cfg.theta_max) continue;
            const int v = h.votes(i, j);
            if (v <= cfg.accumulator_threshold) continue;
            bool peak = true;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int other = h.votes(i + di, j + dj);
                    if (other > v) peak = false;
                    if (other == v && (di < 0 || (di == 0 && dj < 0))) peak = false;
                }
            if (peak) out.push_back(lanetrack::ScoredLine{lanetrack::LineParam{rho, theta}, v});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const lanetrack::ScoredLine& a, const lanetrack::ScoredLine& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.line.rho != b.line.rho) return a.line.rho < b.line.rho;
                         return a.line.theta < b.line.theta;
                     });
    return out;
}

/// Bivariate normal density evaluated the long way (explicit inverse).
inline double gauss2(double dx, double dy, double s00, double s01, double s11) {
    const double det = s00 * s11 - s01 * s01;
    const double q = (s11 * dx * dx - 2.0 * s01 * dx * dy + s00 * dy * dy) / det;
    return std::exp(-0.5 * q) / (2.0 * lanetrack::kPi * std::sqrt(det));
}

/// Exact Bayes filter on a fixed (rho, theta) lattice: Gaussian random-walk
/// prediction as a separable truncated-kernel convolution, pointwise
/// likelihood update from the same observation sets the particle filter
/// sees, grid renormalization each step.
class GridBayesFilter {
public:
    GridBayesFilter(double rho_lo, double rho_hi, int n_rho, double theta_lo, double theta_hi,
                    int n_theta, double step_sigma_rho, double step_sigma_theta)
        : rho_lo_(rho_lo), theta_lo_(theta_lo), n_rho_(n_rho), n_theta_(n_theta),
          d_rho_((rho_hi - rho_lo) / n_rho), d_theta_((theta_hi - theta_lo) / n_theta),
          p_(static_cast<std::size_t>(n_rho) * n_theta, 1.0) {
        normalize();
        build_kernel(kernel_rho_, step_sigma_rho / d_rho_);
        build_kernel(kernel_theta_, step_sigma_theta / d_theta_);
    }

    double cell_rho(int i) const { return rho_lo_ + (i + 0.5) * d_rho_; }
    double cell_theta(int j) const { return theta_lo_ + (j + 0.5) * d_theta_; }
    double d_rho() const { return d_rho_; }
    double d_theta() const { return d_theta_; }

    void step(const lanetrack::ObservationSet& obs, const lanetrack::ObservationConfig& obs_cfg) {
        convolve();
        if (!obs.empty()) {
            for (int i = 0; i < n_rho_; ++i)
                for (int j = 0; j < n_theta_; ++j) {
                    lanetrack::LaneState s;
                    s.rho = cell_rho(i);
                    s.theta = cell_theta(j);
                    at(i, j) *= lanetrack::likelihood(s, obs, obs_cfg);
                }
        }
        normalize();
    }

    void init_from(const lanetrack::ObservationSet& obs, const lanetrack::ObservationConfig& obs_cfg) {
        for (int i = 0; i < n_rho_; ++i)
            for (int j = 0; j < n_theta_; ++j) {
                lanetrack::LaneState s;
                s.rho = cell_rho(i);
                s.theta = cell_theta(j);
                at(i, j) = lanetrack::likelihood(s, obs, obs_cfg);
            }
        normalize();
    }

    std::pair<double, double> mean() const {
        double mr = 0.0;
        double mt = 0.0;
        for (int i = 0; i < n_rho_; ++i)
            for (int j = 0; j < n_theta_; ++j) {
                mr += at(i, j) * cell_rho(i);
                mt += at(i, j) * cell_theta(j);
            }
        return {mr, mt};
    }

private:
    double& at(int i, int j) { return p_[static_cast<std::size_t>(i) * n_theta_ + j]; }
    double at(int i, int j) const { return p_[static_cast<std::size_t>(i) * n_theta_ + j]; }

    static void build_kernel(std::vector<double>& k, double sigma_cells) {
        const int reach = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_cells)));
        k.assign(static_cast<std::size_t>(2 * reach + 1), 0.0);
        double total = 0.0;
        for (int d = -reach; d <= reach; ++d) {
            const double v = sigma_cells > 0.0
                                 ? std::exp(-0.5 * (d / sigma_cells) * (d / sigma_cells))
                                 : (d == 0 ? 1.0 : 0.0);
            k[static_cast<std::size_t>(d + reach)] = v;
            total += v;
        }
        for (auto& v : k) v /= total;
    }

    void convolve() {
        std::vector<double> tmp(p_.size(), 0.0);
        const int rr = static_cast<int>(kernel_rho_.size() / 2);
        for (int i = 0; i < n_rho_; ++i)
            for (int j = 0; j < n_theta_; ++j) {
                double s = 0.0;
                for (int d = -rr; d <= rr; ++d) {
                    const int src = i + d;
                    if (src < 0 || src >= n_rho_) continue;
                    s += at(src, j) * kernel_rho_[static_cast<std::size_t>(d + rr)];
                }
                tmp[static_cast<std::size_t>(i) * n_theta_ + j] = s;
            }
        p_ = tmp;
        const int rt = static_cast<int>(kernel_theta_.size() / 2);
        for (int i = 0; i < n_rho_; ++i)
            for (int j = 0; j < n_theta_; ++j) {
                double s = 0.0;
                for (int d = -rt; d <= rt; ++d) {
                    const int src = j + d;
                    if (src < 0 || src >= n_theta_) continue;
                    s += at(i, src) * kernel_theta_[static_cast<std::size_t>(d + rt)];
                }
                tmp[static_cast<std::size_t>(i) * n_theta_ + j] = s;
            }
        p_ = tmp;
    }

    void normalize() {
        double total = 0.0;
        for (double v : p_) total += v;
        for (auto& v : p_) v /= total;
    }

    double rho_lo_;
    double theta_lo_;
    int n_rho_;
    int n_theta_;
    double d_rho_;
    double d_theta_;
    std::vector<double> p_;
    std::vector<double> kernel_rho_;
    std::vector<double> kernel_theta_;
};

}  // namespace oracle
