#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lanetrack/geometry.hpp"
#include "lanetrack/image.hpp"

namespace lanetrack {

/// How per-channel scanline gradients are folded into one magnitude.
enum class ChannelReducer { kMaxAbs, kSumAbs, kValueOnly };

/// Tuning for the scan-line + Hough detector. The pipeline treats all of
/// these as scene-dependent: none of them has a single correct value.
struct DetectionConfig {
    int downscale_width = 640;
    int downscale_height = 368;

    double gradient_threshold = 0.15;       // on [0,1] channel values
    ChannelReducer reducer = ChannelReducer::kMaxAbs;

    // Scan every `scanline_stride`-th row of the ROI unless an explicit row
    // set is given.
    int scanline_stride = 4;
    std::optional<std::vector<int>> scanline_rows;

    // Marking centering: collapse the paired rising/falling gradient bands
    // of a painted stripe to its centerline pixel before voting. Width cap
    // in pixels between the paired edges.
    bool center_markings = true;
    int max_marking_width = 14;

    // Sub-cell peak refinement: with 1 px / 1 deg cells and an image-corner
    // origin, angle quantization alone shifts rho by several pixels
    // (lever arm times sin(half a cell)), so each surviving peak is refit
    // to its supporting pixels by total least squares.
    bool refine_peaks = true;
    double refine_band = 2.0;  // residual band around the peak cell, in px

    // Quantization spread leaves several NMS survivors per physical line;
    // survivors within both tolerances of a better-scoring candidate are
    // merged away.
    double dedup_rho = 4.0;    // px
    double dedup_theta = 2.0;  // deg

    double hough_rho_resolution = 1.0;     // px per accumulator cell
    double hough_theta_resolution = 1.0;   // deg per accumulator cell
    // Strictly-greater vote gate. Sized against the default scan density:
    // the lower-half ROI at stride 4 yields ~46 scan rows, and theta
    // quantization splits a line's votes over 2-3 rho cells.
    int accumulator_threshold = 10;

    double theta_min = 15.0;   // deg, candidates outside are dropped
    double theta_max = 165.0;
    double rho_min = 0.0;      // px
    double rho_max = 739.0;    // ~hypot(640, 368)

    double theta_split = 90.0;  // left/right partition: right < split <= left

    // ROI polygon in downscaled pixel coordinates; empty means the default
    // lower half of the image.
    std::vector<std::pair<double, double>> roi;

    std::vector<std::pair<double, double>> effective_roi() const {
        if (!roi.empty()) return roi;
        const double w = downscale_width;
        const double h = downscale_height;
        return {{0.0, h / 2.0}, {w, h / 2.0}, {w, h}, {0.0, h}};
    }
};

/// Candidate line with its accumulator vote count.
struct ScoredLine {
    LineParam line;
    int score = 0;
};

/// Standard hexcone RGB -> HSV, H scaled into [0,1] (H/360).
inline Image rgb_to_hsv(const Image& img) {
    if (img.channels != 3) throw std::invalid_argument("rgb_to_hsv: needs a 3-channel image");
    Image out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double r = img.at(x, y, 0);
            const double g = img.at(x, y, 1);
            const double b = img.at(x, y, 2);
            const double maxc = std::max({r, g, b});
            const double minc = std::min({r, g, b});
            const double delta = maxc - minc;
            double h = 0.0;
            if (delta > 0.0) {
                if (maxc == r)
                    h = std::fmod((g - b) / delta, 6.0);
                else if (maxc == g)
                    h = (b - r) / delta + 2.0;
                else
                    h = (r - g) / delta + 4.0;
                h /= 6.0;
                if (h < 0.0) h += 1.0;
            }
            const double s = maxc > 0.0 ? delta / maxc : 0.0;
            out.at(x, y, 0) = h;
            out.at(x, y, 1) = s;
            out.at(x, y, 2) = maxc;
        }
    }
    return out;
}

/// Area-averaged downsampling; handles fractional scale factors (1280x720
/// to 640x368 is not an integer ratio vertically). Upscaling is rejected.
inline Image downscale(const Image& img, int target_w, int target_h) {
    if (target_w > img.width || target_h > img.height)
        throw std::invalid_argument("downscale: target exceeds source size");
    if (target_w == img.width && target_h == img.height) return img;
    Image out(target_w, target_h, img.channels);
    const double sx = static_cast<double>(img.width) / target_w;
    const double sy = static_cast<double>(img.height) / target_h;
    for (int ty = 0; ty < target_h; ++ty) {
        const double y0 = ty * sy;
        const double y1 = (ty + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(img.height, static_cast<int>(std::ceil(y1)));
        for (int tx = 0; tx < target_w; ++tx) {
            const double x0 = tx * sx;
            const double x1 = (tx + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(img.width, static_cast<int>(std::ceil(x1)));
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                double area = 0.0;
                for (int y = iy0; y < iy1; ++y) {
                    const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                    for (int x = ix0; x < ix1; ++x) {
                        const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                        acc += img.at(x, y, c) * wx * wy;
                        area += wx * wy;
                    }
                }
                out.at(tx, ty, c) = acc / area;
            }
        }
    }
    return out;
}

namespace detail {

// equivalent of the 5-tap averaging filter followed by the [-1 0...0 1]
// stencil: difference of the means of the five pixels right and left
inline constexpr int kGradientHalfSpan = 5;

inline double wrap_hue_delta(double d) {
    // hue is angular in [0,1); gradients across the wrap are folded back
    double w = std::fmod(d + 0.5, 1.0);
    if (w < 0.0) w += 1.0;
    return w - 0.5;
}

}  // namespace detail

/// Signed 11-tap gradient of one channel along one image row: the mean of
/// the five pixels to the right minus the mean of the five to the left.
/// Positions without full kernel support are 0. `circular` folds the
/// difference for angular channels (hue).
inline std::vector<double> scanline_gradient(const Image& img, int row, int channel = 0,
                                             bool circular = false) {
    if (row < 0 || row >= img.height) throw std::invalid_argument("scanline_gradient: row out of range");
    if (channel < 0 || channel >= img.channels)
        throw std::invalid_argument("scanline_gradient: bad channel");
    const int span = detail::kGradientHalfSpan;
    if (img.width < 2 * span + 1)
        throw std::invalid_argument("scanline_gradient: row narrower than the 11-tap kernel");
    std::vector<double> grad(static_cast<std::size_t>(img.width), 0.0);
    for (int x = span; x < img.width - span; ++x) {
        double right = 0.0;
        double left = 0.0;
        for (int k = 1; k <= span; ++k) {
            right += img.at(x + k, row, channel);
            left += img.at(x - k, row, channel);
        }
        double d = (right - left) / span;
        if (circular) d = detail::wrap_hue_delta(d);
        grad[static_cast<std::size_t>(x)] = d;
    }
    return grad;
}

/// Rows the detector actually scans, in increasing order.
inline std::vector<int> scan_rows(const DetectionConfig& cfg) {
    if (cfg.scanline_rows) {
        auto rows = *cfg.scanline_rows;
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return rows;
    }
    // default: every stride-th row across the ROI's vertical extent
    double ymin = cfg.downscale_height;
    double ymax = 0.0;
    for (const auto& [px, py] : cfg.effective_roi()) {
        ymin = std::min(ymin, py);
        ymax = std::max(ymax, py);
    }
    std::vector<int> rows;
    const int lo = std::max(0, static_cast<int>(std::ceil(ymin)));
    const int hi = std::min(cfg.downscale_height - 1, static_cast<int>(std::floor(ymax)));
    const int stride = std::max(1, cfg.scanline_stride);
    for (int y = lo; y <= hi; y += stride) rows.push_back(y);
    return rows;
}

/// Even-odd crossing point-in-polygon test.
inline bool point_in_polygon(double x, double y, const std::vector<std::pair<double, double>>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        const bool crosses = (yi > y) != (yj > y);
        if (crosses && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

/// Signed per-channel gradients reduced to one signed value per pixel for
/// the scanned rows; unscanned rows stay zero.
inline Image scanline_gradient_image(const Image& hsv, const DetectionConfig& cfg) {
    Image grad(hsv.width, hsv.height, 1, 0.0);
    const auto rows = scan_rows(cfg);
    for (int row : rows) {
        if (row < 0 || row >= hsv.height) continue;
        std::vector<std::vector<double>> per_channel;
        if (cfg.reducer == ChannelReducer::kValueOnly) {
            per_channel.push_back(scanline_gradient(hsv, row, hsv.channels == 3 ? 2 : 0, false));
        } else {
            for (int c = 0; c < hsv.channels; ++c)
                per_channel.push_back(scanline_gradient(hsv, row, c, hsv.channels == 3 && c == 0));
        }
        for (int x = 0; x < hsv.width; ++x) {
            double best = 0.0;
            if (cfg.reducer == ChannelReducer::kSumAbs) {
                double mag = 0.0;
                for (const auto& g : per_channel) mag += std::abs(g[static_cast<std::size_t>(x)]);
                // keep the sign of the dominant channel
                for (const auto& g : per_channel)
                    if (std::abs(g[static_cast<std::size_t>(x)]) > std::abs(best))
                        best = g[static_cast<std::size_t>(x)];
                best = best >= 0.0 ? mag : -mag;
            } else {
                for (const auto& g : per_channel)
                    if (std::abs(g[static_cast<std::size_t>(x)]) > std::abs(best))
                        best = g[static_cast<std::size_t>(x)];
            }
            grad.at(x, row) = best;
        }
    }
    return grad;
}

/// 0/1 edge map: gradient magnitude above threshold and inside the ROI.
inline Image edge_binarize(const Image& gradients, const DetectionConfig& cfg) {
    Image out(gradients.width, gradients.height, 1, 0.0);
    const auto roi = cfg.effective_roi();
    for (int y = 0; y < gradients.height; ++y)
        for (int x = 0; x < gradients.width; ++x)
            if (std::abs(gradients.at(x, y)) > cfg.gradient_threshold &&
                point_in_polygon(x, y, roi))
                out.at(x, y) = 1.0;
    return out;
}

/// Collapses each rising-band / falling-band pair on a scan row to the
/// midpoint pixel. A painted stripe produces a positive gradient band on
/// its left flank and a negative one on its right; voting both bands into
/// the Hough accumulator localizes the stripe borders instead of the lane
/// line itself, so detect() votes these centers instead.
inline Image pair_marking_centers(const Image& gradients, const DetectionConfig& cfg) {
    Image out(gradients.width, gradients.height, 1, 0.0);
    const auto roi = cfg.effective_roi();
    const double thr = cfg.gradient_threshold;
    for (int y = 0; y < gradients.height; ++y) {
        int x = 0;
        while (x < gradients.width) {
            if (gradients.at(x, y) > thr) {
                // rising band
                int rise_begin = x;
                while (x < gradients.width && gradients.at(x, y) > thr) ++x;
                const double rise_center = (rise_begin + x - 1) / 2.0;
                // scan ahead for the paired falling band
                int probe = x;
                const int limit = std::min(gradients.width, x + cfg.max_marking_width);
                while (probe < limit && !(gradients.at(probe, y) < -thr)) {
                    if (gradients.at(probe, y) > thr) break;  // next rising band, no pair
                    ++probe;
                }
                if (probe < limit && gradients.at(probe, y) < -thr) {
                    int fall_begin = probe;
                    while (probe < gradients.width && gradients.at(probe, y) < -thr) ++probe;
                    const double fall_center = (fall_begin + probe - 1) / 2.0;
                    const int cx = static_cast<int>(std::lround((rise_center + fall_center) / 2.0));
                    if (cx >= 0 && cx < gradients.width && point_in_polygon(cx, y, roi))
                        out.at(cx, y) = 1.0;
                    x = probe;
                }
            } else {
                ++x;
            }
        }
    }
    return out;
}

namespace detail {

struct HoughGrid {
    int n_theta = 0;
    int n_rho = 0;
    double theta_res = 1.0;
    double rho_res = 1.0;

    double theta_of(int j) const { return (j + 0.5) * theta_res; }
    double rho_of(int i) const { return i * rho_res; }
};

inline HoughGrid make_grid(const Image& binary, const DetectionConfig& cfg) {
    HoughGrid g;
    g.theta_res = cfg.hough_theta_resolution;
    g.rho_res = cfg.hough_rho_resolution;
    g.n_theta = std::max(1, static_cast<int>(std::lround(180.0 / g.theta_res)));
    const double diag = std::hypot(binary.width, binary.height);
    g.n_rho = static_cast<int>(std::floor(diag / g.rho_res)) + 1;
    return g;
}

}  // namespace detail

/// Raw accumulator for a binary image: cell (i, j) counts edge pixels whose
/// (rho, theta) rounds to (i * rho_res, (j + 0.5) * theta_res). Bin centers
/// are offset half a cell in theta so no bin sits on the degenerate 0/180
/// boundary.
inline std::vector<int> hough_accumulate(const Image& binary, const DetectionConfig& cfg,
                                         detail::HoughGrid& grid) {
    grid = detail::make_grid(binary, cfg);
    std::vector<double> sin_t(static_cast<std::size_t>(grid.n_theta));
    std::vector<double> cos_t(static_cast<std::size_t>(grid.n_theta));
    for (int j = 0; j < grid.n_theta; ++j) {
        const double rad = deg_to_rad(grid.theta_of(j));
        sin_t[static_cast<std::size_t>(j)] = std::sin(rad);
        cos_t[static_cast<std::size_t>(j)] = std::cos(rad);
    }
    std::vector<int> acc(static_cast<std::size_t>(grid.n_theta) * grid.n_rho, 0);
    for (int y = 0; y < binary.height; ++y) {
        for (int x = 0; x < binary.width; ++x) {
            if (binary.at(x, y) == 0.0) continue;
            for (int j = 0; j < grid.n_theta; ++j) {
                const double rho =
                    x * sin_t[static_cast<std::size_t>(j)] - y * cos_t[static_cast<std::size_t>(j)];
                const long i = std::lround(rho / grid.rho_res);
                if (i < 0 || i >= grid.n_rho) continue;
                ++acc[static_cast<std::size_t>(i) * grid.n_theta + j];
            }
        }
    }
    return acc;
}

/// Classic Hough line extraction:
///  - vote gate: count strictly greater than accumulator_threshold,
///  - rho/theta limits from the config,
///  - 3x3 non-maximum suppression in accumulator space (plateau ties keep
///    the smallest (rho, theta) cell),
///  - sorted by score descending, ties by smaller rho then smaller theta.
inline std::vector<ScoredLine> hough_lines(const Image& binary, const DetectionConfig& cfg) {
    detail::HoughGrid grid;
    const std::vector<int> acc = hough_accumulate(binary, cfg, grid);
    const auto count = [&](int i, int j) -> int {
        if (i < 0 || i >= grid.n_rho || j < 0 || j >= grid.n_theta) return -1;
        return acc[static_cast<std::size_t>(i) * grid.n_theta + j];
    };
    std::vector<ScoredLine> out;
    for (int i = 0; i < grid.n_rho; ++i) {
        const double rho = grid.rho_of(i);
        if (rho < cfg.rho_min || rho > cfg.rho_max) continue;
        for (int j = 0; j < grid.n_theta; ++j) {
            const double theta = grid.theta_of(j);
            if (theta < cfg.theta_min || theta > cfg.theta_max) continue;
            const int votes = count(i, j);
            if (votes <= cfg.accumulator_threshold) continue;
            bool is_peak = true;
            for (int di = -1; di <= 1 && is_peak; ++di) {
                for (int dj = -1; dj <= 1 && is_peak; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int other = count(i + di, j + dj);
                    if (other > votes) is_peak = false;
                    // plateau tie: the lexicographically smallest cell wins
                    if (other == votes && (di < 0 || (di == 0 && dj < 0))) is_peak = false;
                }
            }
            if (is_peak) out.push_back(ScoredLine{LineParam{rho, theta}, votes});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredLine& a, const ScoredLine& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.line.rho != b.line.rho) return a.line.rho < b.line.rho;
        return a.line.theta < b.line.theta;
    });
    return out;
}

/// Total-least-squares refit of one peak to the pixels within its residual
/// band; falls back to the cell values when the support is degenerate.
inline LineParam refine_peak(const Image& votes, const LineParam& cell, double band) {
    double sx = 0.0, sy = 0.0;
    double n = 0.0;
    for (int y = 0; y < votes.height; ++y)
        for (int x = 0; x < votes.width; ++x) {
            if (votes.at(x, y) == 0.0) continue;
            if (std::abs(line_residual(x, y, cell)) > band) continue;
            sx += x;
            sy += y;
            n += 1.0;
        }
    if (n < 2.0) return cell;
    const double cx = sx / n;
    const double cy = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int y = 0; y < votes.height; ++y)
        for (int x = 0; x < votes.width; ++x) {
            if (votes.at(x, y) == 0.0) continue;
            if (std::abs(line_residual(x, y, cell)) > band) continue;
            sxx += (x - cx) * (x - cx);
            sxy += (x - cx) * (y - cy);
            syy += (y - cy) * (y - cy);
        }
    if (sxx + syy <= 0.0) return cell;
    // principal direction of the scatter
    double theta = rad_to_deg(0.5 * std::atan2(2.0 * sxy, sxx - syy));
    if (theta < 0.0) theta += 180.0;
    const double t = deg_to_rad(theta);
    const double rho = cx * std::sin(t) - cy * std::cos(t);
    const LineParam refined = LineParam::normalized(rho, theta);
    return refined.valid() ? refined : cell;
}

namespace detail {

inline std::vector<ScoredLine> extract_lines(const Image& votes, const DetectionConfig& cfg) {
    std::vector<ScoredLine> lines = hough_lines(votes, cfg);
    if (cfg.refine_peaks) {
        for (auto& cand : lines) cand.line = refine_peak(votes, cand.line, cfg.refine_band);
        std::stable_sort(lines.begin(), lines.end(), [](const ScoredLine& a, const ScoredLine& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.line.rho != b.line.rho) return a.line.rho < b.line.rho;
            return a.line.theta < b.line.theta;
        });
    }
    // keep only the best-scoring representative of each physical line
    std::vector<ScoredLine> kept;
    for (const auto& cand : lines) {
        bool duplicate = false;
        for (const auto& k : kept)
            if (std::abs(cand.line.rho - k.line.rho) <= cfg.dedup_rho &&
                std::abs(cand.line.theta - k.line.theta) <= cfg.dedup_theta) {
                duplicate = true;
                break;
            }
        if (!duplicate) kept.push_back(cand);
    }
    return kept;
}

}  // namespace detail

/// Full single-frame pipeline: HSV, downscale, scan-line gradients, edge
/// thresholding inside the ROI, stripe centering, Hough, peak refinement.
/// Returns the whole candidate list sorted by score; the Kalman tracker
/// consumes the head, the multi-mode observation model consumes all of it.
inline std::vector<ScoredLine> detect(const Image& frame, const DetectionConfig& cfg) {
    const Image hsv = rgb_to_hsv(frame);
    const Image small = downscale(hsv, cfg.downscale_width, cfg.downscale_height);
    const Image grad = scanline_gradient_image(small, cfg);
    const Image votes = cfg.center_markings ? pair_marking_centers(grad, cfg)
                                            : edge_binarize(grad, cfg);
    return detail::extract_lines(votes, cfg);
}

/// detect() variant exposing the intermediate edge map for debug dumps.
inline std::vector<ScoredLine> detect_with_edges(const Image& frame, const DetectionConfig& cfg,
                                                 Image& edges_out) {
    const Image hsv = rgb_to_hsv(frame);
    const Image small = downscale(hsv, cfg.downscale_width, cfg.downscale_height);
    const Image grad = scanline_gradient_image(small, cfg);
    edges_out = edge_binarize(grad, cfg);
    const Image votes = cfg.center_markings ? pair_marking_centers(grad, cfg) : edges_out;
    return detail::extract_lines(votes, cfg);
}

}  // namespace lanetrack
