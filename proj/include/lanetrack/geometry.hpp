#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "lanetrack/matrix.hpp"

namespace lanetrack {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// A lane marking line in normal form. theta is the angle between the line
/// and the x-axis in degrees; rho is the distance in pixels from the image
/// origin (upper-left corner, y growing downward) to the line. Points on
/// the line satisfy x*sin(theta) - y*cos(theta) = rho.
///
/// Valid lines have rho >= 0 and theta in (0, 180): theta = 90 is vertical,
/// theta near 0 or 180 is nearly horizontal.
struct LineParam {
    double rho = 0.0;
    double theta = 90.0;

    bool valid() const {
        return std::isfinite(rho) && std::isfinite(theta) && rho >= 0.0 && theta > 0.0 &&
               theta < 180.0;
    }

    /// Canonicalize the (rho, theta) ~ (-rho, theta + 180) equivalence into
    /// theta in [0, 180).
    static LineParam normalized(double rho, double theta) {
        double t = std::fmod(theta, 360.0);
        if (t < 0.0) t += 360.0;
        double r = rho;
        if (t >= 180.0) {
            t -= 180.0;
            r = -r;
        }
        return LineParam{r, t};
    }
};

/// Signed residual of the line equation at a point; its absolute value is
/// the perpendicular point-to-line distance since (sin t, -cos t) is a unit
/// normal.
inline double line_residual(double x, double y, const LineParam& line) {
    const double t = deg_to_rad(line.theta);
    return x * std::sin(t) - y * std::cos(t) - line.rho;
}

inline double point_line_distance(double x, double y, const LineParam& line) {
    return std::abs(line_residual(x, y, line));
}

/// Line through two points with theta reduced to [0, 180). The points must
/// be distinct. Lines whose canonical rho comes out negative are not
/// representable in the valid (rho >= 0) family; callers can check valid().
inline LineParam line_through_points(double x0, double y0, double x1, double y1) {
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    if (dx == 0.0 && dy == 0.0) throw std::invalid_argument("line_through_points: identical points");
    double theta = rad_to_deg(std::atan2(dy, dx));
    // direction is defined modulo 180 degrees
    if (theta < 0.0) theta += 180.0;
    if (theta >= 180.0) theta -= 180.0;
    const double t = deg_to_rad(theta);
    const double rho = x0 * std::sin(t) - y0 * std::cos(t);
    return LineParam{rho, theta};
}

/// Hidden state of one lane marking: line parameters plus their rates of
/// change (pixels/s, degrees/s).
struct LaneState {
    double rho = 0.0;
    double v_rho = 0.0;
    double theta = 90.0;
    double v_theta = 0.0;

    Vec4 to_vec4() const { return vec4(rho, v_rho, theta, v_theta); }
    static LaneState from_vec4(const Vec4& v) { return LaneState{v[0], v[1], v[2], v[3]}; }

    /// Drop the velocities and normalize the angle range.
    LineParam line() const { return LineParam::normalized(rho, theta); }

    bool finite() const {
        return std::isfinite(rho) && std::isfinite(v_rho) && std::isfinite(theta) &&
               std::isfinite(v_theta);
    }
};

/// Frame geometry shared by the observation weighting and the simulator:
/// image extent, the fixed focus (vanishing) point all lane markings pass
/// near, and the vehicle reference point at the middle of the bottom edge.
struct ImageGeometry {
    int width = 640;
    int height = 368;
    double focus_x = 320.0;
    double focus_y = 150.0;

    double bottom_midpoint_x() const { return width / 2.0; }
    int bottom_row() const { return height - 1; }

    bool valid() const {
        return width > 0 && height > 0 && focus_x >= 0.0 && focus_x < width && focus_y >= 0.0 &&
               focus_y < height;
    }
};

/// x-coordinate where the line crosses the bottom image row, or nullopt for
/// lines parallel to it (theta == 0 exactly). Callers treat the parallel
/// case as an infinitely distant lane.
inline std::optional<double> line_bottom_intercept(const LineParam& line, const ImageGeometry& geom) {
    const double t = deg_to_rad(line.theta);
    const double s = std::sin(t);
    if (s == 0.0) return std::nullopt;
    const double y = static_cast<double>(geom.bottom_row());
    return (line.rho + y * std::cos(t)) / s;
}

}  // namespace lanetrack
