#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanetrack {

/// Planar-free, row-major real image. Channel values live in [0, 1];
/// channels is 1 (gray / binary) or 3 (RGB or HSV depending on stage).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;  // size = width * height * channels

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("Image: bad dimensions");
    }

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

namespace detail {

inline int pnm_next_int(std::istream& in) {
    // skips whitespace and '#' comment lines, as the format allows
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw std::runtime_error("pnm: truncated header");
    int value = 0;
    bool any = false;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        any = true;
        ch = in.get();
    }
    if (!any) throw std::runtime_error("pnm: malformed header");
    return value;
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) file with maxval <= 255 into [0,1].
inline Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    int channels;
    if (magic[0] == 'P' && magic[1] == '5')
        channels = 1;
    else if (magic[0] == 'P' && magic[1] == '6')
        channels = 3;
    else
        throw std::runtime_error(path + ": not a binary PGM/PPM file");
    const int w = detail::pnm_next_int(in);
    const int h = detail::pnm_next_int(in);
    const int maxval = detail::pnm_next_int(in);
    if (maxval <= 0 || maxval > 255) throw std::runtime_error(path + ": unsupported maxval");
    // header ends with exactly one whitespace byte, already consumed by the
    // digit scanner above
    Image img(w, h, channels);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::runtime_error(path + ": truncated pixel data");
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * scale;
    return img;
}

/// Writes binary PGM (1 channel) or PPM (3 channels), maxval 255.
inline void write_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.data[i]));
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lanetrack
