#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/observations.hpp"

namespace kpose {

// Per-keypoint response grid, row-major, values >= 0.
struct Heatmap {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> values;
    std::string keypoint_name;

    float at(std::uint32_t x, std::uint32_t y) const { return values[static_cast<size_t>(y) * width + x]; }
    float &at(std::uint32_t x, std::uint32_t y) { return values[static_cast<size_t>(y) * width + x]; }

    void validate() const {
        detail::require(static_cast<std::uint64_t>(width) * height == values.size(),
                        "heatmap: value count differs from width * height");
        for (float v : values)
            if (!std::isfinite(v) || v < 0.0f)
                throw InvalidArgument("heatmap: values must be finite and nonnegative");
    }
};

struct ImageSize {
    double width = 0.0;
    double height = 0.0;
};

struct PeakOptions {
    // Map grid coordinates to an image of this size by uniform scaling.
    std::optional<ImageSize> scale_to;
    // Quadratic sub-pixel refinement around the argmax.
    bool subpixel = false;
};

namespace detail {

inline double parabolic_offset(double left, double center, double right) {
    const double denom = left - 2.0 * center + right;
    if (!(denom < 0.0))
        return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

} // namespace detail

// Argmax location of each map as the keypoint and the peak value as its
// confidence. Ties resolve to the first maximum in row-major order.
inline KeypointObservations extract_peaks(const std::vector<Heatmap> &maps, const PeakOptions &opts = {}) {
    if (maps.empty())
        throw InvalidArgument("extract_peaks: empty heatmap list");
    const auto w = maps.front().width, h = maps.front().height;
    if (w == 0 || h == 0)
        throw InvalidArgument("extract_peaks: zero-sized heatmap");

    KeypointObservations obs;
    const auto p = static_cast<Eigen::Index>(maps.size());
    obs.points.resize(2, p);
    obs.confidence.resize(p);
    obs.names.reserve(maps.size());
    for (Eigen::Index k = 0; k < p; ++k) {
        const Heatmap &map = maps[static_cast<size_t>(k)];
        detail::require_dims(map.width == w && map.height == h, "extract_peaks: heatmaps differ in size");
        map.validate();
        size_t best = 0;
        for (size_t i = 1; i < map.values.size(); ++i)
            if (map.values[i] > map.values[best])
                best = i;
        const auto bx = static_cast<std::uint32_t>(best % w);
        const auto by = static_cast<std::uint32_t>(best / w);
        double x = bx, y = by;
        if (opts.subpixel && map.values[best] > 0.0f) {
            if (bx > 0 && bx + 1 < w)
                x += detail::parabolic_offset(map.at(bx - 1, by), map.at(bx, by), map.at(bx + 1, by));
            if (by > 0 && by + 1 < h)
                y += detail::parabolic_offset(map.at(bx, by - 1), map.at(bx, by), map.at(bx, by + 1));
        }
        if (opts.scale_to) {
            x *= opts.scale_to->width / static_cast<double>(w);
            y *= opts.scale_to->height / static_cast<double>(h);
        }
        obs.points.col(k) << x, y;
        obs.confidence(k) = static_cast<double>(map.values[best]);
        obs.names.push_back(map.keypoint_name);
    }
    return obs;
}

// exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2)) sampled on the integer grid.
inline Heatmap synthesize_heatmap(std::uint32_t width, std::uint32_t height, const Eigen::Vector2d &center,
                                  double sigma = 1.0, double amplitude = 1.0, std::string name = {}) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidArgument("synthesize_heatmap: sigma must be positive");
    detail::require(amplitude >= 0.0 && std::isfinite(amplitude), "synthesize_heatmap: amplitude must be >= 0");
    Heatmap map;
    map.width = width;
    map.height = height;
    map.keypoint_name = std::move(name);
    map.values.resize(static_cast<size_t>(width) * height);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::uint32_t y = 0; y < height; ++y)
        for (std::uint32_t x = 0; x < width; ++x) {
            const double dx = x - center.x(), dy = y - center.y();
            map.at(x, y) = static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) * inv));
        }
    return map;
}

// Binary heatmap container:
//   "KPHM" | u16 version | u16 count | u32 width | u32 height
//   count * height * width little-endian binary32 values (map-major, row-major)
//   count * (u32 byte length | UTF-8 name)
inline constexpr std::uint16_t kHeatmapFormatVersion = 1;

namespace detail {

inline void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string &out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

class ByteReader {
  public:
    explicit ByteReader(const std::string &data) : data_(data) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
        pos_ += 4;
        return v;
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(data_[pos_]) |
                                                  (static_cast<unsigned char>(data_[pos_ + 1]) << 8));
        pos_ += 2;
        return v;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    size_t remaining() const { return data_.size() - pos_; }

  private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n)
            throw FormatError("heatmap file: truncated payload");
    }
    const std::string &data_;
    size_t pos_ = 0;
};

} // namespace detail

inline std::string encode_heatmaps(const std::vector<Heatmap> &maps) {
    if (maps.size() > std::numeric_limits<std::uint16_t>::max())
        throw InvalidArgument("write_heatmaps: too many maps for the format");
    const std::uint32_t w = maps.empty() ? 0 : maps.front().width;
    const std::uint32_t h = maps.empty() ? 0 : maps.front().height;
    std::string out = "KPHM";
    detail::put_u16(out, kHeatmapFormatVersion);
    detail::put_u16(out, static_cast<std::uint16_t>(maps.size()));
    detail::put_u32(out, w);
    detail::put_u32(out, h);
    for (const auto &map : maps) {
        detail::require_dims(map.width == w && map.height == h, "write_heatmaps: heatmaps differ in size");
        detail::require_dims(map.values.size() == static_cast<size_t>(w) * h,
                             "write_heatmaps: value count differs from width * height");
        for (float v : map.values)
            detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    for (const auto &map : maps) {
        detail::put_u32(out, static_cast<std::uint32_t>(map.keypoint_name.size()));
        out += map.keypoint_name;
    }
    return out;
}

inline std::vector<Heatmap> decode_heatmaps(const std::string &data) {
    detail::ByteReader in(data);
    if (in.remaining() < 16)
        throw FormatError("heatmap file: malformed header (shorter than 16 bytes)");
    if (in.bytes(4) != "KPHM")
        throw FormatError("heatmap file: bad magic bytes");
    const std::uint16_t version = in.u16();
    if (version != kHeatmapFormatVersion)
        throw FormatError("heatmap file: unsupported version " + std::to_string(version));
    const std::uint16_t count = in.u16();
    const std::uint32_t w = in.u32();
    const std::uint32_t h = in.u32();
    if (count == 0)
        return {};
    if (w == 0 || h == 0)
        throw FormatError("heatmap file: zero-sized maps");
    const std::uint64_t cells = static_cast<std::uint64_t>(w) * h;
    const std::uint64_t payload = cells * count * 4;
    if (cells > std::numeric_limits<std::uint32_t>::max() || payload > in.remaining())
        throw FormatError("heatmap file: declared dimensions exceed the payload");

    std::vector<Heatmap> maps(count);
    for (auto &map : maps) {
        map.width = w;
        map.height = h;
        map.values.resize(static_cast<size_t>(cells));
        for (auto &v : map.values)
            v = std::bit_cast<float>(in.u32());
    }
    for (auto &map : maps) {
        const std::uint32_t len = in.u32();
        map.keypoint_name = in.bytes(len);
    }
    if (in.remaining() != 0)
        throw FormatError("heatmap file: trailing bytes after name table");
    return maps;
}

inline void write_heatmaps(const std::vector<Heatmap> &maps, const std::string &path) {
    const std::string bytes = encode_heatmaps(maps);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw Error("failed writing " + path);
}

inline std::vector<Heatmap> read_heatmaps(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot open " + path);
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_heatmaps(bytes);
}

} // namespace kpose
