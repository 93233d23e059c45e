#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "error.hpp"

namespace gradebal {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBlack{0, 0, 0};

// Interleaved 8-bit RGB raster, row-major. data.size() == width * height * 3.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    ImageRGB() = default;
    ImageRGB(int w, int h, Rgb fill = kBlack) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
        if (w < 1 || h < 1)
            throw Error(ErrorKind::InvalidConfig, "image dimensions must be >= 1");
        for (std::size_t i = 0; i < data.size(); i += 3) {
            data[i] = fill[0];
            data[i + 1] = fill[1];
            data[i + 2] = fill[2];
        }
    }

    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * 3;
    }
    std::uint8_t* pixel(int x, int y) { return data.data() + index(x, y); }
    const std::uint8_t* pixel(int x, int y) const { return data.data() + index(x, y); }

    Rgb at(int x, int y) const {
        const auto* p = pixel(x, y);
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        auto* p = pixel(x, y);
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    bool operator==(const ImageRGB&) const = default;
};

} // namespace gradebal
