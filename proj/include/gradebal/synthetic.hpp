#pragma once

// Synthetic APTOS-shaped fixtures: flat-coloured images whose colour is drawn
// from a per-class Gaussian blob, plus an `id_code,diagnosis` manifest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "image.hpp"
#include "png_io.hpp"
#include "rng.hpp"

namespace gradebal::synthetic {

inline constexpr std::array<std::array<double, 3>, 5> kBlobCenters{{
    {215.0, 35.0, 35.0},
    {35.0, 215.0, 35.0},
    {35.0, 35.0, 215.0},
    {215.0, 215.0, 215.0},
    {40.0, 40.0, 40.0},
}};

inline double normal(CounterRng& rng) {
    const double u1 = 1.0 - rng.uniform(); // (0, 1]
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Rgb blob_color(CounterRng& rng, int label, double sd) {
    Rgb c;
    for (int ch = 0; ch < 3; ++ch)
        c[ch] = static_cast<std::uint8_t>(std::clamp(std::round(kBlobCenters[label][ch] + sd * normal(rng)), 0.0, 255.0));
    return c;
}

struct FixtureSpec {
    std::array<int, 5> per_class{10, 10, 10, 10, 10};
    int side = 32;
    double sd = 10.0;
    std::uint64_t seed = 7;
};

/// Writes `<dir>/images/<id>.png` and `<dir>/manifest.csv`. Ids are
/// "img_<class>_<index>" in class order.
inline void write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec) {
    std::filesystem::create_directories(dir / "images");
    std::ofstream manifest(dir / "manifest.csv", std::ios::binary | std::ios::trunc);
    manifest << "id_code,diagnosis\n";
    CounterRng rng(spec.seed);
    for (int label = 0; label < 5; ++label)
        for (int i = 0; i < spec.per_class[label]; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "img_%d_%04d", label, i);
            write_png(dir / "images" / (std::string(id) + ".png"), ImageRGB(spec.side, spec.side, blob_color(rng, label, spec.sd)));
            manifest << id << ',' << label << '\n';
        }
}

} // namespace gradebal::synthetic
