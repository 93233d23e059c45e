#pragma once

// Deterministic image-transform primitives. No randomness lives here.
//
// Coordinate convention: pixel i covers [i, i+1) and has its center at i+0.5.
// AffineMatrix and Homography map *output* continuous coordinates to *source*
// continuous coordinates; warps evaluate them at output pixel centers and
// sample the source at the resulting continuous point minus 0.5 (i.e. in pixel
// index space). All intermediate arithmetic is double; channel values are
// rounded half away from zero and clamped to [0, 255].

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace gradebal::imageops {

inline std::uint8_t to_byte(double v) {
    const double r = std::round(v);
    if (!(r > 0.0))
        return 0;
    if (r >= 255.0)
        return 255;
    return static_cast<std::uint8_t>(r);
}

/// 2x3 output-to-source map: (x, y) -> (m[0]x + m[1]y + m[2], m[3]x + m[4]y + m[5]).
struct AffineMatrix {
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    static AffineMatrix identity() { return {}; }

    std::pair<double, double> apply(double x, double y) const {
        return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
    }

    // Composition as 3x3 matrices: (a * b)(p) == a(b(p)).
    friend AffineMatrix operator*(const AffineMatrix& a, const AffineMatrix& b) {
        const auto& x = a.m;
        const auto& y = b.m;
        return {{x[0] * y[0] + x[1] * y[3], x[0] * y[1] + x[1] * y[4], x[0] * y[2] + x[1] * y[5] + x[2],
                 x[3] * y[0] + x[4] * y[3], x[3] * y[1] + x[4] * y[4], x[3] * y[2] + x[4] * y[5] + x[5]}};
    }
};

/// 3x3 projective output-to-source map, row-major.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }

    static Homography from_affine(const AffineMatrix& a) {
        return {{a.m[0], a.m[1], a.m[2], a.m[3], a.m[4], a.m[5], 0, 0, 1}};
    }

    double determinant() const {
        return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
               h[2] * (h[3] * h[7] - h[4] * h[6]);
    }

    // Scale so the bottom-right entry is exactly 1.
    Homography normalized() const {
        if (h[8] == 0.0 || h[8] == 1.0)
            return *this;
        Homography out;
        for (int i = 0; i < 9; ++i)
            out.h[i] = h[i] / h[8];
        out.h[8] = 1.0;
        return out;
    }
};

inline Rgb bilinear_sample(const ImageRGB& img, double x, double y, Rgb fill = kBlack) {
    const int w = img.width;
    const int h = img.height;
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    if (!(fx0 >= -1.0 && fx0 <= w - 1.0 && fy0 >= -1.0 && fy0 <= h - 1.0))
        return fill;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double ax = x - fx0;
    const double ay = y - fy0;

    auto fetch = [&](int px, int py) -> const std::uint8_t* {
        if (px < 0 || py < 0 || px >= w || py >= h)
            return fill.data();
        return img.pixel(px, py);
    };
    const std::uint8_t* p00 = fetch(x0, y0);
    const std::uint8_t* p10 = fetch(x0 + 1, y0);
    const std::uint8_t* p01 = fetch(x0, y0 + 1);
    const std::uint8_t* p11 = fetch(x0 + 1, y0 + 1);
    if (p00 == fill.data() && p10 == fill.data() && p01 == fill.data() && p11 == fill.data())
        return fill;

    Rgb out;
    for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - ax) * p00[c] + ax * p10[c];
        const double bottom = (1.0 - ax) * p01[c] + ax * p11[c];
        out[c] = to_byte((1.0 - ay) * top + ay * bottom);
    }
    return out;
}

inline ImageRGB warp_affine(const ImageRGB& img, const AffineMatrix& a, int out_w, int out_h, Rgb fill = kBlack) {
    ImageRGB out(out_w, out_h);
    const auto& m = a.m;
    for (int v = 0; v < out_h; ++v) {
        const double cy = v + 0.5;
        for (int u = 0; u < out_w; ++u) {
            const double cx = u + 0.5;
            const double sx = m[0] * cx + m[1] * cy + m[2];
            const double sy = m[3] * cx + m[4] * cy + m[5];
            out.set(u, v, bilinear_sample(img, sx - 0.5, sy - 0.5, fill));
        }
    }
    return out;
}

inline ImageRGB warp_perspective(const ImageRGB& img, const Homography& hom, Rgb fill = kBlack) {
    if (!(std::abs(hom.determinant()) > 1e-12))
        throw Error(ErrorKind::SingularHomography, "homography determinant magnitude <= 1e-12");
    const auto& h = hom.normalized().h;
    ImageRGB out(img.width, img.height);
    for (int v = 0; v < img.height; ++v) {
        const double cy = v + 0.5;
        for (int u = 0; u < img.width; ++u) {
            const double cx = u + 0.5;
            const double den = h[6] * cx + h[7] * cy + h[8];
            if (!(den > 1e-12)) {
                out.set(u, v, fill);
                continue;
            }
            const double sx = (h[0] * cx + h[1] * cy + h[2]) / den;
            const double sy = (h[3] * cx + h[4] * cy + h[5]) / den;
            out.set(u, v, bilinear_sample(img, sx - 0.5, sy - 0.5, fill));
        }
    }
    return out;
}

/// Discrete Gaussian taps for offsets -r..r (r = kernel_size / 2), normalized to sum to 1.
inline std::vector<double> gaussian_kernel(double sigma, int kernel_size) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw Error(ErrorKind::InvalidKernel, "kernel size must be odd and >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::InvalidSigma, "sigma must be > 0");
    const int r = kernel_size / 2;
    std::vector<double> k(kernel_size);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + r];
    }
    for (auto& w : k)
        w /= sum;
    return k;
}

// Separable, clamp-to-edge.
inline ImageRGB gaussian_blur(const ImageRGB& img, double sigma, int kernel_size) {
    const auto k = gaussian_kernel(sigma, kernel_size);
    if (kernel_size == 1)
        return img;
    const int r = kernel_size / 2;
    const int w = img.width;
    const int h = img.height;
    std::vector<double> tmp(img.data.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) {
                    const int sx = std::clamp(x + i, 0, w - 1);
                    acc += k[i + r] * img.pixel(sx, y)[c];
                }
                tmp[img.index(x, y) + c] = acc;
            }
    ImageRGB out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) {
                    const int sy = std::clamp(y + i, 0, h - 1);
                    acc += k[i + r] * tmp[img.index(x, sy) + c];
                }
                out.data[img.index(x, y) + c] = to_byte(acc);
            }
    return out;
}

enum class ColorOp { Brightness, Contrast, Saturation, Hue };

inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

struct Hsv {
    double h, s, v; // h in [0, 1)
};

inline Hsv rgb_to_hsv(double r, double g, double b) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
    if (delta > 0.0) {
        double h;
        if (mx == r)
            h = (g - b) / delta;
        else if (mx == g)
            h = (b - r) / delta + 2.0;
        else
            h = (r - g) / delta + 4.0;
        h /= 6.0;
        if (h < 0.0)
            h += 1.0;
        out.h = h;
    }
    return out;
}

inline std::array<double, 3> hsv_to_rgb(Hsv c) {
    const double h6 = c.h * 6.0;
    const double sector = std::floor(h6);
    const double f = h6 - sector;
    const double p = c.v * (1.0 - c.s);
    const double q = c.v * (1.0 - c.s * f);
    const double t = c.v * (1.0 - c.s * (1.0 - f));
    switch (static_cast<int>(sector) % 6) {
    case 0: return {c.v, t, p};
    case 1: return {q, c.v, p};
    case 2: return {p, c.v, t};
    case 3: return {p, q, c.v};
    case 4: return {t, p, c.v};
    default: return {c.v, p, q};
    }
}

} // namespace detail

// brightness/contrast/saturation: factor >= 0, 1 is identity.
// hue: factor in [-0.5, 0.5] turns of the hue circle, 0 is identity.
inline ImageRGB adjust_color(const ImageRGB& img, ColorOp op, double factor) {
    if (!std::isfinite(factor))
        throw Error(ErrorKind::InvalidFactor, "factor must be finite");
    if (op == ColorOp::Hue ? (factor < -0.5 || factor > 0.5) : factor < 0.0)
        throw Error(ErrorKind::InvalidFactor, "factor out of range");

    ImageRGB out(img.width, img.height);
    const std::size_t n = img.data.size();
    switch (op) {
    case ColorOp::Brightness:
        for (std::size_t i = 0; i < n; ++i)
            out.data[i] = to_byte(img.data[i] * factor);
        break;
    case ColorOp::Contrast: {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; i += 3)
            sum += luma(img.data[i], img.data[i + 1], img.data[i + 2]);
        const double mean = sum / static_cast<double>(n / 3);
        for (std::size_t i = 0; i < n; ++i)
            out.data[i] = to_byte(factor * img.data[i] + (1.0 - factor) * mean);
        break;
    }
    case ColorOp::Saturation:
        for (std::size_t i = 0; i < n; i += 3) {
            const double l = luma(img.data[i], img.data[i + 1], img.data[i + 2]);
            for (int c = 0; c < 3; ++c)
                out.data[i + c] = to_byte(factor * img.data[i + c] + (1.0 - factor) * l);
        }
        break;
    case ColorOp::Hue:
        for (std::size_t i = 0; i < n; i += 3) {
            auto hsv = detail::rgb_to_hsv(img.data[i] / 255.0, img.data[i + 1] / 255.0, img.data[i + 2] / 255.0);
            hsv.h = std::fmod(hsv.h + factor, 1.0);
            if (hsv.h < 0.0)
                hsv.h += 1.0;
            const auto rgb = detail::hsv_to_rgb(hsv);
            for (int c = 0; c < 3; ++c)
                out.data[i + c] = to_byte(rgb[c] * 255.0);
        }
        break;
    }
    return out;
}

/// Fixed 3x3 smoothing: center weight 5/13, the eight neighbours 1/13 each.
/// Border pixels are copied unchanged.
inline ImageRGB smooth3x3(const ImageRGB& img) {
    ImageRGB out = img;
    for (int y = 1; y + 1 < img.height; ++y)
        for (int x = 1; x + 1 < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                int acc = 4 * img.pixel(x, y)[c];
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        acc += img.pixel(x + dx, y + dy)[c];
                out.pixel(x, y)[c] = to_byte(acc / 13.0);
            }
    return out;
}

// factor 0 -> smooth3x3, 1 -> original, > 1 sharpens.
inline ImageRGB adjust_sharpness(const ImageRGB& img, double factor) {
    if (!(factor >= 0.0) || !std::isfinite(factor))
        throw Error(ErrorKind::InvalidFactor, "sharpness factor must be >= 0");
    const ImageRGB smooth = smooth3x3(img);
    ImageRGB out = img;
    for (int y = 1; y + 1 < img.height; ++y)
        for (int x = 1; x + 1 < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.pixel(x, y)[c] =
                    to_byte(factor * img.pixel(x, y)[c] + (1.0 - factor) * smooth.pixel(x, y)[c]);
    return out;
}

// Half-pixel-center mapping, clamp-to-edge neighbours.
inline ImageRGB resize_bilinear(const ImageRGB& img, int out_w, int out_h) {
    ImageRGB out(out_w, out_h);
    const double sx_scale = static_cast<double>(img.width) / out_w;
    const double sy_scale = static_cast<double>(img.height) / out_h;
    for (int v = 0; v < out_h; ++v) {
        const double sy = std::clamp((v + 0.5) * sy_scale - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double ay = sy - y0;
        for (int u = 0; u < out_w; ++u) {
            const double sx = std::clamp((u + 0.5) * sx_scale - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double ax = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - ax) * img.pixel(x0, y0)[c] + ax * img.pixel(x1, y0)[c];
                const double bottom = (1.0 - ax) * img.pixel(x0, y1)[c] + ax * img.pixel(x1, y1)[c];
                out.pixel(u, v)[c] = to_byte((1.0 - ay) * top + ay * bottom);
            }
        }
    }
    return out;
}

enum class FlipAxis { Horizontal, Vertical };

inline ImageRGB flip(const ImageRGB& img, FlipAxis axis) {
    ImageRGB out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int sx = axis == FlipAxis::Horizontal ? img.width - 1 - x : x;
            const int sy = axis == FlipAxis::Vertical ? img.height - 1 - y : y;
            out.set(x, y, img.at(sx, sy));
        }
    return out;
}

inline ImageRGB crop(const ImageRGB& img, int left, int top, int crop_w, int crop_h) {
    if (crop_w < 1 || crop_h < 1 || left < 0 || top < 0 || left > img.width - crop_w ||
        top > img.height - crop_h)
        throw Error(ErrorKind::CropOutOfBounds, "crop rectangle exceeds image bounds");
    ImageRGB out(crop_w, crop_h);
    for (int y = 0; y < crop_h; ++y)
        std::copy_n(img.pixel(left, top + y), static_cast<std::size_t>(crop_w) * 3, out.pixel(0, y));
    return out;
}

inline ImageRGB crop_resize(const ImageRGB& img, int left, int top, int crop_w, int crop_h, int out_w,
                            int out_h) {
    return resize_bilinear(crop(img, left, top, crop_w, crop_h), out_w, out_h);
}

/// Output-to-source matrix for the forward map
///   p' = center + translate + scale * R(rotate) * ShearX * ShearY * (p - center)
/// where R rotates counter-clockwise as displayed (y axis pointing down) and
/// translate is in pixels.
inline AffineMatrix compose_affine(double rotate_deg, std::pair<double, double> translate, double scale,
                                   std::pair<double, double> shear_deg, std::pair<double, double> center) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw Error(ErrorKind::InvalidScale, "scale must be > 0");
    constexpr double deg = std::numbers::pi / 180.0;
    const double th = rotate_deg * deg;
    const double c = std::cos(th);
    const double s = std::sin(th);
    const double kx = std::tan(shear_deg.first * deg);
    const double ky = std::tan(shear_deg.second * deg);

    // R * [[1, kx], [0, 1]] * [[1, 0], [ky, 1]] = R * [[1 + kx*ky, kx], [ky, 1]]
    const double s00 = 1.0 + kx * ky, s01 = kx, s10 = ky, s11 = 1.0;
    const double a = scale * (c * s00 + s * s10);
    const double b = scale * (c * s01 + s * s11);
    const double cc = scale * (-s * s00 + c * s10);
    const double d = scale * (-s * s01 + c * s11);

    const double det = a * d - b * cc;
    if (!(std::abs(det) > 1e-12))
        throw Error(ErrorKind::InvalidScale, "degenerate affine transform");
    const double ia = d / det, ib = -b / det, ic = -cc / det, id = a / det;

    const double px = center.first + translate.first;
    const double py = center.second + translate.second;
    return {{ia, ib, center.first - (ia * px + ib * py), ic, id, center.second - (ic * px + id * py)}};
}

/// Solves for the homography H with H(src[i]) = dst[i] for four point pairs.
inline Homography homography_from_points(const std::array<std::pair<double, double>, 4>& src,
                                         const std::array<std::pair<double, double>, 4>& dst) {
    std::array<std::array<double, 9>, 8> a{};
    for (int i = 0; i < 4; ++i) {
        const auto [x, y] = src[i];
        const auto [u, v] = dst[i];
        a[2 * i] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
        a[2 * i + 1] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
    }
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (!(std::abs(a[pivot][col]) > 1e-12))
            throw Error(ErrorKind::SingularHomography, "degenerate point correspondence");
        std::swap(a[col], a[pivot]);
        for (int r = 0; r < 8; ++r) {
            if (r == col)
                continue;
            const double f = a[r][col] / a[col][col];
            for (int k = col; k < 9; ++k)
                a[r][k] -= f * a[col][k];
        }
    }
    Homography h;
    for (int i = 0; i < 8; ++i)
        h.h[i] = a[i][8] / a[i][i];
    h.h[8] = 1.0;
    return h;
}

} // namespace gradebal::imageops
