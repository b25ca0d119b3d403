#pragma once

// Synthetic image builders shared by the test suites. Every image is
// rendered from known stain concentrations through the absorbance model
// I = round(255 * 10^-(c_H*H + c_E*E)) so tests can compare detector and
// estimator output against the generating truth.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pathrag/image.hpp"
#include "pathrag/rng.hpp"

namespace fixtures {

using pathrag::RgbImage;

using Vec3 = std::array<double, 3>;

inline constexpr Vec3 kRuifrokH = {0.650, 0.704, 0.286};
inline constexpr Vec3 kRuifrokE = {0.072, 0.990, 0.105};
inline constexpr Vec3 kMacenkoH = {0.5626, 0.7201, 0.4062};
inline constexpr Vec3 kMacenkoE = {0.2159, 0.8012, 0.5581};

/// Forward synthesis of one pixel from stain concentrations.
inline std::array<uint8_t, 3> stain_pixel(double c_h, double c_e, const Vec3& h = kRuifrokH,
                                          const Vec3& e = kRuifrokE) {
    std::array<uint8_t, 3> rgb{};
    for (int k = 0; k < 3; ++k) {
        double od = c_h * h[k] + c_e * e[k];
        double intensity = std::round(255.0 * std::pow(10.0, -od));
        rgb[k] = static_cast<uint8_t>(std::min(255.0, std::max(0.0, intensity)));
    }
    return rgb;
}

inline RgbImage white_image(int w, int h) {
    RgbImage img(w, h);
    std::fill(img.data.begin(), img.data.end(), uint8_t{255});
    return img;
}

inline void fill_pixel(RgbImage& img, int x, int y, const std::array<uint8_t, 3>& rgb) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    uint8_t* p = img.pixel(x, y);
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
}

/// Stamp a filled disk of hematoxylin-stained tissue.
inline void add_disk(RgbImage& img, double cx, double cy, double radius, double c_h = 1.0,
                     double c_e = 0.0, const Vec3& h = kRuifrokH, const Vec3& e = kRuifrokE) {
    auto rgb = stain_pixel(c_h, c_e, h, e);
    int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= radius * radius) fill_pixel(img, x, y, rgb);
        }
    }
}

/// Stamp an eosin-washed rectangle (stroma-like, no nuclei).
inline void add_eosin_rect(RgbImage& img, int x0, int y0, int w, int h, double c_e = 0.5,
                           const Vec3& hv = kRuifrokH, const Vec3& ev = kRuifrokE) {
    auto rgb = stain_pixel(0.0, c_e, hv, ev);
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) fill_pixel(img, x, y, rgb);
    }
}

/// White canvas with hematoxylin disks at the given centers.
inline RgbImage disk_fixture(int w, int h, const std::vector<std::pair<double, double>>& centers,
                             double radius = 6.0, double c_h = 1.0) {
    RgbImage img = white_image(w, h);
    for (const auto& [cx, cy] : centers) add_disk(img, cx, cy, radius, c_h);
    return img;
}

/// Deterministic disk centers with a minimum separation and border margin.
inline std::vector<std::pair<double, double>> random_centers(uint64_t seed, int count, int w,
                                                             int h, double min_sep = 30.0,
                                                             double margin = 12.0) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> centers;
    int guard = 0;
    while (static_cast<int>(centers.size()) < count && guard < 100000) {
        ++guard;
        double x = margin + static_cast<double>(pathrag::bounded_uniform(
                                rng, static_cast<uint64_t>(w - 2 * margin)));
        double y = margin + static_cast<double>(pathrag::bounded_uniform(
                                rng, static_cast<uint64_t>(h - 2 * margin)));
        bool ok = true;
        for (const auto& [px, py] : centers) {
            double dx = x - px, dy = y - py;
            if (dx * dx + dy * dy < min_sep * min_sep) {
                ok = false;
                break;
            }
        }
        if (ok) centers.emplace_back(x, y);
    }
    return centers;
}

/// Tissue-like fixture: nuclei disks plus eosin stroma, so both stain
/// estimation and detection have something to work with.
inline RgbImage tissue_fixture(uint64_t seed, int w, int h, int nuclei_count,
                               double radius = 6.0) {
    RgbImage img = white_image(w, h);
    std::mt19937_64 rng(pathrag::mix_seed(seed, 17));
    // A few eosin patches first, nuclei on top.
    for (int i = 0; i < 4; ++i) {
        int bw = 20 + static_cast<int>(pathrag::bounded_uniform(rng, 30));
        int bh = 20 + static_cast<int>(pathrag::bounded_uniform(rng, 30));
        int x = static_cast<int>(pathrag::bounded_uniform(rng, static_cast<uint64_t>(
                                                                   std::max(1, w - bw))));
        int y = static_cast<int>(pathrag::bounded_uniform(rng, static_cast<uint64_t>(
                                                                   std::max(1, h - bh))));
        double c_e = 0.35 + 0.1 * static_cast<double>(pathrag::bounded_uniform(rng, 4));
        add_eosin_rect(img, x, y, bw, bh, c_e);
    }
    auto centers = random_centers(seed, nuclei_count, w, h);
    for (size_t i = 0; i < centers.size(); ++i) {
        double c_h = 0.8 + 0.05 * static_cast<double>(pathrag::bounded_uniform(rng, 9));
        add_disk(img, centers[i].first, centers[i].second, radius, c_h);
    }
    return img;
}

}  // namespace fixtures
