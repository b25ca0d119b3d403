#pragma once

#include <cstdint>
#include <vector>

namespace pathrag {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // size = width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}
    RgbImage(int w, int h, std::vector<uint8_t> bytes)
        : width(w), height(h), data(std::move(bytes)) {}

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    const uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    uint8_t* pixel(int x, int y) {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }

    bool operator==(const RgbImage& other) const = default;
};

/// Optical-density raster. Values are unitless absorbances in
/// [0, log10(255)]; the ceiling comes from the intensity floor of 1.
struct OdImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // size = width * height * 3

    OdImage() = default;
    OdImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0f) {}

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    const float* pixel(int x, int y) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

/// Largest representable absorbance: -log10(1/255).
double od_ceiling();

/// Per-channel absorbance of one 8-bit intensity: -log10(max(v,1)/255).
double channel_to_od(uint8_t value);

/// Inverse of channel_to_od: clamp(round(255 * 10^-od), 0, 255).
uint8_t od_to_channel(double od);

OdImage rgb_to_od(const RgbImage& image);
RgbImage od_to_rgb(const OdImage& image);

}  // namespace pathrag
