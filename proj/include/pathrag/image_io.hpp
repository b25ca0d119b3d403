#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathrag/image.hpp"

namespace pathrag {

/// Decode a PNG or JPEG file. Grayscale sources are expanded to three
/// identical channels; alpha is dropped; palettes are expanded.
/// Throws FileNotFound, UnsupportedFormat, or CorruptImage.
RgbImage load_image(const std::string& path);

/// Encode to an in-memory PNG with fixed settings (output bytes are
/// stable for a given input).
std::vector<uint8_t> encode_png(const RgbImage& image);

void save_png(const RgbImage& image, const std::string& path);
void save_jpeg(const RgbImage& image, const std::string& path, int quality = 95);

}  // namespace pathrag
