#include "pathrag/image.hpp"

#include <algorithm>
#include <cmath>

namespace pathrag {

double od_ceiling() { return std::log10(255.0); }

double channel_to_od(uint8_t value) {
    int v = std::max<int>(value, 1);  // intensity floor keeps OD finite
    return -std::log10(v / 255.0);
}

uint8_t od_to_channel(double od) {
    double intensity = std::round(255.0 * std::pow(10.0, -od));
    return static_cast<uint8_t>(std::clamp(intensity, 0.0, 255.0));
}

OdImage rgb_to_od(const RgbImage& image) {
    OdImage out(image.width, image.height);
    for (size_t i = 0; i < image.data.size(); ++i) {
        out.data[i] = static_cast<float>(channel_to_od(image.data[i]));
    }
    return out;
}

RgbImage od_to_rgb(const OdImage& image) {
    RgbImage out(image.width, image.height);
    for (size_t i = 0; i < image.data.size(); ++i) {
        out.data[i] = od_to_channel(image.data[i]);
    }
    return out;
}

}  // namespace pathrag
