#pragma once

#include <array>
#include <vector>

#include "pathrag/image.hpp"

namespace pathrag {

/// One detected nucleus. Coordinates are pixel-space, y-down.
struct Nucleus {
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    int area = 0;            // pixels in the connected component
    double mean_h_od = 0.0;  // mean hematoxylin concentration over the component
    std::array<double, 3> feature{};  // (area, mean_h_od, eccentricity)
};

struct DetectionParams {
    int min_area = 10;
    int max_area = 5000;
    int pathology_threshold = 5;  // minimum nuclei for the H&E gate
};

enum class ImageLabel { HePathology, NonPathology };

struct ImageClass {
    ImageLabel label = ImageLabel::NonPathology;
    int nuclei_count = 0;
};

/// Hematoxylin concentration per pixel via color deconvolution with the
/// fixed Ruifrok-Johnston basis. Detection deliberately does not depend on
/// per-image basis estimation.
std::vector<float> hematoxylin_channel(const RgbImage& image);

/// Classical detector: Otsu threshold on the hematoxylin channel, one
/// binary opening with a 3x3 cross, 8-connected components, area filter.
/// Output is sorted by (centroid_y, centroid_x).
std::vector<Nucleus> detect_nuclei(const RgbImage& image, const DetectionParams& params = {});

/// H&E pathology gate: HePathology iff at least `pathology_threshold`
/// nuclei are detected.
ImageClass classify_image(const RgbImage& image, const DetectionParams& params = {});

}  // namespace pathrag
