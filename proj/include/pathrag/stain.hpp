#pragma once

#include <array>
#include <vector>

#include "pathrag/image.hpp"

namespace pathrag {

/// Two unit stain vectors in OD space, stored column-wise.
/// Column 0 is hematoxylin, column 1 is eosin; hematoxylin is the column
/// with the larger red-channel component.
struct StainMatrix {
    std::array<double, 3> hematoxylin{};
    std::array<double, 3> eosin{};

    const std::array<double, 3>& column(int i) const { return i == 0 ? hematoxylin : eosin; }
};

/// Normalization target: a stain basis plus the 99th-percentile
/// concentration scale per stain.
struct StainReference {
    StainMatrix matrix;
    std::array<double, 2> max_concentrations{};
};

/// Community reference H&E basis and concentration scale. Overridable in
/// the pipeline config.
StainReference default_stain_reference();

/// Per-pixel (hematoxylin, eosin) concentration planes.
struct ConcentrationField {
    int width = 0;
    int height = 0;
    std::vector<float> hematoxylin;  // size = width * height
    std::vector<float> eosin;
};

struct StainEstimationParams {
    double od_threshold = 0.15;    // tissue mask: max-channel OD must exceed this
    double alpha_percentile = 1.0; // percentile of extreme projection angles
    int min_tissue_pixels = 100;
};

/// Macenko stain-basis estimation: principal OD plane of tissue pixels,
/// percentile extreme angles mapped back to unit 3-vectors.
/// Throws InsufficientTissue or DegenerateCovariance.
StainMatrix estimate_stain_matrix(const RgbImage& image,
                                  const StainEstimationParams& params = {});

/// Least-squares unmixing against a stain basis; negative concentrations
/// are clamped to zero. The core operates on absorbances; the RgbImage
/// overload converts first (8-bit quantization puts a floor of a few 1e-3
/// on recovery accuracy there).
ConcentrationField compute_concentrations(const OdImage& image, const StainMatrix& matrix);
ConcentrationField compute_concentrations(const RgbImage& image, const StainMatrix& matrix);

/// Macenko normalization: re-render the image in the reference basis with
/// concentrations rescaled so the source 99th percentile maps onto the
/// reference scale. Estimation errors propagate.
RgbImage normalize_stains(const RgbImage& image, const StainReference& reference,
                          const StainEstimationParams& params = {});

/// Angle in degrees between two stain vectors; used by calibration tests
/// and the CLI diagnostics.
double angular_distance_deg(const std::array<double, 3>& a, const std::array<double, 3>& b);

}  // namespace pathrag
