#include "pathrag/nuclei.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "pathrag/stain.hpp"

namespace pathrag {

namespace {

// Ruifrok-Johnston H&E deconvolution constants.
StainMatrix detection_basis() {
    StainMatrix m;
    m.hematoxylin = {0.650, 0.704, 0.286};
    m.eosin = {0.072, 0.990, 0.105};
    return m;
}

// Otsu threshold over a 256-bin histogram; returns the bin index that
// maximizes between-class variance, ties toward the lower index.
int otsu_threshold(const std::array<int64_t, 256>& hist, int64_t total) {
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

    double best = -1.0;
    int best_t = 0;
    double w0 = 0.0;
    double sum0 = 0.0;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(hist[t]);
        if (w0 == 0.0) continue;
        double w1 = static_cast<double>(total) - w0;
        if (w1 == 0.0) break;
        sum0 += static_cast<double>(t) * hist[t];
        double mu0 = sum0 / w0;
        double mu1 = (sum_all - sum0) / w1;
        double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

// Binary opening with the 3x3 cross; pixels outside the image count as
// background for the erosion.
std::vector<uint8_t> open_cross(const std::vector<uint8_t>& mask, int w, int h) {
    auto at = [&](const std::vector<uint8_t>& m, int x, int y) -> uint8_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return m[static_cast<size_t>(y) * w + x];
    };

    std::vector<uint8_t> eroded(mask.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            eroded[static_cast<size_t>(y) * w + x] =
                at(mask, x, y) && at(mask, x - 1, y) && at(mask, x + 1, y) &&
                at(mask, x, y - 1) && at(mask, x, y + 1);
        }
    }
    std::vector<uint8_t> dilated(mask.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            dilated[static_cast<size_t>(y) * w + x] =
                at(eroded, x, y) || at(eroded, x - 1, y) || at(eroded, x + 1, y) ||
                at(eroded, x, y - 1) || at(eroded, x, y + 1);
        }
    }
    return dilated;
}

double component_eccentricity(const std::vector<std::pair<int, int>>& pixels, double cx,
                              double cy) {
    double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
    for (const auto& [x, y] : pixels) {
        double dx = x - cx;
        double dy = y - cy;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    double n = static_cast<double>(pixels.size());
    mu20 /= n;
    mu02 /= n;
    mu11 /= n;
    double common = std::sqrt((mu20 - mu02) * (mu20 - mu02) + 4.0 * mu11 * mu11);
    double lambda1 = (mu20 + mu02 + common) / 2.0;
    double lambda2 = (mu20 + mu02 - common) / 2.0;
    if (lambda1 <= 0.0) return 0.0;
    return std::sqrt(std::max(0.0, 1.0 - lambda2 / lambda1));
}

}  // namespace

std::vector<float> hematoxylin_channel(const RgbImage& image) {
    ConcentrationField field = compute_concentrations(image, detection_basis());
    return std::move(field.hematoxylin);
}

std::vector<Nucleus> detect_nuclei(const RgbImage& image, const DetectionParams& params) {
    const int w = image.width;
    const int h = image.height;
    std::vector<float> hema = hematoxylin_channel(image);

    float h_max = 0.0f;
    for (float v : hema) h_max = std::max(h_max, v);
    if (h_max <= 0.0f) return {};  // nothing absorbs hematoxylin-like light

    std::array<int64_t, 256> hist{};
    std::vector<uint8_t> bins(hema.size());
    for (size_t i = 0; i < hema.size(); ++i) {
        int b = static_cast<int>(std::lround(hema[i] / h_max * 255.0f));
        bins[i] = static_cast<uint8_t>(std::clamp(b, 0, 255));
        ++hist[bins[i]];
    }
    int threshold = otsu_threshold(hist, static_cast<int64_t>(hema.size()));

    std::vector<uint8_t> mask(hema.size());
    for (size_t i = 0; i < hema.size(); ++i) mask[i] = bins[i] > threshold;
    mask = open_cross(mask, w, h);

    // 8-connected component extraction, scan order.
    std::vector<Nucleus> nuclei;
    std::vector<uint8_t> visited(mask.size(), 0);
    std::vector<std::pair<int, int>> stack;
    std::vector<std::pair<int, int>> pixels;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            size_t idx = static_cast<size_t>(sy) * w + sx;
            if (!mask[idx] || visited[idx]) continue;
            pixels.clear();
            stack.assign(1, {sx, sy});
            visited[idx] = 1;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                pixels.emplace_back(x, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = x + dx;
                        int ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        size_t nidx = static_cast<size_t>(ny) * w + nx;
                        if (mask[nidx] && !visited[nidx]) {
                            visited[nidx] = 1;
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }

            int area = static_cast<int>(pixels.size());
            if (area < params.min_area || area > params.max_area) continue;

            double sx_sum = 0.0, sy_sum = 0.0, h_sum = 0.0;
            for (const auto& [x, y] : pixels) {
                sx_sum += x;
                sy_sum += y;
                h_sum += hema[static_cast<size_t>(y) * w + x];
            }
            Nucleus n;
            n.centroid_x = sx_sum / area;
            n.centroid_y = sy_sum / area;
            n.area = area;
            n.mean_h_od = h_sum / area;
            n.feature = {static_cast<double>(area), n.mean_h_od,
                         component_eccentricity(pixels, n.centroid_x, n.centroid_y)};
            nuclei.push_back(n);
        }
    }

    std::stable_sort(nuclei.begin(), nuclei.end(), [](const Nucleus& a, const Nucleus& b) {
        if (a.centroid_y != b.centroid_y) return a.centroid_y < b.centroid_y;
        return a.centroid_x < b.centroid_x;
    });
    return nuclei;
}

ImageClass classify_image(const RgbImage& image, const DetectionParams& params) {
    ImageClass result;
    result.nuclei_count = static_cast<int>(detect_nuclei(image, params).size());
    result.label = result.nuclei_count >= params.pathology_threshold ? ImageLabel::HePathology
                                                                     : ImageLabel::NonPathology;
    return result;
}

}  // namespace pathrag
