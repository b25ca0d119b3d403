#include "pathrag/patching.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "pathrag/error.hpp"
#include "pathrag/rng.hpp"

namespace pathrag {

namespace {

struct AxisLayout {
    int extent;
    int offsets[3];
};

// Solving 3e - 2*(0.2e) = L gives e = L/2.6; the three offsets are the
// symmetric positions 0, (L-e)/2, L-e.
AxisLayout layout_axis(int length) {
    AxisLayout axis{};
    axis.extent = static_cast<int>(std::lround(length / 2.6));
    axis.extent = std::max(1, std::min(axis.extent, length));
    for (int i = 0; i < 3; ++i) {
        axis.offsets[i] = static_cast<int>(std::lround(i * (length - axis.extent) / 2.0));
    }
    return axis;
}

}  // namespace

std::vector<Patch> tile_patches(int width, int height) {
    if (width < 3 || height < 3) {
        throw_error(Errc::ImageTooSmall, std::to_string(width) + "x" + std::to_string(height) +
                                             " cannot be tiled 3x3");
    }
    AxisLayout ax = layout_axis(width);
    AxisLayout ay = layout_axis(height);

    std::vector<Patch> patches;
    patches.reserve(9);
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            Patch p;
            p.index = row * 3 + col;
            p.x = ax.offsets[col];
            p.y = ay.offsets[row];
            p.width = ax.extent;
            p.height = ay.extent;
            patches.push_back(p);
        }
    }
    return patches;
}

int count_nuclei_in_patch(const Patch& patch, const std::vector<Nucleus>& nuclei) {
    int count = 0;
    for (const auto& n : nuclei) {
        if (n.centroid_x >= patch.x && n.centroid_x < patch.x + patch.width &&
            n.centroid_y >= patch.y && n.centroid_y < patch.y + patch.height) {
            ++count;
        }
    }
    return count;
}

std::vector<RankedPatch> rank_patches(const std::vector<Patch>& patches,
                                      const std::vector<Nucleus>& nuclei, int top_k) {
    std::vector<RankedPatch> ranked;
    ranked.reserve(patches.size());
    for (const auto& p : patches) {
        ranked.push_back({p, count_nuclei_in_patch(p, nuclei), 0});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPatch& a, const RankedPatch& b) {
        if (a.nuclei_count != b.nuclei_count) return a.nuclei_count > b.nuclei_count;
        return a.patch.index < b.patch.index;
    });
    int keep = std::clamp<int>(top_k, 0, static_cast<int>(ranked.size()));
    ranked.resize(keep);
    for (int i = 0; i < keep; ++i) ranked[i].rank = i;
    return ranked;
}

std::vector<Patch> random_patches(const std::vector<Patch>& patches, int top_k, uint64_t seed) {
    std::vector<int> order(patches.size());
    std::iota(order.begin(), order.end(), 0);
    int keep = std::clamp<int>(top_k, 0, static_cast<int>(patches.size()));

    std::mt19937_64 rng(seed);
    for (int i = 0; i < keep; ++i) {
        int j = i + static_cast<int>(bounded_uniform(rng, order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<Patch> selection;
    selection.reserve(keep);
    for (int i = 0; i < keep; ++i) selection.push_back(patches[order[i]]);
    return selection;
}

RgbImage crop(const RgbImage& image, const Patch& patch) {
    if (patch.x < 0 || patch.y < 0 || patch.width < 1 || patch.height < 1 ||
        patch.x + patch.width > image.width || patch.y + patch.height > image.height) {
        throw_error(Errc::OutOfBounds, "patch rectangle exceeds image bounds");
    }
    RgbImage out(patch.width, patch.height);
    for (int y = 0; y < patch.height; ++y) {
        const uint8_t* src = image.pixel(patch.x, patch.y + y);
        uint8_t* dst = out.pixel(0, y);
        std::memcpy(dst, src, static_cast<size_t>(patch.width) * 3);
    }
    return out;
}

}  // namespace pathrag
