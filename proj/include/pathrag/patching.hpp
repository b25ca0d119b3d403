#pragma once

#include <cstdint>
#include <vector>

#include "pathrag/image.hpp"
#include "pathrag/nuclei.hpp"

namespace pathrag {

/// One tile of the 3x3 decomposition. `index` is the row-major grid
/// position: (row, col) = (index / 3, index % 3).
struct Patch {
    int index = 0;
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

struct RankedPatch {
    Patch patch;
    int nuclei_count = 0;
    int rank = 0;  // 0 = most nuclei
};

/// 3x3 overlapping grid: per axis the patch extent is round(L / 2.6) and
/// the three offsets are round(i * (L - extent) / 2), which gives adjacent
/// patches a 20%-of-extent overlap and full coverage for any size.
/// Throws ImageTooSmall when either dimension is below 3.
std::vector<Patch> tile_patches(int width, int height);

/// Centroids inside [x, x+w) x [y, y+h), half-open on both axes.
int count_nuclei_in_patch(const Patch& patch, const std::vector<Nucleus>& nuclei);

/// Sort by (nuclei count desc, patch index asc) and keep the first
/// min(top_k, 9) with ranks assigned.
std::vector<RankedPatch> rank_patches(const std::vector<Patch>& patches,
                                      const std::vector<Nucleus>& nuclei, int top_k);

/// Seeded Fisher-Yates selection of top_k distinct patches, in draw order.
std::vector<Patch> random_patches(const std::vector<Patch>& patches, int top_k, uint64_t seed);

/// Exact pixel copy of the patch rectangle. Throws OutOfBounds.
RgbImage crop(const RgbImage& image, const Patch& patch);

}  // namespace pathrag
