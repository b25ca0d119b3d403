#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pathrag/error.hpp"
#include "pathrag/rng.hpp"
#include "pathrag/stain.hpp"

using namespace pathrag;

namespace {

// Synthesis oracle: per-pixel concentrations drawn mostly as single-stain
// tissue (nuclei vs stroma) with a mixed remainder, rendered through the
// known basis. The estimator never sees the concentrations.
struct SynthImage {
    RgbImage image;
    std::vector<std::array<double, 2>> concentrations;
};

SynthImage synth_from_basis(uint64_t seed, int n_pixels, const fixtures::Vec3& h,
                            const fixtures::Vec3& e) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(bounded_uniform(rng, 1 << 20)) /
                        static_cast<double>(1 << 20);
    };
    int width = 100;
    int height = (n_pixels + width - 1) / width;
    SynthImage out{RgbImage(width, height), {}};
    out.concentrations.resize(out.image.pixel_count(), {0.0, 0.0});
    for (size_t i = 0; i < out.image.pixel_count(); ++i) {
        uint64_t bucket = bounded_uniform(rng, 100);
        double ch = 0.0, ce = 0.0;
        if (bucket < 45) {
            ch = uniform(0.3, 1.5);
        } else if (bucket < 90) {
            ce = uniform(0.3, 1.5);
        } else {
            ch = uniform(0.3, 1.5);
            ce = uniform(0.3, 1.5);
        }
        auto rgb = fixtures::stain_pixel(ch, ce, h, e);
        out.image.data[i * 3] = rgb[0];
        out.image.data[i * 3 + 1] = rgb[1];
        out.image.data[i * 3 + 2] = rgb[2];
        out.concentrations[i] = {ch, ce};
    }
    return out;
}

}  // namespace

TEST_CASE("estimate_stain_matrix recovers a known basis within 2 degrees") {
    std::array<double, 3> h = {fixtures::kMacenkoH[0], fixtures::kMacenkoH[1],
                               fixtures::kMacenkoH[2]};
    std::array<double, 3> e = {fixtures::kMacenkoE[0], fixtures::kMacenkoE[1],
                               fixtures::kMacenkoE[2]};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        SynthImage synth = synth_from_basis(seed, 5000, fixtures::kMacenkoH, fixtures::kMacenkoE);
        StainMatrix m = estimate_stain_matrix(synth.image);
        CHECK(angular_distance_deg(m.hematoxylin, h) < 2.0);
        CHECK(angular_distance_deg(m.eosin, e) < 2.0);
    }
}

TEST_CASE("estimated columns are unit-norm and non-negative") {
    for (uint64_t seed = 100; seed < 110; ++seed) {
        SynthImage synth = synth_from_basis(seed, 4000, fixtures::kMacenkoH, fixtures::kMacenkoE);
        StainMatrix m = estimate_stain_matrix(synth.image);
        for (int c = 0; c < 2; ++c) {
            const auto& col = m.column(c);
            double norm = std::sqrt(col[0] * col[0] + col[1] * col[1] + col[2] * col[2]);
            CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
            for (double v : col) CHECK(v >= 0.0);
        }
        // ordering rule: hematoxylin has the larger red component
        CHECK(m.hematoxylin[0] >= m.eosin[0]);
    }
}

TEST_CASE("estimate_stain_matrix error paths") {
    SUBCASE("all-white image has no tissue") {
        RgbImage white = fixtures::white_image(64, 64);
        try {
            estimate_stain_matrix(white);
            FAIL("expected InsufficientTissue");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::InsufficientTissue);
        }
    }
    SUBCASE("single uniform color is rank deficient") {
        RgbImage flat(64, 64);
        for (size_t i = 0; i < flat.pixel_count(); ++i) {
            flat.data[i * 3] = 120;
            flat.data[i * 3 + 1] = 90;
            flat.data[i * 3 + 2] = 160;
        }
        try {
            estimate_stain_matrix(flat);
            FAIL("expected DegenerateCovariance");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DegenerateCovariance);
        }
    }
}

TEST_CASE("compute_concentrations unmixes forward-synthesized absorbances") {
    StainMatrix m;
    m.hematoxylin = {fixtures::kMacenkoH[0], fixtures::kMacenkoH[1], fixtures::kMacenkoH[2]};
    m.eosin = {fixtures::kMacenkoE[0], fixtures::kMacenkoE[1], fixtures::kMacenkoE[2]};

    // exact forward synthesis in OD space (no 8-bit quantization)
    auto unmix_one = [&](double ch, double ce) {
        OdImage od(1, 1);
        for (int k = 0; k < 3; ++k) {
            od.data[k] =
                static_cast<float>(ch * fixtures::kMacenkoH[k] + ce * fixtures::kMacenkoE[k]);
        }
        ConcentrationField f = compute_concentrations(od, m);
        return std::array<double, 2>{f.hematoxylin[0], f.eosin[0]};
    };

    SUBCASE("white pixel has zero concentrations") {
        auto c = unmix_one(0.0, 0.0);
        CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(c[1] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("pure hematoxylin") {
        auto c = unmix_one(1.0, 0.0);
        CHECK(std::abs(c[0] - 1.0) < 1e-3);
        CHECK(std::abs(c[1] - 0.0) < 1e-3);
    }
    SUBCASE("mixture 0.5 H + 0.7 E") {
        auto c = unmix_one(0.5, 0.7);
        CHECK(std::abs(c[0] - 0.5) < 1e-3);
        CHECK(std::abs(c[1] - 0.7) < 1e-3);
    }
}

TEST_CASE("rgb-path concentrations match an independent least-squares oracle") {
    StainMatrix m;
    m.hematoxylin = {fixtures::kMacenkoH[0], fixtures::kMacenkoH[1], fixtures::kMacenkoH[2]};
    m.eosin = {fixtures::kMacenkoE[0], fixtures::kMacenkoE[1], fixtures::kMacenkoE[2]};

    SynthImage synth = synth_from_basis(42, 2000, fixtures::kMacenkoH, fixtures::kMacenkoE);
    ConcentrationField f = compute_concentrations(synth.image, m);
    OdImage od = rgb_to_od(synth.image);

    // hand-rolled normal-equation solve (Cramer), clamped at zero
    const auto& H = m.hematoxylin;
    const auto& E = m.eosin;
    double hh = H[0] * H[0] + H[1] * H[1] + H[2] * H[2];
    double he = H[0] * E[0] + H[1] * E[1] + H[2] * E[2];
    double ee = E[0] * E[0] + E[1] * E[1] + E[2] * E[2];
    double det = hh * ee - he * he;
    for (size_t i = 0; i < synth.image.pixel_count(); ++i) {
        const float* v = od.data.data() + i * 3;
        double hv = H[0] * v[0] + H[1] * v[1] + H[2] * v[2];
        double ev = E[0] * v[0] + E[1] * v[1] + E[2] * v[2];
        double ch = std::max(0.0, (ee * hv - he * ev) / det);
        double ce = std::max(0.0, (hh * ev - he * hv) / det);
        CHECK(std::abs(f.hematoxylin[i] - ch) < 1e-5);
        CHECK(std::abs(f.eosin[i] - ce) < 1e-5);
    }
}

TEST_CASE("normalize_stains") {
    StainReference ref = default_stain_reference();

    SUBCASE("fixed point on data synthesized at the reference scale") {
        SynthImage synth = synth_from_basis(7, 5000, fixtures::kMacenkoH, fixtures::kMacenkoE);
        // rescale the generating concentrations so their 99th percentile
        // equals the reference scale exactly
        std::vector<float> ch, ce;
        for (auto& c : synth.concentrations) {
            ch.push_back(static_cast<float>(c[0]));
            ce.push_back(static_cast<float>(c[1]));
        }
        auto p99 = [](std::vector<float> v) {
            std::sort(v.begin(), v.end());
            double hpos = 0.99 * (static_cast<double>(v.size()) - 1.0);
            size_t lo = static_cast<size_t>(hpos);
            double frac = hpos - static_cast<double>(lo);
            return v[lo] + frac * (v[std::min(lo + 1, v.size() - 1)] - v[lo]);
        };
        double sh = ref.max_concentrations[0] / p99(ch);
        double se = ref.max_concentrations[1] / p99(ce);
        RgbImage img(synth.image.width, synth.image.height);
        for (size_t i = 0; i < img.pixel_count(); ++i) {
            auto rgb = fixtures::stain_pixel(synth.concentrations[i][0] * sh,
                                             synth.concentrations[i][1] * se,
                                             fixtures::kMacenkoH, fixtures::kMacenkoE);
            img.data[i * 3] = rgb[0];
            img.data[i * 3 + 1] = rgb[1];
            img.data[i * 3 + 2] = rgb[2];
        }

        RgbImage out = normalize_stains(img, ref);
        REQUIRE(out.width == img.width);
        REQUIRE(out.height == img.height);
        int worst = 0;
        for (size_t i = 0; i < img.data.size(); ++i) {
            worst = std::max(worst, std::abs(int(out.data[i]) - int(img.data[i])));
        }
        CHECK(worst <= 3);
    }

    SUBCASE("white stays white") {
        SynthImage synth = synth_from_basis(9, 2000, fixtures::kMacenkoH, fixtures::kMacenkoE);
        RgbImage img = synth.image;
        for (int x = 0; x < img.width; ++x) {
            for (int k = 0; k < 3; ++k) img.pixel(x, 0)[k] = 255;
        }
        RgbImage out = normalize_stains(img, ref);
        for (int x = 0; x < img.width; ++x) {
            for (int k = 0; k < 3; ++k) CHECK(int(out.pixel(x, 0)[k]) >= 253);
        }
    }

    SUBCASE("deterministic byte-for-byte") {
        SynthImage synth = synth_from_basis(11, 3000, fixtures::kMacenkoH, fixtures::kMacenkoE);
        RgbImage a = normalize_stains(synth.image, ref);
        RgbImage b = normalize_stains(synth.image, ref);
        CHECK(a == b);
    }

    SUBCASE("output keeps input dimensions") {
        RgbImage img = fixtures::tissue_fixture(21, 120, 90, 12);
        RgbImage out = normalize_stains(img, ref);
        CHECK(out.width == img.width);
        CHECK(out.height == img.height);
        CHECK(out.data.size() == img.data.size());
    }
}
