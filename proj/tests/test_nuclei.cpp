#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pathrag/nuclei.hpp"

using namespace pathrag;

TEST_CASE("hematoxylin_channel") {
    SUBCASE("white image yields an all-zero field") {
        RgbImage white = fixtures::white_image(16, 16);
        for (float v : hematoxylin_channel(white)) CHECK(v == 0.0f);
    }
    SUBCASE("forward-synthesized 0.8 H pixel unmixes to 0.8") {
        RgbImage img(1, 1);
        auto rgb = fixtures::stain_pixel(0.8, 0.0);
        img.data = {rgb[0], rgb[1], rgb[2]};
        std::vector<float> field = hematoxylin_channel(img);
        CHECK(std::abs(field[0] - 0.8) < 1e-3);
    }
    SUBCASE("pure eosin clamps to roughly zero hematoxylin") {
        RgbImage img(1, 1);
        auto rgb = fixtures::stain_pixel(0.0, 1.0);
        img.data = {rgb[0], rgb[1], rgb[2]};
        std::vector<float> field = hematoxylin_channel(img);
        CHECK(field[0] >= 0.0f);
        CHECK(field[0] < 1e-2f);
    }
}

TEST_CASE("detect_nuclei on synthetic disk fixtures") {
    SUBCASE("blank white image yields nothing") {
        CHECK(detect_nuclei(fixtures::white_image(256, 256)).empty());
    }

    SUBCASE("seven disks at known centers") {
        std::vector<std::pair<double, double>> centers = {
            {30, 30}, {90, 40}, {150, 35}, {60, 100}, {120, 130}, {200, 90}, {220, 200}};
        RgbImage img = fixtures::disk_fixture(256, 256, centers, 6.0);
        std::vector<Nucleus> nuclei = detect_nuclei(img);
        REQUIRE(nuclei.size() == centers.size());
        // detector output is sorted by (y, x); match by nearest center
        for (const auto& [cx, cy] : centers) {
            double best = 1e9;
            for (const auto& n : nuclei) {
                best = std::min(best, std::hypot(n.centroid_x - cx, n.centroid_y - cy));
            }
            CHECK(best < 2.0);
        }
        for (const auto& n : nuclei) {
            CHECK(n.area >= 10);
            CHECK(n.area <= 5000);
            CHECK(n.mean_h_od > 0.0);
            CHECK(n.centroid_x >= 0.0);
            CHECK(n.centroid_x < img.width);
            CHECK(n.centroid_y >= 0.0);
            CHECK(n.centroid_y < img.height);
            // disks are round: low eccentricity
            CHECK(n.feature[2] < 0.5);
        }
    }

    SUBCASE("a tiny 2x2 square is filtered, seven disks remain") {
        std::vector<std::pair<double, double>> centers = {
            {30, 30}, {90, 40}, {150, 35}, {60, 100}, {120, 130}, {200, 90}, {220, 200}};
        RgbImage img = fixtures::disk_fixture(256, 256, centers, 6.0);
        auto rgb = fixtures::stain_pixel(1.0, 0.0);
        for (int y = 240; y < 242; ++y) {
            for (int x = 20; x < 22; ++x) fixtures::fill_pixel(img, x, y, rgb);
        }
        CHECK(detect_nuclei(img).size() == 7);
    }

    SUBCASE("output is sorted by (centroid_y, centroid_x)") {
        RgbImage img = fixtures::tissue_fixture(5, 300, 220, 15);
        std::vector<Nucleus> nuclei = detect_nuclei(img);
        for (size_t i = 1; i < nuclei.size(); ++i) {
            bool ordered = nuclei[i - 1].centroid_y < nuclei[i].centroid_y ||
                           (nuclei[i - 1].centroid_y == nuclei[i].centroid_y &&
                            nuclei[i - 1].centroid_x <= nuclei[i].centroid_x);
            CHECK(ordered);
        }
    }

    SUBCASE("determinism: identical input gives an identical list") {
        RgbImage img = fixtures::tissue_fixture(9, 220, 180, 10);
        std::vector<Nucleus> a = detect_nuclei(img);
        std::vector<Nucleus> b = detect_nuclei(img);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].centroid_x == b[i].centroid_x);
            CHECK(a[i].centroid_y == b[i].centroid_y);
            CHECK(a[i].area == b[i].area);
            CHECK(a[i].mean_h_od == b[i].mean_h_od);
        }
    }
}

TEST_CASE("detection is translation equivariant within half a pixel") {
    std::vector<std::pair<double, double>> centers = {{40, 40}, {100, 60}, {70, 120}};
    RgbImage base = fixtures::disk_fixture(200, 200, centers, 6.0);
    std::vector<Nucleus> before = detect_nuclei(base);
    REQUIRE(before.size() == 3);

    const int dx = 17, dy = 9;
    std::vector<std::pair<double, double>> shifted;
    for (auto [x, y] : centers) shifted.emplace_back(x + dx, y + dy);
    RgbImage moved = fixtures::disk_fixture(200, 200, shifted, 6.0);
    std::vector<Nucleus> after = detect_nuclei(moved);
    REQUIRE(after.size() == 3);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(std::abs(after[i].centroid_x - before[i].centroid_x - dx) <= 0.5);
        CHECK(std::abs(after[i].centroid_y - before[i].centroid_y - dy) <= 0.5);
        CHECK(after[i].area == before[i].area);
    }
}

TEST_CASE("classify_image applies the 5-nuclei gate") {
    auto fixture_with = [](int count) {
        std::vector<std::pair<double, double>> centers;
        for (int i = 0; i < count; ++i) {
            centers.emplace_back(30.0 + 40.0 * (i % 5), 30.0 + 40.0 * (i / 5));
        }
        return fixtures::disk_fixture(256, 256, centers, 6.0);
    };

    SUBCASE("five disks is pathology (boundary)") {
        ImageClass cls = classify_image(fixture_with(5));
        CHECK(cls.label == ImageLabel::HePathology);
        CHECK(cls.nuclei_count == 5);
    }
    SUBCASE("four disks is not (boundary)") {
        ImageClass cls = classify_image(fixture_with(4));
        CHECK(cls.label == ImageLabel::NonPathology);
        CHECK(cls.nuclei_count == 4);
    }
    SUBCASE("blank white image") {
        ImageClass cls = classify_image(fixtures::white_image(64, 64));
        CHECK(cls.label == ImageLabel::NonPathology);
        CHECK(cls.nuclei_count == 0);
    }
    SUBCASE("count equals detect_nuclei length") {
        for (uint64_t seed = 0; seed < 5; ++seed) {
            RgbImage img = fixtures::tissue_fixture(seed, 260, 200, 8);
            CHECK(classify_image(img).nuclei_count ==
                  static_cast<int>(detect_nuclei(img).size()));
        }
    }
    SUBCASE("threshold is configurable") {
        DetectionParams params;
        params.pathology_threshold = 3;
        CHECK(classify_image(fixture_with(3), params).label == ImageLabel::HePathology);
        CHECK(classify_image(fixture_with(2), params).label == ImageLabel::NonPathology);
    }
}
