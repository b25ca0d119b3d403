#include "pathrag/stain.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pathrag/error.hpp"

namespace pathrag {

namespace {

// Type-7 percentile (linear interpolation between order statistics) on a
// sorted vector.
double percentile_sorted(const std::vector<float>& sorted, double pct) {
    if (sorted.empty()) return 0.0;
    double h = (pct / 100.0) * (static_cast<double>(sorted.size()) - 1.0);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (static_cast<double>(sorted[hi]) - sorted[lo]);
}

double percentile(std::vector<float> values, double pct) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, pct);
}

std::array<double, 3> to_unit_nonnegative(Eigen::Vector3d v) {
    if (v.sum() < 0.0) v = -v;
    v = v.cwiseMax(0.0);
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return {v[0], v[1], v[2]};
}

bool lex_greater(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    for (int i = 0; i < 3; ++i) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return false;
}

}  // namespace

StainReference default_stain_reference() {
    StainReference ref;
    ref.matrix.hematoxylin = {0.5626, 0.7201, 0.4062};
    ref.matrix.eosin = {0.2159, 0.8012, 0.5581};
    ref.max_concentrations = {1.9705, 1.0308};
    return ref;
}

StainMatrix estimate_stain_matrix(const RgbImage& image, const StainEstimationParams& params) {
    OdImage od = rgb_to_od(image);

    // Tissue mask: pixels whose strongest channel absorbs more than the
    // threshold. White background drops out here.
    std::vector<Eigen::Vector3d> tissue;
    tissue.reserve(od.pixel_count());
    for (size_t i = 0; i < od.pixel_count(); ++i) {
        const float* p = od.data.data() + i * 3;
        float max_od = std::max({p[0], p[1], p[2]});
        if (max_od > params.od_threshold) {
            tissue.emplace_back(p[0], p[1], p[2]);
        }
    }
    if (tissue.size() < static_cast<size_t>(params.min_tissue_pixels)) {
        throw_error(Errc::InsufficientTissue,
                    std::to_string(tissue.size()) + " tissue pixels, need " +
                        std::to_string(params.min_tissue_pixels));
    }

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& v : tissue) mean += v;
    mean /= static_cast<double>(tissue.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& v : tissue) {
        Eigen::Vector3d d = v - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(tissue.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    // Eigenvalues come out ascending; the principal plane is spanned by the
    // last two eigenvectors.
    if (solver.eigenvalues()[1] <= 1e-8) {
        throw_error(Errc::DegenerateCovariance, "OD cloud has rank < 2");
    }
    Eigen::Vector3d v1 = solver.eigenvectors().col(2);
    Eigen::Vector3d v2 = solver.eigenvectors().col(1);
    // Orient the basis deterministically: v1 along the mean OD direction,
    // v2 with its largest-magnitude component positive.
    if (v1.dot(mean) < 0.0) v1 = -v1;
    int arg_max = 0;
    v2.cwiseAbs().maxCoeff(&arg_max);
    if (v2[arg_max] < 0.0) v2 = -v2;

    std::vector<float> angles;
    angles.reserve(tissue.size());
    for (const auto& v : tissue) {
        angles.push_back(static_cast<float>(std::atan2(v.dot(v2), v.dot(v1))));
    }
    std::sort(angles.begin(), angles.end());
    double phi_lo = percentile_sorted(angles, params.alpha_percentile);
    double phi_hi = percentile_sorted(angles, 100.0 - params.alpha_percentile);

    std::array<double, 3> a =
        to_unit_nonnegative(std::cos(phi_lo) * v1 + std::sin(phi_lo) * v2);
    std::array<double, 3> b =
        to_unit_nonnegative(std::cos(phi_hi) * v1 + std::sin(phi_hi) * v2);

    // Hematoxylin absorbs more red light: larger first component wins,
    // lexicographic comparison breaks exact ties.
    StainMatrix result;
    bool a_is_h = a[0] != b[0] ? a[0] > b[0] : lex_greater(a, b);
    result.hematoxylin = a_is_h ? a : b;
    result.eosin = a_is_h ? b : a;
    return result;
}

ConcentrationField compute_concentrations(const OdImage& image, const StainMatrix& matrix) {
    Eigen::Matrix<double, 3, 2> basis;
    for (int i = 0; i < 3; ++i) {
        basis(i, 0) = matrix.hematoxylin[i];
        basis(i, 1) = matrix.eosin[i];
    }
    Eigen::Matrix2d gram = basis.transpose() * basis;
    double det = gram.determinant();
    if (std::abs(det) < 1e-12) {
        // Parallel stain vectors cannot be unmixed; keep the solve finite.
        det = det < 0.0 ? -1e-12 : 1e-12;
    }
    Eigen::Matrix2d gram_inv;
    gram_inv << gram(1, 1), -gram(0, 1), -gram(1, 0), gram(0, 0);
    gram_inv /= det;
    Eigen::Matrix<double, 2, 3> pinv = gram_inv * basis.transpose();

    ConcentrationField field;
    field.width = image.width;
    field.height = image.height;
    field.hematoxylin.resize(image.pixel_count());
    field.eosin.resize(image.pixel_count());
    for (size_t i = 0; i < image.pixel_count(); ++i) {
        const float* px = image.data.data() + i * 3;
        Eigen::Vector3d od(px[0], px[1], px[2]);
        Eigen::Vector2d c = pinv * od;
        field.hematoxylin[i] = static_cast<float>(std::max(0.0, c[0]));
        field.eosin[i] = static_cast<float>(std::max(0.0, c[1]));
    }
    return field;
}

ConcentrationField compute_concentrations(const RgbImage& image, const StainMatrix& matrix) {
    return compute_concentrations(rgb_to_od(image), matrix);
}

RgbImage normalize_stains(const RgbImage& image, const StainReference& reference,
                          const StainEstimationParams& params) {
    StainMatrix source = estimate_stain_matrix(image, params);
    ConcentrationField field = compute_concentrations(image, source);

    std::array<double, 2> p99 = {percentile(field.hematoxylin, 99.0),
                                 percentile(field.eosin, 99.0)};
    std::array<double, 2> scale{};
    for (int s = 0; s < 2; ++s) {
        scale[s] = p99[s] > 1e-6 ? reference.max_concentrations[s] / p99[s] : 1.0;
    }

    RgbImage out(image.width, image.height);
    for (size_t i = 0; i < image.pixel_count(); ++i) {
        double ch = field.hematoxylin[i] * scale[0];
        double ce = field.eosin[i] * scale[1];
        for (int k = 0; k < 3; ++k) {
            double od_val = ch * reference.matrix.hematoxylin[k] + ce * reference.matrix.eosin[k];
            out.data[i * 3 + k] = od_to_channel(od_val);
        }
    }
    return out;
}

double angular_distance_deg(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < 3; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0) return 90.0;
    double cosine = std::clamp(dot / denom, -1.0, 1.0);
    return std::acos(cosine) * 180.0 / M_PI;
}

}  // namespace pathrag
