#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"

namespace kpose {

using ShapeCoefficients = Eigen::VectorXd;

// Linear deformable shape model S = B0 + sum_i c_i B_i. Modes are unit-norm
// (flattened to 3p-vectors) and mutually orthogonal; their variances live in
// `eigenvalues`. `total_variance` is the trace of the training covariance,
// including the variance of discarded modes.
struct ShapeBasis {
    std::string class_name = "object";
    PointMatrix3 mean;
    std::vector<PointMatrix3> modes;
    Eigen::VectorXd eigenvalues;
    double total_variance = 0.0;
    std::vector<std::string> keypoint_names;

    int num_keypoints() const { return static_cast<int>(mean.cols()); }
    int num_modes() const { return static_cast<int>(modes.size()); }

    void validate() const {
        const auto p = mean.cols();
        detail::require(p >= 1, "shape basis needs at least one keypoint");
        detail::require(mean.allFinite(), "shape basis mean has non-finite entries");
        detail::require_dims(eigenvalues.size() == static_cast<Eigen::Index>(modes.size()),
                             "shape basis: one eigenvalue per mode required");
        detail::require_dims(keypoint_names.empty() ||
                                 static_cast<Eigen::Index>(keypoint_names.size()) == p,
                             "shape basis: keypoint name count differs from p");
        for (size_t i = 0; i < modes.size(); ++i) {
            detail::require_dims(modes[i].cols() == p, "shape basis: mode has wrong point count");
            detail::require(modes[i].allFinite(), "shape basis: mode has non-finite entries");
            detail::require(eigenvalues(static_cast<Eigen::Index>(i)) >= 0.0,
                            "shape basis: negative eigenvalue");
            if (i > 0)
                detail::require(eigenvalues(static_cast<Eigen::Index>(i)) <=
                                    eigenvalues(static_cast<Eigen::Index>(i - 1)),
                                "shape basis: eigenvalues must be sorted descending");
        }
        detail::require(std::isfinite(total_variance) && total_variance >= 0.0,
                        "shape basis: total variance must be finite and nonnegative");
    }

    // Per-point mode matrix: column j of the 3 x k block for keypoint i is
    // B_j's i-th column.
    Eigen::Matrix3Xd mode_block(Eigen::Index point) const {
        Eigen::Matrix3Xd block(3, modes.size());
        for (size_t j = 0; j < modes.size(); ++j)
            block.col(static_cast<Eigen::Index>(j)) = modes[j].col(point);
        return block;
    }
};

struct BasisSelection {
    std::optional<int> fixed_k;
    double variance_fraction = 0.95;

    static BasisSelection with_k(int k) { return {k, 0.95}; }
    static BasisSelection with_fraction(double f) { return {std::nullopt, f}; }
};

struct BasisBuildOptions {
    BasisSelection selection;
    std::string class_name = "object";
    std::vector<std::string> keypoint_names;
    // Rigid + scale alignment of the training models before PCA.
    bool prealign = false;
};

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> flatten(const PointMatrix3 &m) {
    return {m.data(), m.size()};
}

inline Eigen::Vector3d centroid(const PointMatrix3 &m) { return m.rowwise().mean(); }

} // namespace detail

// Generalized Procrustes alignment (rotation, translation, uniform scale)
// of every model onto the evolving mean. The first model fixes the frame
// and scale.
inline std::vector<PointMatrix3> align_models(const std::vector<PointMatrix3> &models,
                                              int iterations = 10) {
    detail::require(!models.empty(), "align_models: no models");
    const auto p = models.front().cols();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);

    PointMatrix3 reference = models.front().colwise() - detail::centroid(models.front());
    const double ref_norm = reference.norm();
    std::vector<PointMatrix3> aligned(models.size());
    for (int it = 0; it < iterations; ++it) {
        for (size_t m = 0; m < models.size(); ++m) {
            const PointMatrix3 centered = models[m].colwise() - detail::centroid(models[m]);
            const Rotation3 r = weighted_procrustes(reference, centered, ones);
            const PointMatrix3 rotated = r.matrix() * centered;
            const double denom = centered.squaredNorm();
            const double scale = denom > 0.0 ? (reference.cwiseProduct(rotated)).sum() / denom : 1.0;
            aligned[m] = scale * rotated;
        }
        PointMatrix3 next = PointMatrix3::Zero(3, p);
        for (const auto &a : aligned)
            next += a;
        next /= static_cast<double>(aligned.size());
        const double n = next.norm();
        if (n > 0.0)
            next *= ref_norm / n;
        reference = next;
    }
    const Eigen::Vector3d origin = detail::centroid(models.front());
    for (auto &a : aligned)
        a.colwise() += origin;
    return aligned;
}

inline ShapeBasis build_basis(const std::vector<PointMatrix3> &input_models,
                              const BasisBuildOptions &options = {}) {
    if (input_models.size() < 2)
        throw InvalidArgument("build_basis: at least 2 models are required");
    const auto p = input_models.front().cols();
    detail::require(p >= 1, "build_basis: models must have at least one keypoint");
    for (const auto &m : input_models) {
        detail::require_dims(m.cols() == p, "build_basis: inconsistent keypoint count across models");
        detail::require(m.allFinite(), "build_basis: non-finite model coordinates");
    }
    const auto &sel = options.selection;
    if (!sel.fixed_k)
        detail::require(sel.variance_fraction > 0.0 && sel.variance_fraction <= 1.0,
                        "build_basis: variance fraction must lie in (0, 1]");
    const auto n_models = static_cast<Eigen::Index>(input_models.size());
    if (sel.fixed_k)
        detail::require(*sel.fixed_k >= 0 && *sel.fixed_k <= n_models - 1,
                        "build_basis: k must lie in [0, number of models - 1]");

    const std::vector<PointMatrix3> models =
        options.prealign ? align_models(input_models) : input_models;

    const Eigen::Index dim = 3 * p;
    Eigen::MatrixXd data(n_models, dim);
    for (Eigen::Index n = 0; n < n_models; ++n)
        data.row(n) = detail::flatten(models[static_cast<size_t>(n)]).transpose();
    const Eigen::RowVectorXd mean_row = data.colwise().mean();
    data.rowwise() -= mean_row;

    ShapeBasis basis;
    basis.class_name = options.class_name;
    basis.keypoint_names = options.keypoint_names;
    basis.mean = Eigen::Map<const PointMatrix3>(mean_row.data(), 3, p);
    basis.total_variance = data.squaredNorm() / static_cast<double>(n_models);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
    const Eigen::VectorXd variances =
        svd.singularValues().array().square() / static_cast<double>(n_models);

    // Numerical rank of the centered data.
    const double scale2 = basis.mean.squaredNorm() / static_cast<double>(dim);
    const double floor = std::max(variances.size() > 0 ? 1e-12 * variances(0) : 0.0,
                                  1e-24 * std::max(scale2, 1e-300));
    Eigen::Index rank = 0;
    while (rank < variances.size() && variances(rank) > floor)
        ++rank;

    Eigen::Index k = 0;
    if (sel.fixed_k) {
        k = std::min<Eigen::Index>(*sel.fixed_k, rank);
    } else if (rank > 0) {
        double cum = 0.0;
        while (k < rank) {
            cum += variances(k);
            ++k;
            if (cum / basis.total_variance >= sel.variance_fraction - 1e-12)
                break;
        }
    }

    basis.eigenvalues = variances.head(k);
    basis.modes.reserve(static_cast<size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd v = svd.matrixV().col(j);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0)
            v = -v;
        basis.modes.emplace_back(Eigen::Map<const PointMatrix3>(v.data(), 3, p));
    }
    return basis;
}

inline PointMatrix3 compose_shape(const ShapeBasis &basis, const ShapeCoefficients &c) {
    detail::require_dims(c.size() == basis.num_modes(),
                         "compose_shape: coefficient count differs from the number of modes");
    PointMatrix3 shape = basis.mean;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        shape += c(j) * basis.modes[static_cast<size_t>(j)];
    return shape;
}

// Least-squares coefficients of `shape` in the (orthonormal) mode basis.
inline ShapeCoefficients project_shape(const ShapeBasis &basis, const PointMatrix3 &shape) {
    detail::require_dims(shape.cols() == basis.mean.cols(),
                         "project_shape: shape has wrong point count");
    const PointMatrix3 delta = shape - basis.mean;
    ShapeCoefficients c(basis.num_modes());
    for (int j = 0; j < basis.num_modes(); ++j)
        c(j) = detail::flatten(basis.modes[static_cast<size_t>(j)]).dot(detail::flatten(delta));
    return c;
}

// Cumulative fraction of total variance explained by the first 1..k modes.
inline Eigen::VectorXd variance_explained(const ShapeBasis &basis) {
    if (basis.eigenvalues.size() == 0 || basis.eigenvalues.maxCoeff() <= 0.0)
        throw InvalidArgument("variance_explained: no positive eigenvalue, fraction undefined");
    const double total = std::max(basis.total_variance, basis.eigenvalues.sum());
    Eigen::VectorXd out(basis.eigenvalues.size());
    double cum = 0.0;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        cum += basis.eigenvalues(j);
        out(j) = std::min(cum / total, 1.0);
    }
    return out;
}

// Largest pairwise distance between keypoints.
inline double shape_diameter(const PointMatrix3 &shape) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < shape.cols(); ++i)
        for (Eigen::Index j = i + 1; j < shape.cols(); ++j)
            best = std::max(best, (shape.col(i) - shape.col(j)).norm());
    return best;
}

} // namespace kpose
