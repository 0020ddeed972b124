#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the solver code paths it is compared against.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "kpose/kpose.hpp"

namespace oracle {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Rodrigues rotation from axis and angle, written from scratch.
inline Mat3 axis_angle(Vec3 axis, double angle) {
    axis.normalize();
    Mat3 k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

// Rotation angle of R1^T R2 from the trace formula.
inline double angle_between(const Mat3 &r1, const Mat3 &r2) {
    const double c = std::clamp(((r1.transpose() * r2).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

// Uniform random rotation from a normalized Gaussian quaternion.
inline Mat3 random_rotation(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline kpose::Rotation3 random_rotation3(std::mt19937_64 &rng) {
    return kpose::Rotation3::from_matrix(random_rotation(rng), 1e-9);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols,
                                     double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            m(r, c) = n(rng);
    return m;
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Weighted alignment cost sum_i w_i ||a_i - R b_i||^2.
inline double alignment_cost(const Mat3 &r, const kpose::PointMatrix3 &a, const kpose::PointMatrix3 &b,
                             const Eigen::VectorXd &w) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.cols(); ++i)
        acc += w(i) * (a.col(i) - r * b.col(i)).squaredNorm();
    return acc;
}

// Minimum of `cost` over `samples` uniformly drawn rotations.
inline double brute_force_min(const std::function<double(const Mat3 &)> &cost, int samples,
                              std::mt19937_64 &rng) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s)
        best = std::min(best, cost(random_rotation(rng)));
    return best;
}

// Naive per-keypoint weak-perspective cost.
inline double naive_wp_cost(const kpose::KeypointObservations &obs, const kpose::ShapeBasis &basis,
                            double s, const Eigen::Matrix<double, 2, 3> &rbar, const Eigen::Vector2d &tbar,
                            const Eigen::VectorXd &c, double lambda) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < obs.points.cols(); ++i) {
        Vec3 si = basis.mean.col(i);
        for (int j = 0; j < c.size(); ++j)
            si += c(j) * basis.modes[static_cast<size_t>(j)].col(i);
        const Eigen::Vector2d r = obs.points.col(i) - s * rbar * si - tbar;
        acc += obs.confidence(i) / 2.0 * r.squaredNorm();
    }
    return acc + lambda / 2.0 * c.squaredNorm();
}

// Naive per-keypoint full-perspective cost with pixels converted to rays by
// the textbook inverse of K.
inline double naive_fp_cost(const kpose::KeypointObservations &obs, const kpose::CameraIntrinsics &k,
                            const kpose::ShapeBasis &basis, const Mat3 &r, const Vec3 &t,
                            const Eigen::VectorXd &c, const Eigen::VectorXd &z, double lambda) {
    Mat3 kmat;
    kmat << k.fx, k.skew, k.cx, 0, k.fy, k.cy, 0, 0, 1;
    const Mat3 kinv = kmat.inverse();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < obs.points.cols(); ++i) {
        Vec3 si = basis.mean.col(i);
        for (int j = 0; j < c.size(); ++j)
            si += c(j) * basis.modes[static_cast<size_t>(j)].col(i);
        const Vec3 ray = kinv * Vec3(obs.points(0, i), obs.points(1, i), 1.0);
        acc += obs.confidence(i) / 2.0 * (z(i) * ray - r * si - t).squaredNorm();
    }
    return acc + lambda / 2.0 * c.squaredNorm();
}

// Central difference of f along a direction.
inline double central_difference(const std::function<double(double)> &f, double h) {
    return (f(h) - f(-h)) / (2.0 * h);
}

// Largest principal angle between the column spaces of a and b.
inline double max_principal_angle(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                               Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                               Eigen::MatrixXd::Identity(b.rows(), b.cols());
    const Eigen::MatrixXd residual = qb - qa * (qa.transpose() * qb);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues();
    return std::asin(std::clamp(sv.maxCoeff(), 0.0, 1.0));
}

inline double rotation_error_deg(const kpose::Rotation3 &a, const kpose::Rotation3 &b) {
    return angle_between(a.matrix(), b.matrix()) * 180.0 / std::numbers::pi;
}

} // namespace oracle
