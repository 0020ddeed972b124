#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kpose/error.hpp"

namespace kpose {

using PointMatrix3 = Eigen::Matrix3Xd;
using PointMatrix2 = Eigen::Matrix2Xd;

inline constexpr double kRotationTolerance = 1e-9;

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

inline Eigen::Matrix3d hat(const Eigen::Vector3d &v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

inline Eigen::Vector3d vee(const Eigen::Matrix3d &m) {
    return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

// Element of SO(3). Construction from a raw matrix validates orthonormality
// and orientation, so a Rotation3 in hand is always a proper rotation.
class Rotation3 {
  public:
    Rotation3() : m_(Eigen::Matrix3d::Identity()) {}

    static bool is_rotation(const Eigen::Matrix3d &m, double tol = kRotationTolerance) {
        if (!m.allFinite())
            return false;
        const Eigen::Matrix3d gram = m.transpose() * m;
        if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
            return false;
        return std::abs(m.determinant() - 1.0) <= tol;
    }

    static Rotation3 from_matrix(const Eigen::Matrix3d &m, double tol = kRotationTolerance) {
        if (!is_rotation(m, tol))
            throw InvalidRotation("matrix is not a proper rotation (R^T R != I or det != 1)");
        return Rotation3(m);
    }

    static Rotation3 identity() { return Rotation3(); }

    const Eigen::Matrix3d &matrix() const { return m_; }
    Rotation3 transpose() const { return Rotation3(m_.transpose()); }
    Rotation3 operator*(const Rotation3 &other) const { return Rotation3(m_ * other.m_); }
    Eigen::Vector3d operator*(const Eigen::Vector3d &v) const { return m_ * v; }

  private:
    explicit Rotation3(const Eigen::Matrix3d &m) : m_(m) {}
    friend Rotation3 so3_exp(const Eigen::Vector3d &omega);
    friend Rotation3 project_to_so3(const Eigen::Matrix3d &m);

    Eigen::Matrix3d m_;
};

// First two rows of a rotation: a 2x3 matrix with orthonormal rows.
class StiefelRows2x3 {
  public:
    StiefelRows2x3() : m_(Eigen::Matrix<double, 2, 3>::Identity()) {}

    static bool is_stiefel(const Eigen::Matrix<double, 2, 3> &m, double tol = kRotationTolerance) {
        if (!m.allFinite())
            return false;
        const Eigen::Matrix2d gram = m * m.transpose();
        return (gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= tol;
    }

    static StiefelRows2x3 from_matrix(const Eigen::Matrix<double, 2, 3> &m,
                                      double tol = kRotationTolerance) {
        if (!is_stiefel(m, tol))
            throw InvalidRotation("matrix rows are not orthonormal");
        StiefelRows2x3 out;
        out.m_ = m;
        return out;
    }

    static StiefelRows2x3 from_rotation(const Rotation3 &r) {
        StiefelRows2x3 out;
        out.m_ = r.matrix().topRows<2>();
        return out;
    }

    const Eigen::Matrix<double, 2, 3> &matrix() const { return m_; }

    // Implied third row of the completing rotation.
    Eigen::Vector3d third_row() const {
        return Eigen::Vector3d(m_.row(0)).cross(Eigen::Vector3d(m_.row(1)));
    }

    // Completes to a proper rotation with third row = row0 x row1.
    Rotation3 lift() const {
        Eigen::Matrix3d r;
        r.topRows<2>() = m_;
        r.row(2) = third_row().transpose();
        return Rotation3::from_matrix(r, 1e-8);
    }

  private:
    Eigen::Matrix<double, 2, 3> m_;
};

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    double skew = 0.0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
            throw InvalidArgument("camera intrinsics require fx > 0 and fy > 0");
        if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(skew))
            throw InvalidArgument("camera intrinsics must be finite");
    }

    // Representative focal length used when a single scale is needed.
    double mean_focal() const { return 0.5 * (fx + fy); }
};

inline Rotation3 so3_exp(const Eigen::Vector3d &omega) {
    const double theta2 = omega.squaredNorm();
    const double theta = std::sqrt(theta2);
    const Eigen::Matrix3d k = hat(omega);
    double a, b;
    if (theta < 1e-4) {
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Rotation3(Eigen::Matrix3d::Identity() + a * k + b * k * k);
}

// Rotation vector (axis * angle) with angle in [0, pi].
inline Eigen::Vector3d so3_log(const Rotation3 &rotation) {
    const Eigen::Matrix3d &r = rotation.matrix();
    const Eigen::Vector3d v = 0.5 * vee(r);  // sin(theta) * axis
    const double sin_theta = v.norm();
    const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
    const double theta = std::atan2(sin_theta, cos_theta);

    if (theta < 1e-5)
        return v * (1.0 + theta * theta / 6.0);
    if (cos_theta > -0.7)
        return v * (theta / sin_theta);

    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part (1 - cos) a a^T using its largest diagonal pivot.
    const Eigen::Matrix3d b =
        0.5 * (r + r.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
    Eigen::Index j = 0;
    b.diagonal().maxCoeff(&j);
    Eigen::Vector3d axis = b.col(j).normalized();
    if (axis.dot(v) < 0.0)
        axis = -axis;
    return theta * axis;
}

// ||log(R1^T R2)||_F / sqrt(2), the angle of the relative rotation.
inline double geodesic_distance(const Rotation3 &r1, const Rotation3 &r2) {
    return so3_log(r1.transpose() * r2).norm();
}

inline double geodesic_distance(const Eigen::Matrix3d &r1, const Eigen::Matrix3d &r2) {
    return geodesic_distance(Rotation3::from_matrix(r1), Rotation3::from_matrix(r2));
}

// Closest rotation in Frobenius norm. Throws DegenerateGeometry when the
// minimizer is not unique.
inline Rotation3 project_to_so3(const Eigen::Matrix3d &m) {
    if (!m.allFinite())
        throw InvalidArgument("project_to_so3: matrix has non-finite entries");
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    const Eigen::Matrix3d &u = svd.matrixU();
    const Eigen::Matrix3d &v = svd.matrixV();
    const double sign = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    const double tol = 1e-10 * std::max(sv(0), std::numeric_limits<double>::min());
    const bool tail_tied = sv(1) - sv(2) <= tol;
    if (sv(0) <= std::numeric_limits<double>::min() || (tail_tied && (sign < 0.0 || sv(2) <= tol)))
        throw DegenerateGeometry(
            "project_to_so3: ambiguous projection (repeated smallest singular values)");

    Eigen::Matrix3d r = u * Eigen::Vector3d(1.0, 1.0, sign).asDiagonal() * v.transpose();
    return Rotation3(r);
}

// argmin_R sum_i w_i ||a_i - R b_i||^2 over SO(3).
inline Rotation3 weighted_procrustes(const PointMatrix3 &a, const PointMatrix3 &b,
                                     const Eigen::VectorXd &w) {
    detail::require_dims(a.cols() == b.cols() && a.cols() == w.size(),
                         "weighted_procrustes: a, b and w must have the same number of points");
    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    int positive = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w(i) >= 0.0) || !std::isfinite(w(i)))
            throw InvalidArgument("weighted_procrustes: weights must be finite and nonnegative");
        if (w(i) == 0.0)
            continue;
        ++positive;
        cross += w(i) * a.col(i) * b.col(i).transpose();
    }
    if (positive < 3)
        throw DegenerateGeometry("weighted_procrustes: fewer than 3 positively weighted points");
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross);
    const Eigen::Vector3d sv = svd.singularValues();
    if (sv(1) <= 1e-10 * sv(0))
        throw DegenerateGeometry("weighted_procrustes: collinear or degenerate point configuration");
    return project_to_so3(cross);
}

// s * Rbar * S + Tbar * 1^T
inline PointMatrix2 project_weak(double s, const StiefelRows2x3 &rbar, const Eigen::Vector2d &tbar,
                                 const PointMatrix3 &shape) {
    PointMatrix2 out = s * rbar.matrix() * shape;
    out.colwise() += tbar;
    return out;
}

// Pixel coordinates -> normalized homogeneous coordinates (x_n, y_n, 1).
inline PointMatrix3 normalize_keypoints(const PointMatrix2 &pixels, const CameraIntrinsics &k) {
    k.validate();
    PointMatrix3 out(3, pixels.cols());
    for (Eigen::Index i = 0; i < pixels.cols(); ++i) {
        const double yn = (pixels(1, i) - k.cy) / k.fy;
        const double xn = (pixels(0, i) - k.cx - k.skew * yn) / k.fx;
        out.col(i) << xn, yn, 1.0;
    }
    return out;
}

inline PointMatrix2 denormalize_keypoints(const PointMatrix3 &normalized, const CameraIntrinsics &k) {
    k.validate();
    PointMatrix2 out(2, normalized.cols());
    for (Eigen::Index i = 0; i < normalized.cols(); ++i) {
        const double xn = normalized(0, i) / normalized(2, i);
        const double yn = normalized(1, i) / normalized(2, i);
        out.col(i) << k.fx * xn + k.skew * yn + k.cx, k.fy * yn + k.cy;
    }
    return out;
}

// Pinhole projection of camera-frame points to pixels.
inline PointMatrix2 project_perspective(const Rotation3 &r, const Eigen::Vector3d &t,
                                        const PointMatrix3 &shape, const CameraIntrinsics &k) {
    PointMatrix3 cam = r.matrix() * shape;
    cam.colwise() += t;
    return denormalize_keypoints(cam, k);
}

} // namespace kpose
