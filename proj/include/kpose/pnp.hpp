#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"

namespace kpose {

// Rigid-model PnP baseline: DLT on normalized coordinates, projected to
// SO(3), then Levenberg-Marquardt on the unweighted pixel reprojection error.
struct PnPEstimate {
    Rotation3 rotation;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double reprojection_rmse = 0.0;
    double initial_rmse = 0.0;  // after DLT, before refinement
    int iterations = 0;
};

struct PnPOptions {
    double initial_damping = 1e-3;
    int max_iterations = 100;
};

namespace detail {

inline Eigen::VectorXd reprojection_residuals(const Eigen::Matrix3d &r, const Eigen::Vector3d &t,
                                              const PointMatrix3 &points3d, const PointMatrix2 &points2d,
                                              const CameraIntrinsics &k) {
    const auto p = points3d.cols();
    Eigen::VectorXd res(2 * p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Vector3d pc = r * points3d.col(i) + t;
        const double u = k.fx * pc.x() / pc.z() + k.skew * pc.y() / pc.z() + k.cx;
        const double v = k.fy * pc.y() / pc.z() + k.cy;
        res(2 * i) = u - points2d(0, i);
        res(2 * i + 1) = v - points2d(1, i);
    }
    return res;
}

inline double rmse(const Eigen::VectorXd &res) {
    return std::sqrt(res.squaredNorm() / (0.5 * static_cast<double>(res.size())));
}

// Similarity transform that centers points and scales their mean distance
// from the origin to sqrt(dim).
template <int Dim>
Eigen::Matrix<double, Dim + 1, Dim + 1> hartley_normalizer(const Eigen::Matrix<double, Dim, Eigen::Dynamic> &pts) {
    const Eigen::Matrix<double, Dim, 1> mean = pts.rowwise().mean();
    const double mean_dist = (pts.colwise() - mean).colwise().norm().mean();
    const double scale = mean_dist > 0.0 ? std::sqrt(static_cast<double>(Dim)) / mean_dist : 1.0;
    Eigen::Matrix<double, Dim + 1, Dim + 1> t = Eigen::Matrix<double, Dim + 1, Dim + 1>::Identity();
    t.template topLeftCorner<Dim, Dim>() *= scale;
    t.template topRightCorner<Dim, 1>() = -scale * mean;
    return t;
}

} // namespace detail

inline PnPEstimate solve_pnp(const PointMatrix3 &points3d, const PointMatrix2 &points2d,
                             const CameraIntrinsics &intrinsics, const PnPOptions &opts = {}) {
    intrinsics.validate();
    detail::require_dims(points3d.cols() == points2d.cols(), "solve_pnp: 3D and 2D point counts differ");
    const auto p = points3d.cols();
    if (p < 6)
        throw InsufficientConstraints("solve_pnp: at least 6 points are required for the DLT");
    detail::require(points3d.allFinite() && points2d.allFinite(), "solve_pnp: non-finite input");

    {
        const PointMatrix3 centered = points3d.colwise() - points3d.rowwise().mean();
        const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centered).singularValues().head<3>();
        if (sv(2) < 1e-6 * sv(0))
            throw DegenerateGeometry("solve_pnp: coplanar 3D points are not supported by the DLT baseline");
    }

    const PointMatrix2 uv = normalize_keypoints(points2d, intrinsics).topRows<2>();
    const Eigen::Matrix4d t3 = detail::hartley_normalizer<3>(points3d);
    const Eigen::Matrix3d t2 = detail::hartley_normalizer<2>(uv);

    Eigen::MatrixXd a(2 * p, 12);
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Vector4d x = t3 * points3d.col(i).homogeneous();
        const Eigen::Vector3d m = t2 * uv.col(i).homogeneous();
        a.row(2 * i) << x.transpose(), Eigen::RowVector4d::Zero(), -m.x() * x.transpose();
        a.row(2 * i + 1) << Eigen::RowVector4d::Zero(), x.transpose(), -m.y() * x.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> pn;
    pn.row(0) = h.segment<4>(0).transpose();
    pn.row(1) = h.segment<4>(4).transpose();
    pn.row(2) = h.segment<4>(8).transpose();
    Eigen::Matrix<double, 3, 4> proj = t2.inverse() * pn * t3;

    // Fix the overall sign so that most points lie in front of the camera.
    const Eigen::VectorXd depth = (proj.row(2) * points3d.colwise().homogeneous()).transpose();
    if ((depth.array() > 0.0).count() * 2 < p)
        proj = -proj;
    const Eigen::Matrix3d lin = proj.leftCols<3>();
    const double scale = Eigen::JacobiSVD<Eigen::Matrix3d>(lin).singularValues().mean();
    if (!(scale > 0.0))
        throw DegenerateGeometry("solve_pnp: DLT produced a singular camera matrix");

    Eigen::Matrix3d r = project_to_so3(lin / scale).matrix();
    Eigen::Vector3d t = proj.col(3) / scale;

    Eigen::VectorXd res = detail::reprojection_residuals(r, t, points3d, points2d, intrinsics);
    double cost = res.squaredNorm();
    PnPEstimate out;
    out.initial_rmse = detail::rmse(res);

    double damping = opts.initial_damping;
    int it = 0;
    for (it = 0; it < opts.max_iterations; ++it) {
        Eigen::MatrixXd jac(2 * p, 6);
        for (Eigen::Index i = 0; i < p; ++i) {
            const Eigen::Vector3d rx = r * points3d.col(i);
            const Eigen::Vector3d pc = rx + t;
            const double iz = 1.0 / pc.z();
            Eigen::Matrix<double, 2, 3> dproj;
            dproj << intrinsics.fx * iz, intrinsics.skew * iz,
                -(intrinsics.fx * pc.x() + intrinsics.skew * pc.y()) * iz * iz, 0.0, intrinsics.fy * iz,
                -intrinsics.fy * pc.y() * iz * iz;
            jac.block<2, 3>(2 * i, 0) = -dproj * hat(rx);
            jac.block<2, 3>(2 * i, 3) = dproj;
        }
        const Eigen::Matrix<double, 6, 6> hess = jac.transpose() * jac;
        const Eigen::Matrix<double, 6, 1> grad = jac.transpose() * res;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-14 * std::max(1.0, cost))
            break;

        bool accepted = false;
        while (!accepted && damping < 1e16) {
            const Eigen::Matrix<double, 6, 1> step =
                -(hess + damping * Eigen::Matrix<double, 6, 6>::Identity()).ldlt().solve(grad);
            const Eigen::Matrix3d r_new = (so3_exp(step.head<3>()).matrix() * r);
            const Eigen::Vector3d t_new = t + step.tail<3>();
            const Eigen::VectorXd res_new =
                detail::reprojection_residuals(r_new, t_new, points3d, points2d, intrinsics);
            const double cost_new = res_new.squaredNorm();
            const bool in_front = ((r_new * points3d).colwise() + t_new).row(2).minCoeff() > 0.0;
            if (in_front && std::isfinite(cost_new) && cost_new < cost) {
                const double decrease = cost - cost_new;
                r = project_to_so3(r_new).matrix();
                t = t_new;
                res = res_new;
                cost = cost_new;
                damping = std::max(damping / 10.0, 1e-12);
                accepted = true;
                if (decrease <= 1e-15 * cost || step.norm() < 1e-14)
                    it = opts.max_iterations;
            } else {
                damping *= 10.0;
            }
        }
        if (!accepted)
            break;
    }

    out.rotation = Rotation3::from_matrix(r);
    out.translation = t;
    out.reprojection_rmse = detail::rmse(res);
    out.iterations = std::min(it, opts.max_iterations);
    return out;
}

} // namespace kpose
