#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <string>

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"
#include "kpose/observations.hpp"
#include "kpose/shape_basis.hpp"
#include "kpose/wp_solver.hpp"

namespace kpose {

enum class ImageUnits { pixels, normalized };

struct FPInit {
    Rotation3 rotation;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    ShapeCoefficients c;  // empty means the mean shape
};

// Full-perspective fit: z_i * w~_i ~ R S_i(c) + T for normalized rays w~_i.
struct FPEstimate {
    Rotation3 rotation;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    ShapeCoefficients c;
    Eigen::VectorXd depths;
    double lambda = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
    FitTrace trace;
};

// `rotation` is with respect to a right perturbation R * exp(hat(omega)).
struct FPGradient {
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::VectorXd c;
    Eigen::VectorXd depths;
};

namespace detail {

inline void check_fp_dims(const KeypointObservations &obs, const ShapeBasis &basis,
                          const FPEstimate &theta) {
    check_wp_dims(obs, basis, theta.c);
    detail::require_dims(theta.depths.size() == obs.size(), "depth count differs from keypoint count");
}

} // namespace detail

// 1/2 ||(W~ Z - R S - T 1^T) D^1/2||_F^2 + lambda/2 ||c||^2
inline double cost_fp(const KeypointObservations &obs, const CameraIntrinsics &intrinsics,
                      const ShapeBasis &basis, const FPEstimate &theta, double lambda) {
    detail::check_fp_dims(obs, basis, theta);
    const PointMatrix3 rays = normalize_keypoints(obs.points, intrinsics);
    const PointMatrix3 shape = compose_shape(basis, theta.c);
    const Eigen::Matrix3d &r = theta.rotation.matrix();
    double data = 0.0;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double d = obs.confidence(i);
        if (d == 0.0)
            continue;
        const Eigen::Vector3d res = theta.depths(i) * rays.col(i) - r * shape.col(i) - theta.translation;
        data += d * res.squaredNorm();
    }
    return 0.5 * data + 0.5 * lambda * theta.c.squaredNorm();
}

inline FPGradient cost_fp_gradient(const KeypointObservations &obs, const CameraIntrinsics &intrinsics,
                                   const ShapeBasis &basis, const FPEstimate &theta, double lambda) {
    detail::check_fp_dims(obs, basis, theta);
    const PointMatrix3 rays = normalize_keypoints(obs.points, intrinsics);
    const PointMatrix3 shape = compose_shape(basis, theta.c);
    const Eigen::Matrix3d &r = theta.rotation.matrix();
    FPGradient g;
    g.c = lambda * theta.c;
    g.depths = Eigen::VectorXd::Zero(obs.size());
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double d = obs.confidence(i);
        if (d == 0.0)
            continue;
        const Eigen::Vector3d si = shape.col(i);
        const Eigen::Vector3d res = theta.depths(i) * rays.col(i) - r * si - theta.translation;
        g.depths(i) = d * rays.col(i).dot(res);
        g.translation -= d * res;
        g.rotation -= d * si.cross(r.transpose() * res);
        for (int j = 0; j < basis.num_modes(); ++j)
            g.c(j) -= d * res.dot(r * basis.modes[static_cast<size_t>(j)].col(i));
    }
    return g;
}

// Interprets the weak-perspective scale as inverse depth. Pixel-unit
// estimates are first converted to normalized image units.
inline FPInit wp_to_fp_init(const WPEstimate &wp, const CameraIntrinsics &intrinsics,
                            ImageUnits units = ImageUnits::pixels) {
    detail::require(wp.s > 0.0, "wp_to_fp_init: weak-perspective scale must be positive");
    double s = wp.s;
    Eigen::Vector2d center = wp.tbar;
    if (units == ImageUnits::pixels) {
        PointMatrix2 px(2, 1);
        px.col(0) = wp.tbar;
        center = normalize_keypoints(px, intrinsics).col(0).head<2>();
        s = wp.s / intrinsics.mean_focal();
    }
    FPInit init;
    init.rotation = wp.rbar.lift();
    init.translation << center / s, 1.0 / s;
    init.c = wp.c;
    return init;
}

namespace detail {

// Mean diagonal of the data-term Hessian in c (rotation-invariant here).
inline double fp_coefficient_curvature(const KeypointObservations &obs, const ShapeBasis &basis) {
    if (basis.num_modes() == 0)
        return 0.0;
    double acc = 0.0;
    for (const auto &mode : basis.modes)
        acc += (mode.colwise().squaredNorm().transpose().array() * obs.confidence.array()).sum();
    return acc / basis.num_modes();
}

inline bool is_coplanar(const KeypointObservations &obs, const PointMatrix3 &b0) {
    const auto mom = weighted_moments(obs, b0);
    const PointMatrix3 weighted = mom.b_centered * obs.confidence.cwiseSqrt().asDiagonal();
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixXd>(weighted).singularValues().head<3>();
    return sv(2) < 1e-6 * sv(0);
}

class FPBlockSolver {
  public:
    struct State {
        Eigen::Matrix3d r;
        Eigen::Vector3d t;
        ShapeCoefficients c;
        Eigen::VectorXd z;
    };

    FPBlockSolver(const KeypointObservations &obs, const PointMatrix3 &rays, const ShapeBasis &basis,
                  double lambda, const SolverOptions &opts)
        : obs_(obs), rays_(rays), basis_(basis), lambda_(lambda), opts_(opts) {}

    double cost(const State &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        double data = 0.0;
        for (Eigen::Index i = 0; i < obs_.size(); ++i)
            data += obs_.confidence(i) *
                    (st.z(i) * rays_.col(i) - st.r * shape.col(i) - st.t).squaredNorm();
        return 0.5 * data + 0.5 * lambda_ * st.c.squaredNorm();
    }

    FPEstimate run(const FPInit &init) {
        State st;
        st.r = init.rotation.matrix();
        st.t = init.translation;
        st.c = init.c.size() == basis_.num_modes() ? init.c : ShapeCoefficients::Zero(basis_.num_modes());
        st.z = Eigen::VectorXd::Zero(obs_.size());
        bool clamped = update_depths(st);

        FitTrace trace;
        BlockMonitor monitor(trace, opts_.record_history);
        auto cost_fn = [&](const State &s) { return cost(s); };
        double current = cost(st);
        monitor.start(current);

        int it = 0;
        bool converged = false;
        std::optional<State> last_sweep;
        double step = 1.0;
        for (it = 1; it <= opts_.max_iterations; ++it) {
            const double before = current;
            State prev = st;
            const State sweep_start = st;

            clamped = update_depths(st);
            current = monitor.update(st, prev, current, cost_fn);
            prev = st;

            update_pose(st);
            current = monitor.update(st, prev, current, cost_fn);
            prev = st;

            update_coefficients(st);
            current = monitor.update(st, prev, current, cost_fn);

            // Safeguarded extrapolation along the last sweep direction. The
            // alternation zigzags along the depth/pose valley; this shortcut
            // is kept only when it lowers the cost.
            if (last_sweep) {
                prev = st;
                State trial = extrapolate(*last_sweep, st, step);
                const bool trial_clamped = update_depths(trial);
                if (!trial_clamped && cost(trial) < current) {
                    st = trial;
                    current = monitor.update(st, prev, current, cost_fn);
                    step = std::min(2.0 * step, 1e3);
                } else {
                    step = 1.0;
                }
            }
            last_sweep = sweep_start;

            if (current == 0.0 || before - current <= opts_.relative_tolerance * before) {
                converged = true;
                break;
            }
        }
        if (clamped)
            throw BehindCamera("solve_fp: a keypoint depth stays clamped at the positive floor "
                               "(reconstructed point behind the camera)");

        FPEstimate out;
        out.rotation = project_to_so3(st.r);
        out.translation = st.t;
        out.c = st.c;
        out.depths = st.z;
        out.lambda = lambda_;
        out.final_cost = current;
        out.iterations = std::min(it, opts_.max_iterations);
        out.converged = converged;
        out.trace = std::move(trace);
        return out;
    }

  private:
    // from + (1 + step) * (to - from) on R x R^3 x R^k, rotations along the
    // geodesic.
    State extrapolate(const State &from, const State &to, double step) const {
        State out = to;
        const Eigen::Vector3d w = so3_log(project_to_so3(to.r * from.r.transpose()));
        out.r = (so3_exp(step * w) * project_to_so3(to.r)).matrix();
        out.t = to.t + step * (to.t - from.t);
        out.c = to.c + step * (to.c - from.c);
        return out;
    }

    // Per-point closed form, clamped to a positive floor. Returns whether any
    // depth hit the floor.
    bool update_depths(State &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        const double floor = 1e-6 * st.t.norm();
        bool clamped = false;
        for (Eigen::Index i = 0; i < obs_.size(); ++i) {
            const Eigen::Vector3d ray = rays_.col(i);
            const double z = ray.dot(st.r * shape.col(i) + st.t) / ray.squaredNorm();
            if (z < floor) {
                st.z(i) = floor;
                clamped = true;
            } else {
                st.z(i) = z;
            }
        }
        return clamped;
    }

    // Joint (R, T) minimizer: Procrustes on weighted-centered point sets.
    void update_pose(State &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        PointMatrix3 lifted(3, obs_.size());
        for (Eigen::Index i = 0; i < obs_.size(); ++i)
            lifted.col(i) = st.z(i) * rays_.col(i);
        const Eigen::VectorXd &d = obs_.confidence;
        const double total = d.sum();
        const Eigen::Vector3d q_mean = lifted * d / total;
        const Eigen::Vector3d s_mean = shape * d / total;
        const Rotation3 r =
            weighted_procrustes(lifted.colwise() - q_mean, shape.colwise() - s_mean, d);
        st.r = r.matrix();
        st.t = q_mean - st.r * s_mean;
    }

    void update_coefficients(State &st) const {
        const int k = basis_.num_modes();
        if (k == 0)
            return;
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < obs_.size(); ++i) {
            const double d = obs_.confidence(i);
            const Eigen::Matrix3Xd jac = st.r * basis_.mode_block(i);
            const Eigen::Vector3d r0 = st.z(i) * rays_.col(i) - st.t - st.r * basis_.mean.col(i);
            normal += d * jac.transpose() * jac;
            rhs += d * jac.transpose() * r0;
        }
        st.c = solve_ridge(normal, rhs, lambda_);
    }

    const KeypointObservations &obs_;
    const PointMatrix3 &rays_;
    const ShapeBasis &basis_;
    double lambda_;
    const SolverOptions &opts_;
};

} // namespace detail

// Alternating minimization over depths, pose and shape coefficients. Without
// an explicit `init`, both weak-perspective reflection candidates (fitted on
// normalized coordinates) seed a run and the lower final cost wins.
inline FPEstimate solve_fp(const KeypointObservations &obs, const CameraIntrinsics &intrinsics,
                           const ShapeBasis &basis, const SolverOptions &opts = {},
                           const std::optional<FPInit> &init = std::nullopt) {
    opts.validate();
    obs.validate();
    basis.validate();
    intrinsics.validate();
    detail::require_dims(obs.size() == basis.num_keypoints(),
                         "solve_fp: observations and basis disagree on the number of keypoints");
    if (obs.num_active() < 4)
        throw InsufficientConstraints("solve_fp: fewer than 4 keypoints with positive confidence");

    const auto idx = detail::active_indices(obs.confidence);
    const KeypointObservations active = detail::select(obs, idx);
    const ShapeBasis active_basis = detail::select(basis, idx);
    const PointMatrix3 rays = normalize_keypoints(active.points, intrinsics);
    const double lambda =
        opts.lambda ? *opts.lambda : 1e-2 * detail::fp_coefficient_curvature(active, active_basis);

    std::vector<FPInit> starts;
    if (init) {
        starts.push_back(*init);
    } else {
        // The weak-perspective stage runs in normalized image units with its
        // own scale-appropriate lambda.
        KeypointObservations normalized = active;
        normalized.points = rays.topRows<2>();
        SolverOptions wp_opts = opts;
        wp_opts.lambda.reset();
        wp_opts.record_history = false;
        for (const auto &cand : solve_wp_candidates(normalized, active_basis, wp_opts))
            starts.push_back(wp_to_fp_init(cand, intrinsics, ImageUnits::normalized));
    }

    detail::FPBlockSolver solver(active, rays, active_basis, lambda, opts);
    std::optional<FPEstimate> best;
    std::optional<BehindCamera> failure;
    for (const auto &start : starts) {
        try {
            FPEstimate est = solver.run(start);
            if (!best || est.final_cost < best->final_cost)
                best = std::move(est);
        } catch (const BehindCamera &e) {
            failure = e;
        }
    }
    if (!best)
        throw *failure;

    FPEstimate out = std::move(*best);
    // Report depths for every keypoint, including zero-confidence ones.
    const PointMatrix3 all_rays = [&] {
        PointMatrix3 rr = PointMatrix3::Zero(3, obs.size());
        for (Eigen::Index i = 0; i < obs.size(); ++i)
            if (obs.points.col(i).allFinite())
                rr.col(i) = normalize_keypoints(obs.points.col(i), intrinsics);
        return rr;
    }();
    const PointMatrix3 shape = compose_shape(basis, out.c);
    Eigen::VectorXd depths = Eigen::VectorXd::Zero(obs.size());
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double n2 = all_rays.col(i).squaredNorm();
        if (n2 > 0.0)
            depths(i) = all_rays.col(i).dot(out.rotation.matrix() * shape.col(i) + out.translation) / n2;
    }
    for (size_t j = 0; j < idx.size(); ++j)
        depths(idx[j]) = out.depths(static_cast<Eigen::Index>(j));
    out.depths = depths;
    out.final_cost = cost_fp(obs, intrinsics, basis, out, lambda);

    if (detail::is_coplanar(active, active_basis.mean)) {
        out.converged = false;
        out.diagnostic = "coplanar keypoints: full-perspective pose is ill-posed";
    }
    return out;
}

} // namespace kpose
