#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"
#include "kpose/observations.hpp"
#include "kpose/shape_basis.hpp"

namespace kpose {

struct SolverOptions {
    // Tikhonov weight on the shape coefficients; derived per fit when unset.
    std::optional<double> lambda;
    // Spectral-norm weight of the convex initialization; derived when unset.
    std::optional<double> mu;
    int max_iterations = 500;
    double relative_tolerance = 1e-9;
    bool record_history = false;

    void validate() const {
        detail::require(max_iterations >= 1, "solver options: max_iterations must be >= 1");
        detail::require(relative_tolerance > 0.0, "solver options: relative_tolerance must be > 0");
        if (lambda)
            detail::require(*lambda >= 0.0 && std::isfinite(*lambda), "solver options: lambda must be >= 0");
        if (mu)
            detail::require(*mu >= 0.0 && std::isfinite(*mu), "solver options: mu must be >= 0");
    }
};

// Weak-perspective fit: W ~ s * Rbar * S(c) + Tbar * 1^T.
struct WPEstimate {
    double s = 1.0;
    ShapeCoefficients c;
    StiefelRows2x3 rbar;
    Eigen::Vector2d tbar = Eigen::Vector2d::Zero();
    double lambda = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    FitTrace trace;

    Rotation3 rotation() const { return rbar.lift(); }
};

// Gradient of cost_wp. `rotation` is with respect to a right perturbation
// Rbar * exp(hat(omega)) at omega = 0.
struct WPGradient {
    double s = 0.0;
    Eigen::VectorXd c;
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    Eigen::Vector2d tbar = Eigen::Vector2d::Zero();
};

namespace detail {

inline void check_wp_dims(const KeypointObservations &obs, const ShapeBasis &basis,
                          const ShapeCoefficients &c) {
    detail::require_dims(obs.points.cols() == basis.mean.cols() &&
                             obs.confidence.size() == basis.mean.cols(),
                         "observations and basis disagree on the number of keypoints");
    detail::require_dims(c.size() == basis.num_modes(),
                         "coefficient count differs from the number of basis modes");
}

} // namespace detail

// 1/2 ||(W - s Rbar S - Tbar 1^T) D^1/2||_F^2 + lambda/2 ||c||^2
inline double cost_wp(const KeypointObservations &obs, const ShapeBasis &basis,
                      const WPEstimate &theta, double lambda) {
    detail::check_wp_dims(obs, basis, theta.c);
    const PointMatrix3 shape = compose_shape(basis, theta.c);
    const Eigen::Matrix<double, 2, 3> sr = theta.s * theta.rbar.matrix();
    double data = 0.0;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double d = obs.confidence(i);
        if (d == 0.0)
            continue;
        const Eigen::Vector2d r = obs.points.col(i) - sr * shape.col(i) - theta.tbar;
        data += d * r.squaredNorm();
    }
    return 0.5 * data + 0.5 * lambda * theta.c.squaredNorm();
}

inline WPGradient cost_wp_gradient(const KeypointObservations &obs, const ShapeBasis &basis,
                                   const WPEstimate &theta, double lambda) {
    detail::check_wp_dims(obs, basis, theta.c);
    const PointMatrix3 shape = compose_shape(basis, theta.c);
    const Eigen::Matrix<double, 2, 3> &rbar = theta.rbar.matrix();
    WPGradient g;
    g.c = lambda * theta.c;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double d = obs.confidence(i);
        if (d == 0.0)
            continue;
        const Eigen::Vector3d si = shape.col(i);
        const Eigen::Vector2d proj = rbar * si;
        const Eigen::Vector2d r = obs.points.col(i) - theta.s * proj - theta.tbar;
        g.s -= d * r.dot(proj);
        g.tbar -= d * r;
        const Eigen::Vector3d back = rbar.transpose() * r;
        g.rotation -= d * theta.s * si.cross(back);
        for (int j = 0; j < basis.num_modes(); ++j)
            g.c(j) -= d * theta.s * r.dot(rbar * basis.modes[static_cast<size_t>(j)].col(i));
    }
    return g;
}

struct ConvexInitResult {
    Eigen::Matrix<double, 2, 3> m = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Vector2d tbar = Eigen::Vector2d::Zero();
    double mu = 0.0;
    double objective = 0.0;
    int iterations = 0;
    // Scale/rotation factorizations of M: the direct one and its depth-flipped
    // mirror, sorted by weak-perspective cost at c = 0 (lowest first).
    std::array<WPEstimate, 2> candidates;
};

namespace detail {

struct WeightedMoments {
    Eigen::Vector2d w_mean;
    Eigen::Vector3d b_mean;
    PointMatrix2 w_centered;
    PointMatrix3 b_centered;
    double weight_sum = 0.0;
};

inline WeightedMoments weighted_moments(const KeypointObservations &obs, const PointMatrix3 &b0) {
    WeightedMoments out;
    const Eigen::VectorXd &d = obs.confidence;
    out.weight_sum = d.sum();
    out.w_mean = Eigen::Vector2d::Zero();
    out.b_mean = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d(i) == 0.0)
            continue;
        out.w_mean += d(i) * obs.points.col(i);
        out.b_mean += d(i) * b0.col(i);
    }
    out.w_mean /= out.weight_sum;
    out.b_mean /= out.weight_sum;
    out.w_centered.resize(2, d.size());
    out.b_centered.resize(3, d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d(i) == 0.0) {
            out.w_centered.col(i).setZero();
            out.b_centered.col(i).setZero();
            continue;
        }
        out.w_centered.col(i) = obs.points.col(i) - out.w_mean;
        out.b_centered.col(i) = b0.col(i) - out.b_mean;
    }
    return out;
}

inline double weighted_frobenius(const Eigen::MatrixXd &x, const Eigen::VectorXd &d) {
    return std::sqrt((x.array().square().rowwise() * d.transpose().array()).sum());
}

// prox of tau * ||.||_2 (spectral norm): clip the largest singular values to
// a common level so that the removed mass equals tau.
inline Eigen::Matrix<double, 2, 3> prox_spectral_norm(const Eigen::Matrix<double, 2, 3> &x, double tau) {
    if (tau <= 0.0)
        return x;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d sv = svd.singularValues();
    if (sv.sum() <= tau)
        return Eigen::Matrix<double, 2, 3>::Zero();
    double level = sv(0) - tau;
    if (level < sv(1))
        level = 0.5 * (sv(0) + sv(1) - tau);
    const Eigen::Vector2d clipped = sv.cwiseMin(level);
    return svd.matrixU() * clipped.asDiagonal() * svd.matrixV().leftCols(2).transpose();
}

inline double convex_smooth(const WeightedMoments &mom, const Eigen::VectorXd &d,
                            const Eigen::Matrix<double, 2, 3> &m) {
    const PointMatrix2 r = mom.w_centered - m * mom.b_centered;
    return 0.5 * (r.array().square().rowwise() * d.transpose().array()).sum();
}

inline double spectral_norm(const Eigen::Matrix<double, 2, 3> &m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

inline void require_noncollinear_2d(const KeypointObservations &obs) {
    const Eigen::VectorXd &d = obs.confidence;
    const double total = d.sum();
    if (!(total > 0.0))
        throw InsufficientConstraints("all keypoint confidences are zero");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d(i) > 0.0)
            mean += d(i) * obs.points.col(i);
    mean /= total;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d(i) > 0.0)
            cov += d(i) * (obs.points.col(i) - mean) * (obs.points.col(i) - mean).transpose();
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    if (!(ev(1) > 0.0) || ev(0) <= 1e-12 * ev(1))
        throw DegenerateGeometry("weighted 2D keypoints are collinear; pose is not determined");
}

} // namespace detail

// Objective of the convex initialization at (M, Tbar).
inline double convex_init_objective(const KeypointObservations &obs, const PointMatrix3 &b0,
                                    const Eigen::Matrix<double, 2, 3> &m, const Eigen::Vector2d &tbar,
                                    double mu) {
    double data = 0.0;
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const double d = obs.confidence(i);
        if (d == 0.0)
            continue;
        data += d * (obs.points.col(i) - m * b0.col(i) - tbar).squaredNorm();
    }
    return 0.5 * data + mu * detail::spectral_norm(m);
}

// Scale-free default for mu: 0.1 * ||W_c D^1/2||_F * ||B0_c D^1/2||_F with
// both matrices centered on their weighted means.
inline double default_mu(const KeypointObservations &obs, const PointMatrix3 &b0) {
    const auto mom = detail::weighted_moments(obs, b0);
    return 0.1 * detail::weighted_frobenius(mom.w_centered, obs.confidence) *
           detail::weighted_frobenius(mom.b_centered, obs.confidence);
}

// Pose-only initialization with the mean shape: minimizes
// 1/2 ||(W - M B0 - Tbar 1^T) D^1/2||_F^2 + mu ||M||_2 over unconstrained M
// by proximal gradient, then factors M ~ s * Rbar.
inline ConvexInitResult convex_init(const KeypointObservations &obs, const PointMatrix3 &b0,
                                    std::optional<double> mu_opt = std::nullopt) {
    obs.validate();
    detail::require_dims(b0.cols() == obs.size(), "convex_init: mean shape and observations differ in p");
    const Eigen::VectorXd &d = obs.confidence;
    if (obs.num_active() == 0)
        throw InsufficientConstraints("convex_init: all keypoint confidences are zero");
    if (obs.num_active() < 3)
        throw InsufficientConstraints("convex_init: fewer than 3 positively weighted keypoints");

    const auto mom = detail::weighted_moments(obs, b0);
    const Eigen::Matrix3d gram = mom.b_centered * d.asDiagonal() * mom.b_centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
    const Eigen::Vector3d gram_ev = eig.eigenvalues();
    if (!(gram_ev(2) > 0.0) || gram_ev(1) <= 1e-12 * gram_ev(2))
        throw DegenerateGeometry("convex_init: weighted mean shape is collinear");

    ConvexInitResult out;
    out.mu = mu_opt ? *mu_opt : default_mu(obs, b0);
    const double lipschitz = gram_ev(2);
    const double step = 1.0 / lipschitz;
    const Eigen::Matrix<double, 2, 3> wb = mom.w_centered * d.asDiagonal() * mom.b_centered.transpose();

    // Warm start: unregularized least squares (gram is invertible unless the
    // shape is planar; the pseudo-inverse covers that case).
    Eigen::Matrix<double, 2, 3> m =
        gram.completeOrthogonalDecomposition().solve(wb.transpose()).transpose();
    auto objective = [&](const Eigen::Matrix<double, 2, 3> &x) {
        return detail::convex_smooth(mom, d, x) + out.mu * detail::spectral_norm(x);
    };
    double f = objective(m);
    int it = 0;
    if (out.mu > 0.0) {
        for (it = 1; it <= 5000; ++it) {
            const Eigen::Matrix<double, 2, 3> grad = m * gram - wb;
            const Eigen::Matrix<double, 2, 3> next = detail::prox_spectral_norm(m - step * grad, step * out.mu);
            const double fn = objective(next);
            const double change = std::abs(f - fn);
            m = next;
            const double prev = f;
            f = fn;
            if (change <= 1e-10 * std::max(std::abs(prev), std::numeric_limits<double>::min()))
                break;
        }
    }
    out.m = m;
    out.iterations = it;
    out.tbar = mom.w_mean - m * mom.b_mean;
    out.objective = convex_init_objective(obs, b0, m, out.tbar, out.mu);

    // Factor M = U diag(sv) V^T ~ s * U V^T.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double s = std::max(svd.singularValues().mean(), std::numeric_limits<double>::min());
    const Eigen::Matrix<double, 2, 3> r1 = svd.matrixU() * svd.matrixV().leftCols(2).transpose();
    // Depth flip: mirror the object through its flattest weighted direction n,
    // Rbar' = Rbar (I - 2 n n^T); both project a planar shape identically.
    const Eigen::Vector3d n = eig.eigenvectors().col(0);
    const Eigen::Matrix<double, 2, 3> r2 = r1 * (Eigen::Matrix3d::Identity() - 2.0 * n * n.transpose());

    ShapeBasis mean_only;
    mean_only.mean = b0;
    std::array<Eigen::Matrix<double, 2, 3>, 2> rows = {r1, r2};
    std::array<double, 2> costs{};
    for (int j = 0; j < 2; ++j) {
        WPEstimate &cand = out.candidates[static_cast<size_t>(j)];
        cand.s = s;
        cand.c = ShapeCoefficients(0);
        cand.rbar = StiefelRows2x3::from_matrix(rows[static_cast<size_t>(j)], 1e-8);
        cand.tbar = mom.w_mean - s * cand.rbar.matrix() * mom.b_mean;
        costs[static_cast<size_t>(j)] = cost_wp(obs, mean_only, cand, 0.0);
        cand.final_cost = costs[static_cast<size_t>(j)];
    }
    if (costs[1] < costs[0])
        std::swap(out.candidates[0], out.candidates[1]);
    return out;
}

namespace detail {

// Mean diagonal of the data-term Hessian in c, with the rotation averaged
// out (E ||Rbar x||^2 = 2/3 ||x||^2).
inline double wp_coefficient_curvature(const KeypointObservations &obs, const ShapeBasis &basis,
                                       double s) {
    if (basis.num_modes() == 0)
        return 0.0;
    double acc = 0.0;
    for (const auto &mode : basis.modes)
        acc += (mode.colwise().squaredNorm().transpose().array() * obs.confidence.array()).sum();
    return s * s * (2.0 / 3.0) * acc / basis.num_modes();
}

class WPBlockSolver {
  public:
    WPBlockSolver(const KeypointObservations &obs, const ShapeBasis &basis, double lambda,
                  const SolverOptions &opts)
        : obs_(obs), basis_(basis), lambda_(lambda), opts_(opts) {}

    WPEstimate run(WPEstimate state) {
        state.lambda = lambda_;
        if (state.c.size() != basis_.num_modes())
            state.c = ShapeCoefficients::Zero(basis_.num_modes());
        FitTrace trace;
        BlockMonitor monitor(trace, opts_.record_history);
        auto cost = [&](const WPEstimate &st) { return cost_wp(obs_, basis_, st, lambda_); };
        double current = cost(state);
        monitor.start(current);

        int it = 0;
        bool converged = false;
        for (it = 1; it <= opts_.max_iterations; ++it) {
            const double before = current;
            WPEstimate prev = state;

            update_scale(state);
            current = monitor.update(state, prev, current, cost);
            prev = state;

            update_coefficients(state);
            current = monitor.update(state, prev, current, cost);
            prev = state;

            update_translation(state);
            current = monitor.update(state, prev, current, cost);
            prev = state;

            update_rotation(state);
            current = monitor.update(state, prev, current, cost);

            if (current == 0.0 || before - current <= opts_.relative_tolerance * before) {
                converged = true;
                break;
            }
        }
        state.iterations = std::min(it, opts_.max_iterations);
        state.converged = converged;
        state.final_cost = current;
        state.trace = std::move(trace);
        return state;
    }

  private:
    void update_scale(WPEstimate &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        const PointMatrix2 proj = st.rbar.matrix() * shape;
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < obs_.size(); ++i) {
            const double d = obs_.confidence(i);
            num += d * (obs_.points.col(i) - st.tbar).dot(proj.col(i));
            den += d * proj.col(i).squaredNorm();
        }
        if (!(den > 0.0))
            return;
        const double s_opt = num / den;
        // The constrained minimizer over s > 0 lies between s_opt and the
        // current value whenever s_opt <= 0.
        st.s = s_opt > 0.0 ? s_opt : 1e-3 * st.s;
    }

    void update_coefficients(WPEstimate &st) const {
        const int k = basis_.num_modes();
        if (k == 0)
            return;
        const Eigen::Matrix<double, 2, 3> sr = st.s * st.rbar.matrix();
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < obs_.size(); ++i) {
            const double d = obs_.confidence(i);
            const Eigen::Matrix<double, 2, Eigen::Dynamic> jac = sr * basis_.mode_block(i);
            const Eigen::Vector2d r0 = obs_.points.col(i) - st.tbar - sr * basis_.mean.col(i);
            normal += d * jac.transpose() * jac;
            rhs += d * jac.transpose() * r0;
        }
        st.c = solve_ridge(normal, rhs, lambda_);
    }

    void update_translation(WPEstimate &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        const PointMatrix2 pred = st.s * st.rbar.matrix() * shape;
        Eigen::Vector2d acc = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < obs_.size(); ++i)
            acc += obs_.confidence(i) * (obs_.points.col(i) - pred.col(i));
        st.tbar = acc / obs_.confidence.sum();
    }

    // Exact descent on the Stiefel block: lift Rbar to R in SO(3) with free
    // third-row targets, alternating the targets (closed form) with weighted
    // Procrustes. Each inner step is non-increasing in the cost.
    void update_rotation(WPEstimate &st) const {
        const PointMatrix3 shape = compose_shape(basis_, st.c);
        const PointMatrix3 scaled = st.s * shape;
        Eigen::Matrix3d r = st.rbar.lift().matrix();
        PointMatrix3 target(3, obs_.size());
        target.topRows<2>() = obs_.points.colwise() - st.tbar;
        for (int inner = 0; inner < kInnerIterations; ++inner) {
            target.row(2) = r.row(2) * scaled;
            const Eigen::Matrix3d next = weighted_procrustes(target, scaled, obs_.confidence).matrix();
            const double change = (next - r).cwiseAbs().maxCoeff();
            r = next;
            if (change < 1e-15)
                break;
        }
        st.rbar = StiefelRows2x3::from_matrix(r.topRows<2>(), 1e-8);
    }

    static constexpr int kInnerIterations = 8;

    const KeypointObservations &obs_;
    const ShapeBasis &basis_;
    double lambda_;
    const SolverOptions &opts_;
};

inline bool prefer_first(const WPEstimate &a, const WPEstimate &b) {
    const double tie = 1e-12 * std::max({std::abs(a.final_cost), std::abs(b.final_cost), 1e-300});
    if (std::abs(a.final_cost - b.final_cost) > tie)
        return a.final_cost < b.final_cost;
    return a.rbar.third_row().z() >= b.rbar.third_row().z();
}

} // namespace detail

// Both reflection candidates refined by block coordinate descent, best first.
inline std::array<WPEstimate, 2> solve_wp_candidates(const KeypointObservations &obs,
                                                     const ShapeBasis &basis,
                                                     const SolverOptions &opts = {}) {
    opts.validate();
    obs.validate();
    basis.validate();
    detail::require_dims(obs.size() == basis.num_keypoints(),
                         "solve_wp: observations and basis disagree on the number of keypoints");
    if (obs.num_active() < 4)
        throw InsufficientConstraints("solve_wp: fewer than 4 keypoints with positive confidence");

    // Zero-confidence keypoints are dropped up front so they cannot touch
    // any update.
    const auto idx = detail::active_indices(obs.confidence);
    const KeypointObservations active = detail::select(obs, idx);
    const ShapeBasis active_basis = detail::select(basis, idx);
    detail::require_noncollinear_2d(active);

    const ConvexInitResult init = convex_init(active, active_basis.mean, opts.mu);
    const double lambda =
        opts.lambda ? *opts.lambda
                    : 1e-2 * detail::wp_coefficient_curvature(active, active_basis, init.candidates[0].s);

    detail::WPBlockSolver solver(active, active_basis, lambda, opts);
    std::array<WPEstimate, 2> out = {solver.run(init.candidates[0]), solver.run(init.candidates[1])};
    for (auto &est : out)
        est.final_cost = cost_wp(active, active_basis, est, lambda);
    if (!detail::prefer_first(out[0], out[1]))
        std::swap(out[0], out[1]);
    return out;
}

inline WPEstimate solve_wp(const KeypointObservations &obs, const ShapeBasis &basis,
                           const SolverOptions &opts = {}) {
    return solve_wp_candidates(obs, basis, opts)[0];
}

} // namespace kpose
