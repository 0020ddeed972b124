#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"
#include "kpose/shape_basis.hpp"

namespace kpose {

// 2D keypoints W (one column per keypoint) with per-keypoint confidences d.
// Keypoints with d = 0 are ignored by every solver and may hold sentinel
// coordinates.
struct KeypointObservations {
    PointMatrix2 points;
    Eigen::VectorXd confidence;
    std::vector<std::string> names;

    Eigen::Index size() const { return points.cols(); }

    int num_active() const { return static_cast<int>((confidence.array() > 0.0).count()); }

    void validate() const {
        detail::require_dims(confidence.size() == points.cols(),
                             "observations: one confidence per keypoint required");
        detail::require_dims(names.empty() || static_cast<Eigen::Index>(names.size()) == points.cols(),
                             "observations: keypoint name count differs from p");
        for (Eigen::Index i = 0; i < confidence.size(); ++i) {
            const double d = confidence(i);
            if (!std::isfinite(d) || d < 0.0)
                throw InvalidArgument("observations: confidences must be finite and >= 0");
            if (d > 0.0 && !points.col(i).allFinite())
                throw InvalidArgument("observations: non-finite keypoint with positive confidence");
        }
    }

    // Same keypoints with every present (d > 0) keypoint weighted 1.
    KeypointObservations with_uniform_weights() const {
        KeypointObservations out = *this;
        for (Eigen::Index i = 0; i < out.confidence.size(); ++i)
            if (out.confidence(i) > 0.0)
                out.confidence(i) = 1.0;
        return out;
    }
};

// Record of the cost after each block update of an alternating solver.
struct FitTrace {
    std::vector<double> block_costs;  // filled only when history is requested
    double max_block_increase = 0.0;  // largest cost increase any block attempted
    int block_updates = 0;
    int rejected_updates = 0;
};

namespace detail {

inline std::vector<Eigen::Index> active_indices(const Eigen::VectorXd &d) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d(i) > 0.0)
            idx.push_back(i);
    return idx;
}

inline KeypointObservations select(const KeypointObservations &obs,
                                   const std::vector<Eigen::Index> &idx) {
    KeypointObservations out;
    const auto n = static_cast<Eigen::Index>(idx.size());
    out.points.resize(2, n);
    out.confidence.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.points.col(j) = obs.points.col(idx[static_cast<size_t>(j)]);
        out.confidence(j) = obs.confidence(idx[static_cast<size_t>(j)]);
    }
    return out;
}

inline ShapeBasis select(const ShapeBasis &basis, const std::vector<Eigen::Index> &idx) {
    ShapeBasis out;
    out.class_name = basis.class_name;
    out.eigenvalues = basis.eigenvalues;
    out.total_variance = basis.total_variance;
    const auto n = static_cast<Eigen::Index>(idx.size());
    out.mean.resize(3, n);
    for (Eigen::Index j = 0; j < n; ++j)
        out.mean.col(j) = basis.mean.col(idx[static_cast<size_t>(j)]);
    for (const auto &mode : basis.modes) {
        PointMatrix3 m(3, n);
        for (Eigen::Index j = 0; j < n; ++j)
            m.col(j) = mode.col(idx[static_cast<size_t>(j)]);
        out.modes.push_back(std::move(m));
    }
    return out;
}

// Tracks per-block costs and enforces non-increase: an update that would
// raise the cost (only possible through rounding) is rolled back.
class BlockMonitor {
  public:
    BlockMonitor(FitTrace &trace, bool record) : trace_(trace), record_(record) {}

    template <class State, class CostFn>
    double update(State &state, const State &previous, double prev_cost, CostFn &&cost) {
        const double c = cost(state);
        ++trace_.block_updates;
        const double increase = c - prev_cost;
        trace_.max_block_increase = std::max(trace_.max_block_increase, increase);
        double accepted = c;
        if (!(c <= prev_cost)) {
            state = previous;
            accepted = prev_cost;
            ++trace_.rejected_updates;
        }
        if (record_)
            trace_.block_costs.push_back(accepted);
        return accepted;
    }

    void start(double cost) {
        if (record_)
            trace_.block_costs.push_back(cost);
    }

  private:
    FitTrace &trace_;
    bool record_;
};

// Solves (A + lambda I) x = b for a symmetric PSD A, minimum-norm when singular.
inline Eigen::VectorXd solve_ridge(const Eigen::MatrixXd &a, const Eigen::VectorXd &b, double lambda) {
    const Eigen::MatrixXd reg = a + lambda * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(reg, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);
}

} // namespace detail

} // namespace kpose
