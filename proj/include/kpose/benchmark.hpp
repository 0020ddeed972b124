#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/fp_solver.hpp"
#include "kpose/geometry.hpp"
#include "kpose/io.hpp"
#include "kpose/observations.hpp"
#include "kpose/pnp.hpp"
#include "kpose/shape_basis.hpp"
#include "kpose/wp_solver.hpp"

namespace kpose::bench {

// SplitMix64-seeded xoshiro256** with hand-rolled uniform and normal
// transforms, so scenes are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        for (auto &s : state_)
            s = splitmix(seed);
    }

    static std::uint64_t splitmix(std::uint64_t &x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

inline std::uint64_t trial_seed(std::uint64_t seed, int trial_index) {
    std::uint64_t x = seed;
    const std::uint64_t a = Rng::splitmix(x);
    std::uint64_t y = a ^ (static_cast<std::uint64_t>(trial_index) * 0xD1B54A32D192ED03ull);
    return Rng::splitmix(y);
}

// Uniform rotation from three uniforms (subgroup algorithm: random spin
// about z followed by a Householder map of z to a uniform direction).
inline Rotation3 uniform_rotation(double u1, double u2, double u3) {
    const double theta = 2.0 * std::numbers::pi * u1;
    const double phi = 2.0 * std::numbers::pi * u2;
    const double z = u3;
    const Eigen::Vector3d v(std::cos(phi) * std::sqrt(z), std::sin(phi) * std::sqrt(z), std::sqrt(1.0 - z));
    const Eigen::Matrix3d house = Eigen::Matrix3d::Identity() - 2.0 * v * v.transpose();
    Eigen::Matrix3d spin;
    spin << std::cos(theta), std::sin(theta), 0.0, -std::sin(theta), std::cos(theta), 0.0, 0.0, 0.0, 1.0;
    return Rotation3::from_matrix(-house * spin, 1e-8);
}

inline Rotation3 axis_rotation(int axis, double angle) {
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    w(axis) = angle;
    return so3_exp(w);
}

// Camera looks along +z; the object is rotated by azimuth about its up
// axis, tilted by elevation, then spun about the viewing axis.
inline Rotation3 view_rotation(double azimuth, double elevation, double cyclorotation) {
    return axis_rotation(2, cyclorotation) * axis_rotation(0, elevation - std::numbers::pi / 2) *
           axis_rotation(2, azimuth);
}

struct PoseSampler {
    enum class Mode { uniform, view_range };
    Mode mode = Mode::uniform;
    // Radians, used in view_range mode.
    double azimuth_min = 0.0, azimuth_max = 2.0 * std::numbers::pi;
    double elevation_min = 0.0, elevation_max = std::numbers::pi / 3;
    double cyclorotation_min = -0.2, cyclorotation_max = 0.2;
    // Depth range in object diameters.
    double depth_min = 5.0, depth_max = 15.0;
    // Lateral offset of the object centre, as a fraction of its depth.
    double lateral_fraction = 0.02;
};

struct NoiseModel {
    double pixel_sigma = 0.0;
    // Each keypoint is corrupted independently with this probability ...
    double outlier_probability = 0.0;
    // ... and additionally exactly this many (distinct, random) keypoints are.
    int outlier_count = 0;
    double outlier_magnitude = 0.0;  // pixels
    // Confidence ranges emulating heatmap peaks. A keypoint counts as
    // corrupted only when outlier_magnitude > 0.
    double clean_confidence_min = 1.0, clean_confidence_max = 1.0;
    double corrupt_confidence_min = 0.0, corrupt_confidence_max = 0.2;
};

struct SceneConfig {
    ShapeBasis basis;
    PoseSampler pose;
    NoiseModel noise;
    CameraIntrinsics intrinsics{800.0, 800.0, 320.0, 240.0, 0.0};
    int trials = 100;
    std::uint64_t seed = 1;

    void validate() const {
        basis.validate();
        intrinsics.validate();
        detail::require(trials >= 1, "scene config: trial count must be >= 1");
        detail::require(pose.depth_min > 0.0 && pose.depth_max >= pose.depth_min,
                        "scene config: depth range must be positive and ordered");
        detail::require(pose.lateral_fraction >= 0.0, "scene config: lateral fraction must be >= 0");
        const auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
        detail::require(prob(noise.outlier_probability), "scene config: outlier probability must lie in [0,1]");
        detail::require(noise.pixel_sigma >= 0.0 && noise.outlier_magnitude >= 0.0,
                        "scene config: noise magnitudes must be >= 0");
        detail::require(noise.outlier_count >= 0 && noise.outlier_count <= basis.num_keypoints(),
                        "scene config: outlier count must lie in [0, p]");
        detail::require(noise.clean_confidence_min >= 0.0 &&
                            noise.clean_confidence_max >= noise.clean_confidence_min &&
                            noise.corrupt_confidence_min >= 0.0 &&
                            noise.corrupt_confidence_max >= noise.corrupt_confidence_min,
                        "scene config: confidence ranges must be nonnegative and ordered");
    }
};

struct Scene {
    Rotation3 rotation;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    ShapeCoefficients c;
    PointMatrix3 shape;
    KeypointObservations observations;
    CameraIntrinsics intrinsics;
    std::vector<bool> corrupted;
};

inline Scene sample_scene(const SceneConfig &cfg, int trial_index) {
    cfg.validate();
    const ShapeBasis &basis = cfg.basis;
    const auto p = basis.mean.cols();
    const int k = basis.num_modes();
    const double diameter = shape_diameter(basis.mean);
    detail::require(diameter > 0.0, "scene config: basis mean shape has zero extent");

    Rng rng(trial_seed(cfg.seed, trial_index));
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Scene scene;
        scene.intrinsics = cfg.intrinsics;
        const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
        if (cfg.pose.mode == PoseSampler::Mode::uniform) {
            scene.rotation = uniform_rotation(u1, u2, u3);
        } else {
            const auto &ps = cfg.pose;
            scene.rotation = view_rotation(ps.azimuth_min + u1 * (ps.azimuth_max - ps.azimuth_min),
                                           ps.elevation_min + u2 * (ps.elevation_max - ps.elevation_min),
                                           ps.cyclorotation_min + u3 * (ps.cyclorotation_max - ps.cyclorotation_min));
        }
        const double depth = diameter * rng.uniform(cfg.pose.depth_min, cfg.pose.depth_max);
        const double lx = rng.uniform(-1.0, 1.0) * cfg.pose.lateral_fraction * depth;
        const double ly = rng.uniform(-1.0, 1.0) * cfg.pose.lateral_fraction * depth;

        scene.c.resize(k);
        for (int j = 0; j < k; ++j)
            scene.c(j) = rng.normal() * std::sqrt(basis.eigenvalues(j));
        scene.shape = compose_shape(basis, scene.c);

        // Place the shape centroid at (lx, ly, depth).
        const Eigen::Vector3d centroid = scene.rotation.matrix() * scene.shape.rowwise().mean();
        scene.translation = Eigen::Vector3d(lx, ly, depth) - centroid;

        PointMatrix3 cam = scene.rotation.matrix() * scene.shape;
        cam.colwise() += scene.translation;

        // Per-keypoint draws happen unconditionally so that scenes differing
        // only in noise settings share their geometry.
        Eigen::MatrixXd draws(6, p);
        for (Eigen::Index i = 0; i < p; ++i)
            for (int r = 0; r < 6; ++r)
                draws(r, i) = r < 2 ? rng.normal() : rng.uniform();

        if (cam.row(2).minCoeff() <= 0.05 * diameter)
            continue;

        const auto &nm = cfg.noise;
        std::vector<Eigen::Index> order(static_cast<size_t>(p));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return draws(5, a) < draws(5, b); });
        std::vector<bool> forced(static_cast<size_t>(p), false);
        for (int j = 0; j < nm.outlier_count; ++j)
            forced[static_cast<size_t>(order[static_cast<size_t>(j)])] = true;

        const PointMatrix2 clean = denormalize_keypoints(cam, cfg.intrinsics);
        scene.observations.points = clean;
        scene.observations.confidence.resize(p);
        scene.observations.names = basis.keypoint_names;
        scene.corrupted.assign(static_cast<size_t>(p), false);
        for (Eigen::Index i = 0; i < p; ++i) {
            const bool corrupt = nm.outlier_magnitude > 0.0 &&
                                 (draws(2, i) < nm.outlier_probability || forced[static_cast<size_t>(i)]);
            if (nm.pixel_sigma > 0.0)
                scene.observations.points.col(i) += nm.pixel_sigma * draws.block<2, 1>(0, i);
            if (corrupt) {
                const double angle = 2.0 * std::numbers::pi * draws(3, i);
                scene.observations.points.col(i) +=
                    nm.outlier_magnitude * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                scene.observations.confidence(i) =
                    nm.corrupt_confidence_min + draws(4, i) * (nm.corrupt_confidence_max - nm.corrupt_confidence_min);
            } else {
                scene.observations.confidence(i) =
                    nm.clean_confidence_min + draws(4, i) * (nm.clean_confidence_max - nm.clean_confidence_min);
            }
            scene.corrupted[static_cast<size_t>(i)] = corrupt;
        }
        return scene;
    }
    throw Error("sample_scene: could not place the object in front of the camera after " +
                std::to_string(kMaxAttempts) + " attempts");
}

// Random non-planar mean shape of unit-order extent with k orthonormal
// modes; the kept modes explain 97% of the declared total variance.
inline ShapeBasis make_synthetic_basis(int p, int k, std::uint64_t seed, std::string class_name = "synthetic") {
    detail::require(p >= 4, "make_synthetic_basis: need p >= 4");
    detail::require(k >= 0 && k <= 3 * p, "make_synthetic_basis: invalid k");
    Rng rng(seed);
    ShapeBasis basis;
    basis.class_name = std::move(class_name);
    basis.mean.resize(3, p);
    const Eigen::Vector3d extent(0.5, 0.3, 0.2);
    for (int i = 0; i < p; ++i)
        for (int r = 0; r < 3; ++r)
            basis.mean(r, i) = extent(r) * rng.uniform(-1.0, 1.0);
    basis.mean.colwise() -= basis.mean.rowwise().mean().eval();

    Eigen::MatrixXd raw(3 * p, std::max(k, 1));
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
        for (Eigen::Index c = 0; c < raw.cols(); ++c)
            raw(r, c) = rng.normal();
    const Eigen::MatrixXd q = Eigen::JacobiSVD<Eigen::MatrixXd>(raw, Eigen::ComputeThinU).matrixU();
    const double diameter = shape_diameter(basis.mean);
    basis.eigenvalues.resize(k);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = q.col(j);
        basis.modes.emplace_back(Eigen::Map<const PointMatrix3>(v.data(), 3, p));
        const double sd = 0.08 * diameter / static_cast<double>(j + 1);
        basis.eigenvalues(j) = sd * sd;
    }
    basis.total_variance = k > 0 ? basis.eigenvalues.sum() / 0.97 : 0.0;
    for (int i = 0; i < p; ++i)
        basis.keypoint_names.push_back("kp" + std::to_string(i));
    return basis;
}

enum class Method { wp, fp, pnp, wp_uniform, fp_uniform };

inline std::string method_name(Method m) {
    switch (m) {
    case Method::wp: return "wp";
    case Method::fp: return "fp";
    case Method::pnp: return "pnp";
    case Method::wp_uniform: return "wp-uniform";
    case Method::fp_uniform: return "fp-uniform";
    }
    return "?";
}

inline std::vector<Method> parse_methods(const std::string &csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        bool found = false;
        for (Method m : {Method::wp, Method::fp, Method::pnp, Method::wp_uniform, Method::fp_uniform})
            if (method_name(m) == item) {
                if (std::find(out.begin(), out.end(), m) == out.end())
                    out.push_back(m);
                found = true;
            }
        if (!found)
            throw InvalidArgument("unknown method '" + item + "' (expected wp, fp, pnp, wp-uniform, fp-uniform)");
    }
    if (out.empty())
        throw InvalidArgument("no methods selected");
    return out;
}

inline bool is_weak(Method m) { return m == Method::wp || m == Method::wp_uniform; }

struct TrialRecord {
    int trial = 0;
    Method method = Method::fp;
    bool ok = false;
    std::string error;
    double rotation_deg = std::numeric_limits<double>::quiet_NaN();
    double translation_error = std::numeric_limits<double>::quiet_NaN();  // NaN for weak perspective
    double final_cost = std::numeric_limits<double>::quiet_NaN();
    double max_block_increase = 0.0;
    int iterations = 0;
    double seconds = 0.0;
};

struct MethodSummary {
    Method method = Method::fp;
    int succeeded = 0;
    int failed = 0;
    double rotation_mean_deg = std::numeric_limits<double>::quiet_NaN();
    double rotation_median_deg = std::numeric_limits<double>::quiet_NaN();
    double translation_mean = std::numeric_limits<double>::quiet_NaN();
    double translation_median = std::numeric_limits<double>::quiet_NaN();
    double median_seconds = std::numeric_limits<double>::quiet_NaN();
    double max_block_increase = 0.0;
};

struct ErrorReport {
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<MethodSummary> summaries;
    std::vector<TrialRecord> records;

    const MethodSummary &summary(Method m) const {
        for (const auto &s : summaries)
            if (s.method == m)
                return s;
        throw InvalidArgument("method " + method_name(m) + " was not benchmarked");
    }
};

struct BenchmarkOptions {
    SolverOptions solver;
    int threads = 1;
};

inline double median(std::vector<double> v) {
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double> &v) {
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline TrialRecord run_method(const Scene &scene, const ShapeBasis &basis, Method method,
                              const SolverOptions &solver) {
    TrialRecord rec;
    rec.method = method;
    const auto start = std::chrono::steady_clock::now();
    try {
        const KeypointObservations obs = (method == Method::wp_uniform || method == Method::fp_uniform)
                                             ? scene.observations.with_uniform_weights()
                                             : scene.observations;
        if (is_weak(method)) {
            const WPEstimate est = solve_wp(obs, basis, solver);
            rec.rotation_deg = rad_to_deg(geodesic_distance(est.rotation(), scene.rotation));
            rec.final_cost = est.final_cost;
            rec.max_block_increase = est.trace.max_block_increase;
            rec.iterations = est.iterations;
        } else if (method == Method::pnp) {
            const auto idx = detail::active_indices(obs.confidence);
            PointMatrix3 model(3, static_cast<Eigen::Index>(idx.size()));
            PointMatrix2 pts(2, static_cast<Eigen::Index>(idx.size()));
            for (size_t j = 0; j < idx.size(); ++j) {
                model.col(static_cast<Eigen::Index>(j)) = basis.mean.col(idx[j]);
                pts.col(static_cast<Eigen::Index>(j)) = obs.points.col(idx[j]);
            }
            const PnPEstimate est = solve_pnp(model, pts, scene.intrinsics);
            rec.rotation_deg = rad_to_deg(geodesic_distance(est.rotation, scene.rotation));
            rec.translation_error = (est.translation - scene.translation).norm();
            rec.final_cost = est.reprojection_rmse;
            rec.iterations = est.iterations;
        } else {
            const FPEstimate est = solve_fp(obs, scene.intrinsics, basis, solver);
            rec.rotation_deg = rad_to_deg(geodesic_distance(est.rotation, scene.rotation));
            rec.translation_error = (est.translation - scene.translation).norm();
            rec.final_cost = est.final_cost;
            rec.max_block_increase = est.trace.max_block_increase;
            rec.iterations = est.iterations;
        }
        rec.ok = true;
    } catch (const Error &e) {
        rec.ok = false;
        rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

// Runs every method on every trial. Per-trial randomness depends only on
// (seed, trial index), so any thread count yields the same records.
inline ErrorReport run_benchmark(const SceneConfig &cfg, const std::vector<Method> &methods,
                                 const BenchmarkOptions &opts = {}) {
    cfg.validate();
    detail::require(!methods.empty(), "run_benchmark: no methods");
    const size_t m = methods.size();
    std::vector<TrialRecord> records(static_cast<size_t>(cfg.trials) * m);
    std::vector<std::string> scene_errors(static_cast<size_t>(cfg.trials));

    auto work = [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            try {
                const Scene scene = sample_scene(cfg, t);
                for (size_t j = 0; j < m; ++j) {
                    TrialRecord rec = run_method(scene, cfg.basis, methods[j], opts.solver);
                    rec.trial = t;
                    records[static_cast<size_t>(t) * m + j] = std::move(rec);
                }
            } catch (const Error &e) {
                for (size_t j = 0; j < m; ++j) {
                    TrialRecord &rec = records[static_cast<size_t>(t) * m + j];
                    rec.trial = t;
                    rec.method = methods[j];
                    rec.ok = false;
                    rec.error = e.what();
                }
            }
        }
    };
    const int threads = std::clamp(opts.threads, 1, cfg.trials);
    if (threads == 1) {
        work(0, cfg.trials);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back(work, cfg.trials * w / threads, cfg.trials * (w + 1) / threads);
        for (auto &th : pool)
            th.join();
    }

    ErrorReport report;
    report.trials = cfg.trials;
    report.seed = cfg.seed;
    report.records = std::move(records);
    for (Method method : methods) {
        MethodSummary s;
        s.method = method;
        std::vector<double> rot, trans, secs;
        for (const auto &rec : report.records) {
            if (rec.method != method)
                continue;
            if (!rec.ok) {
                ++s.failed;
                continue;
            }
            ++s.succeeded;
            rot.push_back(rec.rotation_deg);
            if (!is_weak(method))
                trans.push_back(rec.translation_error);
            secs.push_back(rec.seconds);
            s.max_block_increase = std::max(s.max_block_increase, rec.max_block_increase);
        }
        s.rotation_mean_deg = mean(rot);
        s.rotation_median_deg = median(rot);
        s.translation_mean = mean(trans);
        s.translation_median = median(trans);
        s.median_seconds = median(secs);
        report.summaries.push_back(s);
    }
    return report;
}

namespace detail {

inline std::string fixed(double v, int precision = 4) {
    if (std::isnan(v))
        return "N/A";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

inline std::string pad(const std::string &s, size_t width, bool left = false) {
    if (s.size() >= width)
        return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

} // namespace detail

// Fixed-layout summary table (rotation in degrees, translation in model
// units). Contains no timings, so a fixed seed gives identical bytes.
inline std::string format_table(const ErrorReport &report) {
    std::ostringstream out;
    out << "# trials=" << report.trials << " seed=" << report.seed << '\n';
    out << detail::pad("method", 12, true) << detail::pad("ok", 6) << detail::pad("failed", 8)
        << detail::pad("rot_mean", 12) << detail::pad("rot_median", 12) << detail::pad("trans_mean", 12)
        << detail::pad("trans_median", 14) << '\n';
    for (const auto &s : report.summaries) {
        out << detail::pad(method_name(s.method), 12, true) << detail::pad(std::to_string(s.succeeded), 6)
            << detail::pad(std::to_string(s.failed), 8) << detail::pad(detail::fixed(s.rotation_mean_deg), 12)
            << detail::pad(detail::fixed(s.rotation_median_deg), 12)
            << detail::pad(detail::fixed(s.translation_mean), 12)
            << detail::pad(detail::fixed(s.translation_median), 14) << '\n';
    }
    return out.str();
}

// One line per (trial, method). Timing is opt-in because it breaks
// byte-for-byte reproducibility.
inline std::string format_records(const ErrorReport &report, bool include_timing = false) {
    std::ostringstream out;
    out << "KPBENCH v1 trials=" << report.trials << " seed=" << report.seed << '\n';
    out << "trial method ok rotation_deg translation_error cost max_block_increase iterations"
        << (include_timing ? " seconds" : "") << '\n';
    for (const auto &r : report.records) {
        auto num = [](double v) { return std::isnan(v) ? std::string("nan") : io::format_double(v); };
        out << r.trial << ' ' << method_name(r.method) << ' ' << (r.ok ? 1 : 0) << ' ' << num(r.rotation_deg) << ' '
            << num(r.translation_error) << ' ' << num(r.final_cost) << ' ' << num(r.max_block_increase) << ' '
            << r.iterations;
        if (include_timing)
            out << ' ' << io::format_double(r.seconds);
        out << '\n';
    }
    return out.str();
}

// Named scene presets used by the CLI and the acceptance suite.
inline SceneConfig scenario(const std::string &name, const ShapeBasis &basis) {
    SceneConfig cfg;
    cfg.basis = basis;
    if (name == "noiseless") {
        cfg.pose.depth_min = 5.0;
        cfg.pose.depth_max = 15.0;
    } else if (name == "far") {
        cfg.pose.depth_min = 20.0;
        cfg.pose.depth_max = 30.0;
    } else if (name == "perspective") {
        cfg.pose.depth_min = 3.0;
        cfg.pose.depth_max = 5.0;
        cfg.noise.pixel_sigma = 2.0;
    } else if (name == "ablation") {
        cfg.noise.pixel_sigma = 1.0;
        cfg.noise.outlier_count = 2;
        cfg.noise.outlier_magnitude = 30.0;
        cfg.noise.clean_confidence_min = 0.8;
        cfg.noise.clean_confidence_max = 1.0;
        cfg.noise.corrupt_confidence_min = 0.0;
        cfg.noise.corrupt_confidence_max = 0.2;
    } else {
        throw InvalidArgument("unknown scenario '" + name + "' (expected noiseless, far, perspective, ablation)");
    }
    return cfg;
}

} // namespace kpose::bench
