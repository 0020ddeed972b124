// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>
#include <string>

#include "oracles.hpp"

using namespace kpose;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;
std::map<int, std::string> lines;

void report(int id, const std::string &name, bool ok, const std::string &detail) {
    lines[id] = std::string(ok ? "PASS" : "FAIL") + " " + std::to_string(id) + " " + name + ": " + detail;
    if (!ok)
        ++failures;
}

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const ShapeBasis &basis12() {
    static const ShapeBasis b = bench::make_synthetic_basis(12, 2, 7);
    return b;
}

// Largest block increase seen by any benchmark fit.
double worst_block_increase = 0.0;
int monitored_fits = 0;

void track(const bench::ErrorReport &r) {
    for (const auto &rec : r.records) {
        if (!rec.ok || rec.method == bench::Method::pnp)
            continue;
        ++monitored_fits;
        worst_block_increase = std::max(worst_block_increase, rec.max_block_increase);
    }
}

void noiseless_full_perspective() {
    const bench::SceneConfig cfg = bench::scenario("noiseless", basis12());
    const auto t0 = Clock::now();
    int good = 0;
    bench::ErrorReport r;
    r.trials = cfg.trials;
    for (int t = 0; t < cfg.trials; ++t) {
        const bench::Scene scene = bench::sample_scene(cfg, t);
        bench::TrialRecord rec = bench::run_method(scene, cfg.basis, bench::Method::fp, {});
        if (rec.ok && rec.rotation_deg < 0.5 && rec.translation_error < 0.01 * scene.translation.norm())
            ++good;
        r.records.push_back(rec);
    }
    const double secs = seconds_since(t0);
    track(r);
    report(1, "noiseless full perspective", good >= 95 && secs < 30.0,
           fmt("%d/%d within 0.5 deg and 1%% of |T| (need 95), %.2f s (limit 30)", good, cfg.trials, secs));
}

void far_weak_perspective() {
    const bench::SceneConfig cfg = bench::scenario("far", basis12());
    const auto r = bench::run_benchmark(cfg, {bench::Method::wp});
    track(r);
    int good = 0;
    for (const auto &rec : r.records)
        good += rec.ok && rec.rotation_deg < 2.0;
    report(2, "far-field weak perspective", good >= 90,
           fmt("%d/%d within 2 deg (need 90), depth %.0f-%.0f diameters", good, cfg.trials, cfg.pose.depth_min,
               cfg.pose.depth_max));
}

void perspective_ordering() {
    bench::SceneConfig cfg = bench::scenario("perspective", basis12());
    cfg.trials = 200;
    const auto r = bench::run_benchmark(cfg, {bench::Method::wp, bench::Method::fp, bench::Method::pnp});
    track(r);
    const double wp = r.summary(bench::Method::wp).rotation_median_deg;
    const double fp = r.summary(bench::Method::fp).rotation_median_deg;
    const double pnp = r.summary(bench::Method::pnp).rotation_median_deg;
    report(3, "perspective ordering", fp < wp && fp < pnp,
           fmt("median rotation deg: fp %.3f, wp %.3f, pnp %.3f", fp, wp, pnp));
}

void ablation_ordering() {
    bench::SceneConfig cfg = bench::scenario("ablation", basis12());
    cfg.trials = 200;
    const auto r = bench::run_benchmark(cfg, bench::parse_methods("wp,fp,wp-uniform,fp-uniform"));
    track(r);
    const double wp = r.summary(bench::Method::wp).rotation_median_deg;
    const double fp = r.summary(bench::Method::fp).rotation_median_deg;
    const double wpu = r.summary(bench::Method::wp_uniform).rotation_median_deg;
    const double fpu = r.summary(bench::Method::fp_uniform).rotation_median_deg;
    report(4, "confidence weighting ablation", fp <= fpu && wp <= wpu,
           fmt("median rotation deg: fp %.3f vs uniform %.3f, wp %.3f vs uniform %.3f", fp, fpu, wp, wpu));
}

void monotonicity() {
    report(5, "block updates never raise the cost", worst_block_increase <= 1e-10,
           fmt("largest increase %.3g over %d fits (tolerance 1e-10)", worst_block_increase, monitored_fits));
}

void gradients() {
    std::mt19937_64 rng(6006);
    const ShapeBasis &b = basis12();
    const CameraIntrinsics cam{800, 800, 320, 240, 0};
    const double h = 1e-6, lambda = 0.3;
    double worst = 0.0;
    auto check = [&](double analytic, const std::function<double(double)> &f) {
        const double fd = oracle::central_difference(f, h);
        worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    };
    auto random_obs = [&](bool pixels) {
        KeypointObservations obs;
        obs.points = oracle::random_matrix(rng, 2, 12, pixels ? 100.0 : 1.0);
        if (pixels)
            obs.points.colwise() += Eigen::Vector2d(320, 240);
        obs.confidence = Eigen::VectorXd(12);
        for (int i = 0; i < 12; ++i)
            obs.confidence(i) = oracle::uniform(rng, 0.0, 1.0);
        return obs;
    };
    for (int n = 0; n < 20; ++n) {
        const KeypointObservations obs = random_obs(false);
        WPEstimate t;
        t.s = oracle::uniform(rng, 0.5, 2.0);
        t.rbar = StiefelRows2x3::from_rotation(oracle::random_rotation3(rng));
        t.tbar = oracle::random_matrix(rng, 2, 1);
        t.c = oracle::random_matrix(rng, 2, 1, 0.1);
        const WPGradient g = cost_wp_gradient(obs, b, t, lambda);
        auto cost = [&](const WPEstimate &x) { return cost_wp(obs, b, x, lambda); };
        check(g.s, [&](double e) { WPEstimate x = t; x.s += e; return cost(x); });
        for (int k = 0; k < 2; ++k) {
            check(g.tbar(k), [&](double e) { WPEstimate x = t; x.tbar(k) += e; return cost(x); });
            check(g.c(k), [&](double e) { WPEstimate x = t; x.c(k) += e; return cost(x); });
        }
        for (int k = 0; k < 3; ++k)
            check(g.rotation(k), [&](double e) {
                WPEstimate x = t;
                x.rbar = StiefelRows2x3::from_matrix(
                    t.rbar.matrix() * oracle::axis_angle(Eigen::Vector3d::Unit(k), e), 1e-9);
                return cost(x);
            });
    }
    const double worst_wp = worst;
    worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        const KeypointObservations obs = random_obs(true);
        FPEstimate t;
        t.rotation = oracle::random_rotation3(rng);
        t.translation = Eigen::Vector3d(oracle::uniform(rng, -0.2, 0.2), oracle::uniform(rng, -0.2, 0.2),
                                        oracle::uniform(rng, 3.0, 8.0));
        t.c = oracle::random_matrix(rng, 2, 1, 0.1);
        t.depths = Eigen::VectorXd(12);
        for (int i = 0; i < 12; ++i)
            t.depths(i) = oracle::uniform(rng, 3.0, 8.0);
        const FPGradient g = cost_fp_gradient(obs, cam, b, t, lambda);
        auto cost = [&](const FPEstimate &x) { return cost_fp(obs, cam, b, x, lambda); };
        for (int k = 0; k < 3; ++k) {
            check(g.translation(k), [&](double e) { FPEstimate x = t; x.translation(k) += e; return cost(x); });
            check(g.rotation(k), [&](double e) {
                FPEstimate x = t;
                x.rotation = Rotation3::from_matrix(
                    t.rotation.matrix() * oracle::axis_angle(Eigen::Vector3d::Unit(k), e), 1e-9);
                return cost(x);
            });
        }
        for (int k = 0; k < 2; ++k)
            check(g.c(k), [&](double e) { FPEstimate x = t; x.c(k) += e; return cost(x); });
        for (int i = 0; i < 12; ++i)
            check(g.depths(i), [&](double e) { FPEstimate x = t; x.depths(i) += e; return cost(x); });
    }
    const double worst_fp = worst;
    report(6, "analytic gradients", worst_wp < 1e-5 && worst_fp < 1e-5,
           fmt("worst relative error wp %.2e, fp %.2e (limit 1e-5), 20 points each", worst_wp, worst_fp));
}

void rotation_oracles() {
    std::mt19937_64 rng(7007);
    const int samples = 100000;
    double worst_procrustes = -1e300, worst_projection = -1e300;
    for (int n = 0; n < 20; ++n) {
        const PointMatrix3 b = oracle::random_matrix(rng, 3, 8);
        PointMatrix3 a = oracle::random_rotation(rng) * b + 0.3 * oracle::random_matrix(rng, 3, 8);
        Eigen::VectorXd w(8);
        for (int i = 0; i < 8; ++i)
            w(i) = oracle::uniform(rng, 0.1, 1.0);
        const Rotation3 r = weighted_procrustes(a, b, w);
        auto cost = [&](const Eigen::Matrix3d &q) { return oracle::alignment_cost(q, a, b, w); };
        worst_procrustes = std::max(worst_procrustes, cost(r.matrix()) - oracle::brute_force_min(cost, samples, rng));

        const Eigen::Matrix3d m = oracle::random_matrix(rng, 3, 3);
        const Rotation3 p = project_to_so3(m);
        auto dist = [&](const Eigen::Matrix3d &q) { return (q - m).squaredNorm(); };
        worst_projection = std::max(worst_projection, dist(p.matrix()) - oracle::brute_force_min(dist, samples, rng));
    }
    double worst_geodesic = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const Eigen::Matrix3d r1 = oracle::random_rotation(rng);
        const double angle = oracle::uniform(rng, 0.0, std::numbers::pi);
        const Eigen::Vector3d axis = oracle::random_matrix(rng, 3, 1);
        const Eigen::Matrix3d r2 = r1 * oracle::axis_angle(axis, angle);
        worst_geodesic = std::max(worst_geodesic, std::abs(geodesic_distance(r1, r2) - angle));
    }
    report(7, "rotation oracles",
           worst_procrustes <= 1e-6 && worst_projection <= 1e-6 && worst_geodesic <= 1e-9,
           fmt("cost minus brute force: procrustes %.3g, projection %.3g (limit 1e-6); geodesic error %.2e "
               "(limit 1e-9)",
               worst_procrustes, worst_projection, worst_geodesic));
}

void pca_recovery() {
    std::mt19937_64 rng(8008);
    const int p = 12;
    const PointMatrix3 mean = oracle::random_matrix(rng, 3, p);
    const Eigen::MatrixXd raw = oracle::random_matrix(rng, 3 * p, 2);
    const Eigen::MatrixXd q = Eigen::JacobiSVD<Eigen::MatrixXd>(raw, Eigen::ComputeThinU).matrixU();
    std::vector<PointMatrix3> truth;
    for (int j = 0; j < 2; ++j)
        truth.emplace_back(Eigen::Map<const PointMatrix3>(q.col(j).data(), 3, p));

    // Exact two-mode shapes, then the same shapes with small isotropic noise.
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<PointMatrix3> exact, noisy;
    for (int m = 0; m < 500; ++m) {
        exact.push_back(mean + 0.5 * n(rng) * truth[0] + 0.2 * n(rng) * truth[1]);
        noisy.push_back(exact.back() + 1e-4 * oracle::random_matrix(rng, 3, p));
    }
    auto recover = [&](const std::vector<PointMatrix3> &models, double &variance) {
        const ShapeBasis b = build_basis(models, {.selection = BasisSelection::with_k(2)});
        Eigen::MatrixXd found(3 * p, 2);
        for (int j = 0; j < 2; ++j)
            found.col(j) = Eigen::Map<const Eigen::VectorXd>(b.modes[static_cast<size_t>(j)].data(), 3 * p);
        variance = variance_explained(b)(1);
        return oracle::max_principal_angle(found, q);
    };
    double var_exact = 0.0, var_noisy = 0.0;
    const double angle_exact = recover(exact, var_exact);
    const double angle_noisy = recover(noisy, var_noisy);
    report(8, "shape basis recovery",
           angle_exact < 1e-3 && angle_noisy < 1e-3 && var_exact >= 0.95 && var_noisy >= 0.95,
           fmt("largest principal angle exact %.2e, noise 1e-4 %.2e rad (limit 1e-3); variance at k=2 %.4f, "
               "%.4f (need 0.95); 500 samples",
               angle_exact, angle_noisy, var_exact, var_noisy));
}

void timing() {
    const ShapeBasis big = bench::make_synthetic_basis(124, 2, 9);
    bench::SceneConfig cfg = bench::scenario("perspective", big);
    cfg.trials = 30;
    const auto r = bench::run_benchmark(cfg, {bench::Method::wp, bench::Method::fp});
    track(r);
    const double wp = r.summary(bench::Method::wp).median_seconds;
    const double fp = r.summary(bench::Method::fp).median_seconds;
    report(9, "fit time", wp < 0.1 && fp < 0.1,
           fmt("median seconds per fit at p=124, k=2: wp %.4f, fp %.4f (limit 0.1)", wp, fp));
}

void determinism_and_round_trips() {
    bench::SceneConfig cfg = bench::scenario("ablation", basis12());
    cfg.trials = 20;
    const auto methods = bench::parse_methods("wp,fp,pnp,wp-uniform,fp-uniform");
    bench::BenchmarkOptions serial, threaded;
    threaded.threads = 4;
    const std::string a = bench::format_records(bench::run_benchmark(cfg, methods, serial));
    const std::string b = bench::format_records(bench::run_benchmark(cfg, methods, serial));
    const std::string c = bench::format_records(bench::run_benchmark(cfg, methods, threaded));
    const bool bench_ok = a == b && a == c;

    std::mt19937_64 rng(10010);
    std::vector<Heatmap> maps;
    for (int i = 0; i < 5; ++i) {
        Heatmap h;
        h.width = 17;
        h.height = 11;
        h.keypoint_name = "kp" + std::to_string(i);
        for (std::uint32_t v = 0; v < h.width * h.height; ++v)
            h.values.push_back(static_cast<float>(oracle::uniform(rng, 0.0, 1.0) / 3.0));
        maps.push_back(h);
    }
    const std::string bytes = encode_heatmaps(maps);
    const auto back = decode_heatmaps(bytes);
    bool heat_ok = back.size() == maps.size() && encode_heatmaps(back) == bytes;
    for (size_t i = 0; heat_ok && i < maps.size(); ++i)
        heat_ok = back[i].width == maps[i].width && back[i].height == maps[i].height &&
                  back[i].keypoint_name == maps[i].keypoint_name &&
                  std::memcmp(back[i].values.data(), maps[i].values.data(), maps[i].values.size() * sizeof(float)) == 0;

    ShapeBasis basis = bench::make_synthetic_basis(12, 2, 11);
    basis.mean += 1e-7 * oracle::random_matrix(rng, 3, 12);  // exercise full-precision digits
    const ShapeBasis decoded = io::decode_basis(io::encode_basis(basis));
    bool basis_ok = decoded.mean == basis.mean && decoded.eigenvalues == basis.eigenvalues &&
                    decoded.total_variance == basis.total_variance && decoded.keypoint_names == basis.keypoint_names &&
                    decoded.class_name == basis.class_name && decoded.num_modes() == basis.num_modes();
    for (int j = 0; basis_ok && j < basis.num_modes(); ++j)
        basis_ok = decoded.modes[static_cast<size_t>(j)] == basis.modes[static_cast<size_t>(j)];

    report(10, "determinism and round trips", bench_ok && heat_ok && basis_ok,
           fmt("bench records identical across runs and threads: %s; heatmaps bit-exact: %s; basis bit-exact: %s",
               bench_ok ? "yes" : "no", heat_ok ? "yes" : "no", basis_ok ? "yes" : "no"));
}

} // namespace

int main() {
    const auto t0 = Clock::now();
    try {
        noiseless_full_perspective();
        far_weak_perspective();
        perspective_ordering();
        ablation_ordering();
        gradients();
        rotation_oracles();
        pca_recovery();
        timing();
        monotonicity();
        determinism_and_round_trips();
    } catch (const std::exception &e) {
        for (const auto &[id, line] : lines)
            std::printf("%s\n", line.c_str());
        std::printf("FAIL acceptance aborted: %s\n", e.what());
        return 2;
    }
    for (const auto &[id, line] : lines)
        std::printf("%s\n", line.c_str());
    std::printf("%d criteria failed, %.1f s\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
