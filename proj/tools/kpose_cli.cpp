// kpose command-line tool. Every command exits nonzero with a one-line
// diagnostic on error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "kpose/kpose.hpp"

namespace {

using namespace kpose;

void emit(const std::string &text, const std::string &out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        io::write_text_file(out_path, text);
}

struct SolverFlags {
    std::optional<double> lambda;
    std::optional<double> mu;
    int max_iters = 500;
    double tol = 1e-9;

    void add(CLI::App *cmd, bool with_mu) {
        cmd->add_option("--lambda", lambda, "Shape coefficient regularization weight (default: derived)")
            ->check(CLI::NonNegativeNumber);
        if (with_mu)
            cmd->add_option("--mu", mu, "Spectral-norm weight of the convex initialization (default: derived)")
                ->check(CLI::NonNegativeNumber);
        cmd->add_option("--max-iters", max_iters, "Maximum outer iterations")->check(CLI::PositiveNumber);
        cmd->add_option("--tol", tol, "Relative cost-decrease stopping tolerance")->check(CLI::PositiveNumber);
    }

    SolverOptions options() const {
        SolverOptions o;
        o.lambda = lambda;
        o.mu = mu;
        o.max_iterations = max_iters;
        o.relative_tolerance = tol;
        return o;
    }
};

std::optional<ImageSize> parse_size(const std::string &text) {
    if (text.empty())
        return std::nullopt;
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw InvalidArgument("image size must look like <width>x<height>, got '" + text + "'");
    ImageSize size{std::stod(text.substr(0, x)), std::stod(text.substr(x + 1))};
    detail::require(size.width > 0.0 && size.height > 0.0, "image size must be positive");
    return size;
}

std::string format_truth(const bench::Scene &scene) {
    std::ostringstream out;
    const Eigen::Matrix3d &r = scene.rotation.matrix();
    out << "TRUTH v1\n";
    out << "rotation " << io::join(r.row(0)) << ' ' << io::join(r.row(1)) << ' ' << io::join(r.row(2)) << '\n';
    out << "translation " << io::join(scene.translation.transpose()) << '\n';
    out << "c" << (scene.c.size() ? " " + io::join(scene.c.transpose()) : std::string()) << '\n';
    return out.str();
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Pose and shape recovery from confidence-weighted 2D keypoints"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "kpose 1.0.0");

    // build-basis
    std::string models_path, out_path, class_name = "object";
    std::optional<int> fixed_k;
    std::optional<double> variance;
    bool align = false;
    auto *build = app.add_subcommand("build-basis", "Build a PCA shape basis from aligned 3D keypoint models");
    build->add_option("--models", models_path, "Model set file (KMODELS v1)")->required();
    build->add_option("--k", fixed_k, "Number of modes to keep")->check(CLI::NonNegativeNumber);
    build->add_option("--variance", variance, "Keep the fewest modes reaching this variance fraction")
        ->check(CLI::Range(0.0, 1.0));
    build->add_option("--class", class_name, "Class name stored in the basis");
    build->add_flag("--align", align, "Procrustes-align the models before PCA");
    build->add_option("--out", out_path, "Output basis path (default: stdout)");
    build->get_option("--k")->excludes("--variance");

    // fit-wp / fit-fp / pnp
    std::string basis_path, keypoints_path, intrinsics_path;
    bool uniform = false;
    SolverFlags wp_flags, fp_flags;
    auto *fit_wp = app.add_subcommand("fit-wp", "Weak-perspective pose and shape fit");
    fit_wp->add_option("--basis", basis_path, "Shape basis file")->required();
    fit_wp->add_option("--keypoints", keypoints_path, "Keypoint file (KPTS v1)")->required();
    fit_wp->add_flag("--uniform", uniform, "Ignore confidences (every observed keypoint gets weight 1)");
    fit_wp->add_option("--out", out_path, "Output path (default: stdout)");
    wp_flags.add(fit_wp, true);

    auto *fit_fp = app.add_subcommand("fit-fp", "Full-perspective pose and shape fit");
    fit_fp->add_option("--basis", basis_path, "Shape basis file")->required();
    fit_fp->add_option("--keypoints", keypoints_path, "Keypoint file (KPTS v1), pixels")->required();
    fit_fp->add_option("--intrinsics", intrinsics_path, "Intrinsics file: fx fy cx cy [skew]")->required();
    fit_fp->add_flag("--uniform", uniform, "Ignore confidences (every observed keypoint gets weight 1)");
    fit_fp->add_option("--out", out_path, "Output path (default: stdout)");
    fp_flags.add(fit_fp, true);

    auto *pnp = app.add_subcommand("pnp", "Rigid PnP baseline using the basis mean shape");
    pnp->add_option("--basis", basis_path, "Shape basis file (mean shape is used)")->required();
    pnp->add_option("--keypoints", keypoints_path, "Keypoint file; keypoints with d = 0 are skipped")->required();
    pnp->add_option("--intrinsics", intrinsics_path, "Intrinsics file")->required();
    pnp->add_option("--out", out_path, "Output path (default: stdout)");

    // peaks / synth-heatmaps
    std::string heatmaps_path, scale_to;
    bool subpixel = false;
    auto *peaks = app.add_subcommand("peaks", "Extract keypoints and confidences from a heatmap file");
    peaks->add_option("--heatmaps", heatmaps_path, "Heatmap file (KPHM)")->required();
    peaks->add_option("--scale-to", scale_to, "Rescale peak locations to an image of <width>x<height>");
    peaks->add_flag("--subpixel", subpixel, "Quadratic sub-pixel refinement");
    peaks->add_option("--out", out_path, "Output keypoint path (default: stdout)");

    std::uint32_t width = 64, height = 64;
    double sigma = 1.5;
    auto *synth = app.add_subcommand("synth-heatmaps", "Render Gaussian heatmaps at keypoint locations");
    synth->add_option("--keypoints", keypoints_path, "Keypoint file; d sets the peak amplitude")->required();
    synth->add_option("--width", width, "Map width")->check(CLI::PositiveNumber);
    synth->add_option("--height", height, "Map height")->check(CLI::PositiveNumber);
    synth->add_option("--sigma", sigma, "Gaussian standard deviation in map cells")->check(CLI::PositiveNumber);
    synth->add_option("--out", out_path, "Output heatmap path")->required();

    // bench / scene
    std::string scenario = "noiseless", format = "table", methods = "wp,fp,pnp";
    std::uint64_t seed = 1;
    int trials = 100, threads = 1, trial_index = 0;
    bool timing = false;
    SolverFlags bench_flags;
    auto *bench_cmd = app.add_subcommand("bench", "Monte-Carlo benchmark on synthetic scenes");
    bench_cmd->add_option("--basis", basis_path, "Shape basis (default: built-in synthetic p=12, k=2)");
    bench_cmd->add_option("--scenario", scenario, "noiseless | far | perspective | ablation")
        ->check(CLI::IsMember({"noiseless", "far", "perspective", "ablation"}));
    bench_cmd->add_option("--seed", seed, "Random seed");
    bench_cmd->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--methods", methods, "Comma-separated subset of wp,fp,pnp,wp-uniform,fp-uniform");
    bench_cmd->add_option("--format", format, "table | records")->check(CLI::IsMember({"table", "records"}));
    bench_cmd->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_flag("--timing", timing, "Add per-fit wall time to records output");
    bench_cmd->add_option("--out", out_path, "Output path (default: stdout)");
    bench_flags.add(bench_cmd, true);

    std::string out_dir;
    auto *scene_cmd = app.add_subcommand("scene", "Write one synthetic scene as basis, keypoint, intrinsics and truth files");
    scene_cmd->add_option("--basis", basis_path, "Shape basis (default: built-in synthetic p=12, k=2)");
    scene_cmd->add_option("--scenario", scenario, "noiseless | far | perspective | ablation")
        ->check(CLI::IsMember({"noiseless", "far", "perspective", "ablation"}));
    scene_cmd->add_option("--seed", seed, "Random seed");
    scene_cmd->add_option("--trial", trial_index, "Trial index")->check(CLI::NonNegativeNumber);
    scene_cmd->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    try {
        if (*build) {
            const io::ModelSet set = io::read_models(models_path);
            BasisBuildOptions opts;
            if (fixed_k)
                opts.selection = BasisSelection::with_k(*fixed_k);
            else if (variance)
                opts.selection = BasisSelection::with_fraction(*variance);
            opts.class_name = class_name;
            opts.keypoint_names = set.keypoint_names;
            opts.prealign = align;
            const ShapeBasis basis = build_basis(set.models, opts);
            if (basis.num_modes() == 0)
                std::cerr << "kpose: warning: the models show no shape variation; basis has k = 0\n";
            emit(io::encode_basis(basis), out_path);
        } else if (*fit_wp) {
            const ShapeBasis basis = io::read_basis(basis_path);
            KeypointObservations obs = io::read_keypoints(keypoints_path);
            if (uniform)
                obs = obs.with_uniform_weights();
            emit(io::encode_wp_fit(solve_wp(obs, basis, wp_flags.options())), out_path);
        } else if (*fit_fp) {
            const ShapeBasis basis = io::read_basis(basis_path);
            KeypointObservations obs = io::read_keypoints(keypoints_path);
            if (uniform)
                obs = obs.with_uniform_weights();
            const CameraIntrinsics k = io::read_intrinsics(intrinsics_path);
            emit(io::encode_fp_fit(solve_fp(obs, k, basis, fp_flags.options())), out_path);
        } else if (*pnp) {
            const ShapeBasis basis = io::read_basis(basis_path);
            const KeypointObservations obs = io::read_keypoints(keypoints_path);
            detail::require_dims(obs.size() == basis.num_keypoints(),
                                 "keypoint file and basis disagree on the number of keypoints");
            const CameraIntrinsics k = io::read_intrinsics(intrinsics_path);
            const auto idx = detail::active_indices(obs.confidence);
            const KeypointObservations active = detail::select(obs, idx);
            const ShapeBasis model = detail::select(basis, idx);
            emit(io::encode_pnp_fit(solve_pnp(model.mean, active.points, k)), out_path);
        } else if (*peaks) {
            PeakOptions opts;
            opts.scale_to = parse_size(scale_to);
            opts.subpixel = subpixel;
            emit(io::encode_keypoints(extract_peaks(read_heatmaps(heatmaps_path), opts)), out_path);
        } else if (*synth) {
            const KeypointObservations obs = io::read_keypoints(keypoints_path);
            std::vector<Heatmap> maps;
            for (Eigen::Index i = 0; i < obs.size(); ++i)
                maps.push_back(synthesize_heatmap(width, height, obs.points.col(i), sigma, obs.confidence(i),
                                                  obs.names[static_cast<size_t>(i)]));
            write_heatmaps(maps, out_path);
        } else if (*bench_cmd || *scene_cmd) {
            const ShapeBasis basis =
                basis_path.empty() ? bench::make_synthetic_basis(12, 2, 7) : io::read_basis(basis_path);
            bench::SceneConfig cfg = bench::scenario(scenario, basis);
            cfg.seed = seed;
            if (*bench_cmd) {
                cfg.trials = trials;
                bench::BenchmarkOptions opts;
                opts.solver = bench_flags.options();
                opts.threads = threads;
                const auto report = bench::run_benchmark(cfg, bench::parse_methods(methods), opts);
                emit(format == "records" ? bench::format_records(report, timing) : bench::format_table(report),
                     out_path);
            } else {
                const bench::Scene scene = bench::sample_scene(cfg, trial_index);
                std::filesystem::create_directories(out_dir);
                const std::filesystem::path dir(out_dir);
                io::write_basis(basis, (dir / "basis.txt").string());
                io::write_keypoints(scene.observations, (dir / "keypoints.txt").string());
                io::write_text_file((dir / "intrinsics.txt").string(), io::encode_intrinsics(scene.intrinsics));
                io::write_text_file((dir / "truth.txt").string(), format_truth(scene));
            }
        }
    } catch (const std::exception &e) {
        std::cerr << "kpose: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
