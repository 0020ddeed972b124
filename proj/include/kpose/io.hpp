#pragma once

#include <Eigen/Core>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kpose/error.hpp"
#include "kpose/fp_solver.hpp"
#include "kpose/geometry.hpp"
#include "kpose/observations.hpp"
#include "kpose/pnp.hpp"
#include "kpose/shape_basis.hpp"
#include "kpose/wp_solver.hpp"

// Line-oriented text formats. Every real number is written with 17
// significant digits so that a write/read cycle reproduces it bit-exactly.
//
// Shape basis:
//   KPBASIS v1
//   class <name>
//   p <p> k <k>
//   total_variance <v>
//   names <name_1> ... <name_p>
//   mean
//   <x_1 ... x_p>
//   <y_1 ... y_p>
//   <z_1 ... z_p>
//   mode <j> eigenvalue <lambda_j>      (repeated k times, each followed by 3 rows)
//
// Keypoints:
//   KPTS v1 p=<p>
//   <name> <x> <y> <d>                  (one line per keypoint; missing ones have d = 0)
//
// Intrinsics:
//   fx fy cx cy [skew]
//
// Training models:
//   KMODELS v1 n=<n> p=<p>
//   names <name_1> ... <name_p>
//   model <label>                       (repeated n times, each followed by 3 rows)
namespace kpose::io {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join(const Eigen::Ref<const Eigen::RowVectorXd> &row) {
    std::string out;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        if (i)
            out += ' ';
        out += format_double(row(i));
    }
    return out;
}

inline std::string default_name(Eigen::Index i) { return "kp" + std::to_string(i); }

namespace detail {

inline void check_name(const std::string &name) {
    if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos)
        throw InvalidArgument("keypoint and class names must be non-empty and contain no whitespace");
}

// Splits text into non-empty, non-comment lines of whitespace-separated tokens.
class LineReader {
  public:
    LineReader(const std::string &text, std::string what) : what_(std::move(what)) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            std::istringstream ls(line);
            std::vector<std::string> tokens;
            std::string tok;
            while (ls >> tok)
                tokens.push_back(tok);
            if (tokens.empty() || tokens.front().front() == '#')
                continue;
            lines_.push_back(std::move(tokens));
        }
    }

    bool done() const { return pos_ >= lines_.size(); }

    const std::vector<std::string> &next() {
        if (done())
            fail("unexpected end of file");
        return lines_[pos_++];
    }

    // Next line, required to start with `key` and carry `count` values.
    std::vector<std::string> keyed(const std::string &key, std::ptrdiff_t count = -1) {
        const auto &line = next();
        if (line.front() != key)
            fail("expected '" + key + "' line, found '" + line.front() + "'");
        if (count >= 0 && static_cast<std::ptrdiff_t>(line.size()) != count + 1)
            fail("'" + key + "' line has " + std::to_string(line.size() - 1) + " values, expected " +
                 std::to_string(count));
        return {line.begin() + 1, line.end()};
    }

    [[noreturn]] void fail(const std::string &msg) const {
        throw FormatError(what_ + ": " + msg + " (line " + std::to_string(pos_) + ")");
    }

    double number(const std::string &tok) const {
        double v = 0.0;
        const auto *first = tok.data();
        const auto *last = tok.data() + tok.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last)
            fail("invalid number '" + tok + "'");
        return v;
    }

    long integer(const std::string &tok) const {
        long v = 0;
        const auto *last = tok.data() + tok.size();
        const auto res = std::from_chars(tok.data(), last, v);
        if (res.ec != std::errc() || res.ptr != last)
            fail("invalid integer '" + tok + "'");
        return v;
    }

    // Parses "key=<int>".
    long assignment(const std::string &tok, const std::string &key) const {
        if (tok.rfind(key + "=", 0) != 0)
            fail("expected '" + key + "=<n>', found '" + tok + "'");
        return integer(tok.substr(key.size() + 1));
    }

    Eigen::RowVectorXd row(Eigen::Index n) {
        const auto &line = next();
        if (static_cast<Eigen::Index>(line.size()) != n)
            fail("expected " + std::to_string(n) + " values, found " + std::to_string(line.size()));
        Eigen::RowVectorXd out(n);
        for (Eigen::Index i = 0; i < n; ++i)
            out(i) = number(line[static_cast<size_t>(i)]);
        return out;
    }

    PointMatrix3 matrix3(Eigen::Index p) {
        PointMatrix3 m(3, p);
        for (int r = 0; r < 3; ++r)
            m.row(r) = row(p);
        return m;
    }

    Eigen::VectorXd values(const std::vector<std::string> &tokens) const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(tokens.size()));
        for (size_t i = 0; i < tokens.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = number(tokens[i]);
        return v;
    }

  private:
    std::string what_;
    std::vector<std::vector<std::string>> lines_;
    size_t pos_ = 0;
};

inline void write_matrix3(std::ostream &out, const PointMatrix3 &m) {
    for (int r = 0; r < 3; ++r)
        out << join(m.row(r)) << '\n';
}

} // namespace detail

inline std::string read_text_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot open " + path + " for writing");
    f << text;
    if (!f)
        throw Error("failed writing " + path);
}

// --- shape basis -----------------------------------------------------------

inline std::string encode_basis(const ShapeBasis &basis) {
    basis.validate();
    detail::check_name(basis.class_name);
    const auto p = basis.mean.cols();
    std::ostringstream out;
    out << "KPBASIS v1\n";
    out << "class " << basis.class_name << '\n';
    out << "p " << p << " k " << basis.num_modes() << '\n';
    out << "total_variance " << format_double(basis.total_variance) << '\n';
    out << "names";
    for (Eigen::Index i = 0; i < p; ++i) {
        const std::string name =
            basis.keypoint_names.empty() ? default_name(i) : basis.keypoint_names[static_cast<size_t>(i)];
        detail::check_name(name);
        out << ' ' << name;
    }
    out << "\nmean\n";
    detail::write_matrix3(out, basis.mean);
    for (int j = 0; j < basis.num_modes(); ++j) {
        out << "mode " << (j + 1) << " eigenvalue " << format_double(basis.eigenvalues(j)) << '\n';
        detail::write_matrix3(out, basis.modes[static_cast<size_t>(j)]);
    }
    return out.str();
}

inline ShapeBasis decode_basis(const std::string &text) {
    detail::LineReader in(text, "basis file");
    const auto &header = in.next();
    if (header.size() != 2 || header[0] != "KPBASIS" || header[1] != "v1")
        in.fail("missing 'KPBASIS v1' header");
    ShapeBasis basis;
    basis.class_name = in.keyed("class", 1)[0];
    const auto &dims = in.next();
    if (dims.size() != 4 || dims[0] != "p" || dims[2] != "k")
        in.fail("expected 'p <p> k <k>'");
    const long p = in.integer(dims[1]);
    const long k = in.integer(dims[3]);
    if (p < 1 || k < 0 || p > 1'000'000 || k > 3 * p)
        in.fail("invalid dimensions");
    basis.total_variance = in.number(in.keyed("total_variance", 1)[0]);
    basis.keypoint_names = in.keyed("names", p);
    in.keyed("mean", 0);
    basis.mean = in.matrix3(p);
    basis.eigenvalues.resize(k);
    for (long j = 0; j < k; ++j) {
        const auto mode = in.keyed("mode", 3);
        if (in.integer(mode[0]) != j + 1 || mode[1] != "eigenvalue")
            in.fail("expected 'mode " + std::to_string(j + 1) + " eigenvalue <v>'");
        basis.eigenvalues(j) = in.number(mode[2]);
        basis.modes.push_back(in.matrix3(p));
    }
    if (!in.done())
        in.fail("trailing content");
    basis.validate();
    return basis;
}

inline ShapeBasis read_basis(const std::string &path) { return decode_basis(read_text_file(path)); }
inline void write_basis(const ShapeBasis &basis, const std::string &path) {
    write_text_file(path, encode_basis(basis));
}

// --- keypoints -------------------------------------------------------------

inline std::string encode_keypoints(const KeypointObservations &obs) {
    obs.validate();
    std::ostringstream out;
    out << "KPTS v1 p=" << obs.size() << '\n';
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        const std::string name = obs.names.empty() ? default_name(i) : obs.names[static_cast<size_t>(i)];
        detail::check_name(name);
        out << name << ' ' << format_double(obs.points(0, i)) << ' ' << format_double(obs.points(1, i)) << ' '
            << format_double(obs.confidence(i)) << '\n';
    }
    return out.str();
}

inline KeypointObservations decode_keypoints(const std::string &text) {
    detail::LineReader in(text, "keypoint file");
    const auto &header = in.next();
    if (header.size() != 3 || header[0] != "KPTS" || header[1] != "v1")
        in.fail("missing 'KPTS v1 p=<n>' header");
    const long p = in.assignment(header[2], "p");
    if (p < 0 || p > 1'000'000)
        in.fail("invalid keypoint count");
    KeypointObservations obs;
    obs.points.resize(2, p);
    obs.confidence.resize(p);
    for (long i = 0; i < p; ++i) {
        const auto &line = in.next();
        if (line.size() != 4)
            in.fail("keypoint line needs '<name> <x> <y> <d>'");
        obs.names.push_back(line[0]);
        obs.points(0, i) = in.number(line[1]);
        obs.points(1, i) = in.number(line[2]);
        obs.confidence(i) = in.number(line[3]);
    }
    if (!in.done())
        in.fail("trailing content");
    obs.validate();
    return obs;
}

inline KeypointObservations read_keypoints(const std::string &path) {
    return decode_keypoints(read_text_file(path));
}
inline void write_keypoints(const KeypointObservations &obs, const std::string &path) {
    write_text_file(path, encode_keypoints(obs));
}

// --- intrinsics ------------------------------------------------------------

inline std::string encode_intrinsics(const CameraIntrinsics &k) {
    return format_double(k.fx) + ' ' + format_double(k.fy) + ' ' + format_double(k.cx) + ' ' +
           format_double(k.cy) + ' ' + format_double(k.skew) + '\n';
}

inline CameraIntrinsics decode_intrinsics(const std::string &text) {
    detail::LineReader in(text, "intrinsics file");
    const auto &line = in.next();
    if (line.size() != 4 && line.size() != 5)
        in.fail("expected 'fx fy cx cy [skew]'");
    CameraIntrinsics k;
    k.fx = in.number(line[0]);
    k.fy = in.number(line[1]);
    k.cx = in.number(line[2]);
    k.cy = in.number(line[3]);
    if (line.size() == 5)
        k.skew = in.number(line[4]);
    if (!in.done())
        in.fail("trailing content");
    k.validate();
    return k;
}

inline CameraIntrinsics read_intrinsics(const std::string &path) {
    return decode_intrinsics(read_text_file(path));
}

// --- training models -------------------------------------------------------

struct ModelSet {
    std::vector<std::string> keypoint_names;
    std::vector<std::string> labels;
    std::vector<PointMatrix3> models;
};

inline std::string encode_models(const ModelSet &set) {
    kpose::detail::require(!set.models.empty(), "model set is empty");
    const auto p = set.models.front().cols();
    std::ostringstream out;
    out << "KMODELS v1 n=" << set.models.size() << " p=" << p << '\n';
    out << "names";
    for (Eigen::Index i = 0; i < p; ++i)
        out << ' ' << (set.keypoint_names.empty() ? default_name(i) : set.keypoint_names[static_cast<size_t>(i)]);
    out << '\n';
    for (size_t m = 0; m < set.models.size(); ++m) {
        kpose::detail::require_dims(set.models[m].cols() == p, "model set: inconsistent keypoint counts");
        out << "model " << (set.labels.size() == set.models.size() ? set.labels[m] : "m" + std::to_string(m))
            << '\n';
        detail::write_matrix3(out, set.models[m]);
    }
    return out.str();
}

inline ModelSet decode_models(const std::string &text) {
    detail::LineReader in(text, "model file");
    const auto &header = in.next();
    if (header.size() != 4 || header[0] != "KMODELS" || header[1] != "v1")
        in.fail("missing 'KMODELS v1 n=<n> p=<p>' header");
    const long n = in.assignment(header[2], "n");
    const long p = in.assignment(header[3], "p");
    if (n < 0 || p < 1 || p > 1'000'000 || n > 10'000'000)
        in.fail("invalid dimensions");
    ModelSet set;
    set.keypoint_names = in.keyed("names", p);
    for (long m = 0; m < n; ++m) {
        set.labels.push_back(in.keyed("model", 1)[0]);
        set.models.push_back(in.matrix3(p));
    }
    if (!in.done())
        in.fail("trailing content");
    return set;
}

inline ModelSet read_models(const std::string &path) { return decode_models(read_text_file(path)); }

// --- fit results -----------------------------------------------------------

inline std::string encode_wp_fit(const WPEstimate &est) {
    std::ostringstream out;
    const Eigen::Matrix<double, 2, 3> &r = est.rbar.matrix();
    out << "WPFIT v1\n";
    out << "s " << format_double(est.s) << '\n';
    out << "rbar " << join(r.row(0)) << ' ' << join(r.row(1)) << '\n';
    out << "tbar " << join(est.tbar.transpose()) << '\n';
    out << "c" << (est.c.size() ? " " + join(est.c.transpose()) : std::string()) << '\n';
    out << "lambda " << format_double(est.lambda) << '\n';
    out << "cost " << format_double(est.final_cost) << '\n';
    out << "iterations " << est.iterations << '\n';
    out << "converged " << (est.converged ? 1 : 0) << '\n';
    return out.str();
}

inline WPEstimate decode_wp_fit(const std::string &text) {
    detail::LineReader in(text, "WP fit");
    const auto &header = in.next();
    if (header.size() != 2 || header[0] != "WPFIT" || header[1] != "v1")
        in.fail("missing 'WPFIT v1' header");
    WPEstimate est;
    est.s = in.number(in.keyed("s", 1)[0]);
    const Eigen::VectorXd r = in.values(in.keyed("rbar", 6));
    Eigen::Matrix<double, 2, 3> rbar;
    rbar << r(0), r(1), r(2), r(3), r(4), r(5);
    est.rbar = StiefelRows2x3::from_matrix(rbar, 1e-8);
    est.tbar = in.values(in.keyed("tbar", 2));
    est.c = in.values(in.keyed("c"));
    est.lambda = in.number(in.keyed("lambda", 1)[0]);
    est.final_cost = in.number(in.keyed("cost", 1)[0]);
    est.iterations = static_cast<int>(in.integer(in.keyed("iterations", 1)[0]));
    est.converged = in.integer(in.keyed("converged", 1)[0]) != 0;
    return est;
}

inline std::string encode_fp_fit(const FPEstimate &est) {
    std::ostringstream out;
    const Eigen::Matrix3d &r = est.rotation.matrix();
    out << "FPFIT v1\n";
    out << "rotation " << join(r.row(0)) << ' ' << join(r.row(1)) << ' ' << join(r.row(2)) << '\n';
    out << "translation " << join(est.translation.transpose()) << '\n';
    out << "c" << (est.c.size() ? " " + join(est.c.transpose()) : std::string()) << '\n';
    out << "depths " << join(est.depths.transpose()) << '\n';
    out << "lambda " << format_double(est.lambda) << '\n';
    out << "cost " << format_double(est.final_cost) << '\n';
    out << "iterations " << est.iterations << '\n';
    out << "converged " << (est.converged ? 1 : 0) << '\n';
    out << "diagnostic " << (est.diagnostic.empty() ? "none" : est.diagnostic) << '\n';
    return out.str();
}

inline FPEstimate decode_fp_fit(const std::string &text) {
    detail::LineReader in(text, "FP fit");
    const auto &header = in.next();
    if (header.size() != 2 || header[0] != "FPFIT" || header[1] != "v1")
        in.fail("missing 'FPFIT v1' header");
    FPEstimate est;
    const Eigen::VectorXd r = in.values(in.keyed("rotation", 9));
    Eigen::Matrix3d rot;
    rot << r(0), r(1), r(2), r(3), r(4), r(5), r(6), r(7), r(8);
    est.rotation = Rotation3::from_matrix(rot, 1e-8);
    est.translation = in.values(in.keyed("translation", 3));
    est.c = in.values(in.keyed("c"));
    est.depths = in.values(in.keyed("depths"));
    est.lambda = in.number(in.keyed("lambda", 1)[0]);
    est.final_cost = in.number(in.keyed("cost", 1)[0]);
    est.iterations = static_cast<int>(in.integer(in.keyed("iterations", 1)[0]));
    est.converged = in.integer(in.keyed("converged", 1)[0]) != 0;
    const auto diag = in.keyed("diagnostic");
    std::string text_diag;
    for (const auto &tok : diag)
        text_diag += (text_diag.empty() ? "" : " ") + tok;
    est.diagnostic = text_diag == "none" ? std::string() : text_diag;
    return est;
}

inline std::string encode_pnp_fit(const PnPEstimate &est) {
    std::ostringstream out;
    const Eigen::Matrix3d &r = est.rotation.matrix();
    out << "PNPFIT v1\n";
    out << "rotation " << join(r.row(0)) << ' ' << join(r.row(1)) << ' ' << join(r.row(2)) << '\n';
    out << "translation " << join(est.translation.transpose()) << '\n';
    out << "rmse " << format_double(est.reprojection_rmse) << '\n';
    out << "initial_rmse " << format_double(est.initial_rmse) << '\n';
    out << "iterations " << est.iterations << '\n';
    return out.str();
}

} // namespace kpose::io
