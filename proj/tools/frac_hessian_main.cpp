#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fkh/config.hpp"
#include "fkh/constants.hpp"
#include "fkh/degenerate.hpp"
#include "fkh/envelope.hpp"
#include "fkh/errors.hpp"
#include "fkh/experiments.hpp"
#include "fkh/fracop.hpp"
#include "fkh/infimum.hpp"
#include "fkh/json_writer.hpp"
#include "fkh/profiles.hpp"
#include "fkh/rng.hpp"
#include "fkh/solver.hpp"
#include "fkh/symcone.hpp"
#include "fkh/version.hpp"

namespace {

using fkh::ConfigError;
using fkh::ConfigFile;
using fkh::ExperimentReport;
using fkh::ExperimentStatus;
using fkh::JsonWriter;
using fkh::SymMatrix;
using fkh::TestFunctionProfile;
using fkh::Vector;

double parse_double_strict(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    }
}

long long parse_ll_strict(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
    }
}

std::uint64_t parse_u64_strict(const std::string& key, const std::string& v) {
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("");  // stoull wraps
        std::size_t pos = 0;
        std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
    }
}

bool parse_bool_strict(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_list_strict(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double_strict(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

/**
 * Merged view of config file and command-line overrides (flags win), with a
 * trace of every consumed key so the output report can embed the fully
 * resolved configuration in consumption order.
 */
class Settings {
 public:
    void attach_file(const std::string& path) { file_ = ConfigFile::load(path); }

    void set_override(const std::string& key, const std::string& value) {
        overrides_[key] = value;
    }

    double get_double(const std::string& key, double fallback) {
        double v = fallback;
        if (const std::string* o = consume_override(key)) {
            v = parse_double_strict(key, *o);
        } else if (file_) {
            v = file_->get_double(key, fallback);
        }
        record(key).set_number(v);
        return v;
    }

    int get_int(const std::string& key, int fallback) {
        long long v = fallback;
        if (const std::string* o = consume_override(key)) {
            v = parse_ll_strict(key, *o);
        } else if (file_) {
            v = file_->get_int(key, fallback);
        }
        record(key).set_integer(v);
        return static_cast<int>(v);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        std::uint64_t v = fallback;
        if (const std::string* o = consume_override(key)) {
            v = parse_u64_strict(key, *o);
        } else if (file_) {
            v = file_->get_u64(key, fallback);
        }
        record(key).set_unsigned(v);
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) {
        bool v = fallback;
        if (const std::string* o = consume_override(key)) {
            v = parse_bool_strict(key, *o);
        } else if (file_) {
            v = file_->get_bool(key, fallback);
        }
        record(key).set_boolean(v);
        return v;
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        std::string v = fallback;
        if (const std::string* o = consume_override(key)) {
            v = *o;
        } else if (file_) {
            v = file_->get_string(key, fallback);
        }
        record(key).set_text(v);
        return v;
    }

    std::vector<double> get_list(const std::string& key, const std::string& fallback) {
        std::string raw = fallback;
        if (const std::string* o = consume_override(key)) {
            raw = *o;
        } else if (file_) {
            raw = file_->get_string(key, fallback);
        }
        std::vector<double> v = parse_list_strict(key, raw);
        record(key).set_text(raw);
        return v;
    }

    /** Unconsumed file keys are configuration mistakes, not silence. */
    void finish() const {
        if (file_) file_->reject_unknown();
    }

    void emit_config(JsonWriter& jw) const {
        jw.key("config");
        jw.begin_object();
        for (const auto& e : entries_) {
            switch (e.kind) {
                case Entry::kNumber: jw.kv(e.key, e.number); break;
                case Entry::kInteger: jw.kv(e.key, e.integer); break;
                case Entry::kUnsigned:
                    jw.kv(e.key, static_cast<unsigned long long>(e.uns));
                    break;
                case Entry::kBoolean: jw.kv(e.key, e.boolean); break;
                case Entry::kText: jw.kv(e.key, e.text); break;
            }
        }
        jw.end_object();
    }

 private:
    struct Entry {
        enum Kind { kNumber, kInteger, kUnsigned, kBoolean, kText } kind = kText;
        std::string key;
        double number = 0.0;
        long long integer = 0;
        std::uint64_t uns = 0;
        bool boolean = false;
        std::string text;

        void set_number(double v) { kind = kNumber; number = v; }
        void set_integer(long long v) { kind = kInteger; integer = v; }
        void set_unsigned(std::uint64_t v) { kind = kUnsigned; uns = v; }
        void set_boolean(bool v) { kind = kBoolean; boolean = v; }
        void set_text(const std::string& v) { kind = kText; text = v; }
    };

    const std::string* consume_override(const std::string& key) {
        auto it = overrides_.find(key);
        if (it == overrides_.end()) return nullptr;
        if (file_) file_->get_string(key, "");  // flag wins, file key still counts as known
        return &it->second;
    }

    Entry& record(const std::string& key) {
        for (auto& e : entries_) {
            if (e.key == key) return e;
        }
        entries_.push_back({});
        entries_.back().key = key;
        return entries_.back();
    }

    std::optional<ConfigFile> file_;
    std::map<std::string, std::string> overrides_;
    std::vector<Entry> entries_;
};

fkh::QuadratureSpec read_quad(Settings& st, int threads) {
    fkh::QuadratureSpec q;
    q.n_radial = st.get_int("n_radial", q.n_radial);
    q.n_angular = st.get_int("n_angular", q.n_angular);
    q.r_min = st.get_double("r_min", q.r_min);
    q.r_max = st.get_double("r_max", q.r_max);
    q.gl_per_panel = st.get_int("gl_per_panel", q.gl_per_panel);
    q.tol = st.get_double("tol", q.tol);
    std::string policy = st.get_string("tail_policy", "report");
    if (policy == "report") {
        q.tail_policy = fkh::TailPolicy::kReport;
    } else if (policy == "reject") {
        q.tail_policy = fkh::TailPolicy::kReject;
    } else {
        throw ConfigError("key 'tail_policy': expected report or reject, got '" + policy + "'");
    }
    q.allow_extreme_anisotropy = st.get_bool("allow_extreme_anisotropy", false);
    q.mc_seed = st.get_u64("mc_seed", q.mc_seed);
    q.n_threads = threads;
    q.validate();
    return q;
}

std::string status_name(ExperimentStatus s) {
    switch (s) {
        case ExperimentStatus::kPass: return "pass";
        case ExperimentStatus::kFail: return "fail";
        default: return "not_applicable";
    }
}

void emit_report_body(JsonWriter& jw, const ExperimentReport& rep) {
    jw.begin_object();
    jw.kv("name", rep.name);
    jw.key("inputs");
    jw.begin_object();
    for (const auto& p : rep.inputs) jw.kv(p.first, p.second);
    jw.end_object();
    jw.kv_array("columns", rep.columns);
    jw.key("rows");
    jw.begin_array();
    for (const auto& row : rep.rows) {
        jw.begin_array();
        for (double v : row) jw.value(v);
        jw.end_array();
    }
    jw.end_array();
    jw.key("summary");
    jw.begin_object();
    for (const auto& p : rep.summary) jw.kv(p.first, p.second);
    jw.end_object();
    jw.kv_array("notes", rep.notes);
    jw.kv("status", status_name(rep.status));
    jw.end_object();
}

void write_output(const std::string& out_path, const std::string& doc) {
    if (out_path.empty()) {
        std::cout << doc;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot open output file: " + out_path);
    f << doc;
}

JsonWriter report_head(const std::string& command, std::uint64_t seed) {
    JsonWriter jw;
    jw.begin_object();
    jw.kv("version", fkh::kVersion);
    jw.kv("command", command);
    jw.kv("seed", static_cast<unsigned long long>(seed));
    return jw;
}

void emit_value_pair(JsonWriter& jw, const std::string& name, const fkh::ValuePair& vp) {
    jw.key(name);
    jw.begin_object();
    jw.kv("closed_form", vp.closed_form);
    jw.kv("quadrature", vp.quadrature);
    jw.end_object();
}

int run_constants(Settings& st, const std::string& out_path, int threads) {
    (void)threads;
    int n = st.get_int("n", 3);
    double s = st.get_double("s", 0.75);
    double L = st.get_double("L", 1.0);
    double SC = st.get_double("SC", 1.0);
    double eta0 = st.get_double("eta0", 0.1);
    std::uint64_t seed = st.get_u64("seed", 0);
    st.finish();
    fkh::ConstantsReport rep = fkh::ellipticity_threshold(n, s, L, SC, eta0);
    JsonWriter jw = report_head("constants", seed);
    st.emit_config(jw);
    jw.key("report");
    jw.begin_object();
    jw.kv("n", rep.n);
    jw.kv("s", rep.s);
    jw.kv("L", rep.L);
    jw.kv("SC", rep.SC);
    jw.kv("eta0", rep.eta0);
    emit_value_pair(jw, "C1", rep.C1);
    emit_value_pair(jw, "C2", rep.C2);
    emit_value_pair(jw, "C3", rep.C3);
    emit_value_pair(jw, "mu1", rep.mu1);
    emit_value_pair(jw, "eps1", rep.eps1);
    emit_value_pair(jw, "g_eps1", rep.g_eps1);
    emit_value_pair(jw, "mu0", rep.mu0);
    emit_value_pair(jw, "C5", rep.C5);
    emit_value_pair(jw, "C", rep.C);
    emit_value_pair(jw, "C4", rep.C4);
    emit_value_pair(jw, "eps0", rep.eps0);
    jw.kv("slack_bound", rep.slack_bound);
    jw.end_object();
    jw.end_object();
    write_output(out_path, jw.str());
    return 0;
}

int run_envelope_check(Settings& st, const std::string& out_path, int threads) {
    (void)threads;
    int n = st.get_int("n", 3);
    int k = st.get_int("k", 2);
    int samples = st.get_int("samples", 500);
    std::uint64_t seed = st.get_u64("seed", 1);
    double fd_h = st.get_double("fd_h", 1e-5);
    double fd_tol = st.get_double("fd_tol", 1e-6);
    st.finish();
    if (n < 2 || n > 8) throw ConfigError("n must lie in [2, 8] for envelope-check");
    if (k < 1 || k > n) throw ConfigError("k must lie in [1, n] for envelope-check");

    ExperimentReport rep;
    rep.name = "envelope_invariants";
    rep.in("n", n);
    rep.in("k", k);
    rep.in("samples", samples);
    auto rng = fkh::make_rng(seed);
    double worst_fd = 0.0, worst_det = 0.0, worst_gap_low = 0.0, worst_touch = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        Vector sigma = fkh::sample_cone_vector(n, k, rng);
        fkh::Matrix q = fkh::random_orthogonal(n, rng);
        SymMatrix b(q * sigma.asDiagonal() * q.transpose());
        fkh::EnvelopeMatrix m = fkh::dfk(b, k);
        fkh::Matrix fd = fkh::dfk_fd(b, k, fd_h);
        double rel = (m.M.matrix() - fd).norm() / m.M.matrix().norm();
        worst_fd = std::max(worst_fd, rel);
        min_eig = std::min(min_eig, m.M.eigenvalues()[0]);
        if (k == n) {
            double det = m.M.matrix().determinant();
            double target = std::pow(static_cast<double>(n), -n);
            worst_det = std::max(worst_det, std::abs(det - target) / target);
        }
        Vector asig = fkh::sample_cone_vector(n, k, rng);
        fkh::Matrix qa = fkh::random_orthogonal(n, rng);
        SymMatrix a(qa * asig.asDiagonal() * qa.transpose());
        worst_gap_low = std::min(worst_gap_low, fkh::envelope_gap(a, b, k));
        std::uniform_real_distribution<double> scale(0.5, 2.0);
        SymMatrix b_scaled(b.matrix() * scale(rng));
        worst_touch = std::max(worst_touch, std::abs(fkh::envelope_gap(b_scaled, b, k)));
    }
    rep.out("worst_fd_rel", worst_fd);
    rep.out("min_matrix_eigenvalue", min_eig);
    if (k == n) rep.out("worst_det_rel", worst_det);
    rep.out("worst_gap_below_zero", worst_gap_low);
    rep.out("worst_touching_gap", worst_touch);
    bool pass = worst_fd <= fd_tol && min_eig > 0.0 && worst_gap_low >= -1e-10 &&
                worst_touch <= 1e-10 && (k != n || worst_det <= 1e-9);
    rep.status = pass ? ExperimentStatus::kPass : ExperimentStatus::kFail;

    JsonWriter jw = report_head("envelope-check", seed);
    st.emit_config(jw);
    jw.key("report");
    emit_report_body(jw, rep);
    jw.end_object();
    write_output(out_path, jw.str());
    return rep.passed() ? 0 : 1;
}

Vector read_point(Settings& st, int n) {
    std::string def = "0";
    for (int i = 1; i < n; ++i) def += ",0";
    std::vector<double> xs = st.get_list("x", def);
    if (static_cast<int>(xs.size()) != n) {
        throw ConfigError("key 'x': expected " + std::to_string(n) + " coordinates");
    }
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = xs[i];
    return x;
}

int run_eval(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 3);
    int k = st.get_int("k", 2);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    std::string bdiag_def = "1";
    for (int i = 1; i < n; ++i) bdiag_def += ",1";
    std::vector<double> bdiag = st.get_list("b_diag", bdiag_def);
    Vector x = read_point(st, n);
    std::string path = st.get_string("path", "z");
    std::uint64_t seed = st.get_u64("seed", 0);
    fkh::QuadratureSpec quad = read_quad(st, threads);
    st.finish();
    if (static_cast<int>(bdiag.size()) != n) {
        throw ConfigError("key 'b_diag': expected " + std::to_string(n) + " entries");
    }
    if (path != "z" && path != "y" && path != "both") {
        throw ConfigError("key 'path': expected z, y, or both");
    }
    TestFunctionProfile u = fkh::profile_by_name(prof, n);
    Vector bd(n);
    for (int i = 0; i < n; ++i) bd[i] = bdiag[i];
    fkh::EnvelopeMatrix m = fkh::dfk(SymMatrix::diagonal(bd), k);

    JsonWriter jw = report_head("eval", seed);
    st.emit_config(jw);
    jw.key("matrix_eigenvalues");
    jw.begin_array();
    for (int i = 0; i < n; ++i) jw.value(m.M.eigenvalues()[i]);
    jw.end_array();
    jw.key("results");
    jw.begin_array();
    auto emit_one = [&](const char* tag, const fkh::FracopResult& r) {
        jw.begin_object();
        jw.kv("path", tag);
        jw.kv("value", r.value);
        jw.kv("trunc_bound", r.trunc_bound);
        jw.kv("mc_stderr", r.mc_stderr);
        jw.end_object();
    };
    if (path == "z" || path == "both") {
        emit_one("z", fkh::linear_fracop(u, m.M, x, s, quad));
    }
    if (path == "y" || path == "both") {
        emit_one("y", fkh::linear_fracop_ycoords(u, m.M, x, s, quad));
    }
    jw.end_array();
    jw.end_object();
    write_output(out_path, jw.str());
    return 0;
}

int run_inf(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 3);
    int k = st.get_int("k", 2);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    Vector x = read_point(st, n);
    std::string mode = st.get_string("mode", "auto");
    fkh::InfOptions opts;
    opts.n_starts = st.get_int("n_starts", opts.n_starts);
    opts.seed = st.get_u64("seed", opts.seed);
    double min_lambda = st.get_double("min_lambda", 0.0);
    opts.nm.max_evals = st.get_int("nm_max_evals", opts.nm.max_evals);
    opts.quad = read_quad(st, threads);
    st.finish();
    if (mode == "auto") {
        opts.mode = fkh::SearchMode::kAuto;
    } else if (mode == "diagonal") {
        opts.mode = fkh::SearchMode::kDiagonal;
    } else if (mode == "full") {
        opts.mode = fkh::SearchMode::kFull;
    } else {
        throw ConfigError("key 'mode': expected auto, diagonal, or full");
    }
    TestFunctionProfile u = fkh::profile_by_name(prof, n);
    fkh::InfResult res = min_lambda > 0.0
                             ? fkh::F_ks_restricted(u, x, k, s, min_lambda, opts)
                             : fkh::F_ks(u, x, k, s, opts);

    JsonWriter jw = report_head("inf", opts.seed);
    st.emit_config(jw);
    jw.key("result");
    jw.begin_object();
    jw.kv("value", res.value);
    jw.kv("converged", res.converged);
    jw.kv("n_starts", res.n_starts);
    jw.key("argmin_matrix");
    jw.begin_array();
    for (int i = 0; i < n; ++i) {
        jw.begin_array();
        for (int j = 0; j < n; ++j) jw.value(res.argmin.M(i, j));
        jw.end_array();
    }
    jw.end_array();
    jw.key("argmin_eigenvalues");
    jw.begin_array();
    for (int i = 0; i < n; ++i) jw.value(res.argmin.M.eigenvalues()[i]);
    jw.end_array();
    jw.kv_array("history", res.history);
    jw.end_object();
    jw.end_object();
    write_output(out_path, jw.str());
    return 0;
}

std::vector<double> eps_grid(Settings& st) {
    if (st.get_string("eps_list", "").empty()) {
        double lo = st.get_double("eps_min", 1e-3);
        double hi = st.get_double("eps_max", 1e-1);
        int count = st.get_int("eps_count", 7);
        if (!(lo > 0.0) || !(hi > lo) || count < 2) {
            throw ConfigError("eps grid requires 0 < eps_min < eps_max and eps_count >= 2");
        }
        std::vector<double> eps(count);
        for (int i = 0; i < count; ++i) {
            eps[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
        }
        return eps;
    }
    return st.get_list("eps_list", "");
}

int run_blowup(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 3);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    std::vector<double> eps = eps_grid(st);
    double eta0 = st.get_double("eta0", 0.0);
    double slope_tol = st.get_double("slope_tol", 0.05);
    std::uint64_t seed = st.get_u64("seed", 0);
    fkh::QuadratureSpec quad = read_quad(st, threads);
    st.finish();
    TestFunctionProfile u = fkh::profile_by_name(prof, n);
    ExperimentReport rep = fkh::blowup_experiment(u, n, s, eps, quad, eta0, slope_tol);
    JsonWriter jw = report_head("blowup", seed);
    st.emit_config(jw);
    jw.key("report");
    emit_report_body(jw, rep);
    jw.end_object();
    write_output(out_path, jw.str());
    return rep.passed() ? 0 : 1;
}

int run_subspace(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 3);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    int frames = st.get_int("frames", 32);
    std::uint64_t seed = st.get_u64("seed", 1);
    double eta0 = st.get_double("eta0", 0.0);
    fkh::QuadratureSpec quad = read_quad(st, threads);
    st.finish();
    TestFunctionProfile u = fkh::profile_by_name(prof, n);
    ExperimentReport rep = fkh::subspace_bounds_check(u, n, s, eta0, frames, seed, quad);
    JsonWriter jw = report_head("subspace", seed);
    st.emit_config(jw);
    jw.key("report");
    emit_report_body(jw, rep);
    jw.end_object();
    write_output(out_path, jw.str());
    return rep.passed() ? 0 : 1;
}

int run_eigencheck(Settings& st, const std::string& out_path, int threads) {
    (void)threads;
    int n = st.get_int("n", 3);
    std::vector<double> eps = st.get_list("eps_list", "0.01,0.05,0.2");
    int samples = st.get_int("samples", 500);
    std::uint64_t seed = st.get_u64("seed", 1);
    st.finish();
    bool all_pass = true;
    JsonWriter jw = report_head("eigencheck", seed);
    st.emit_config(jw);
    jw.key("reports");
    jw.begin_array();
    for (std::size_t i = 0; i < eps.size(); ++i) {
        ExperimentReport rep = fkh::eigenvalue_constraint_check(
            n, eps[i], samples, fkh::split_seed(seed, i));
        all_pass = all_pass && rep.passed();
        emit_report_body(jw, rep);
    }
    jw.end_array();
    jw.end_object();
    write_output(out_path, jw.str());
    return all_pass ? 0 : 1;
}

int run_ellipticity(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 3);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    double rel_tol = st.get_double("rel_tol", 1e-3);
    fkh::InfOptions opts;
    opts.n_starts = st.get_int("n_starts", opts.n_starts);
    opts.seed = st.get_u64("seed", opts.seed);
    opts.nm.max_evals = st.get_int("nm_max_evals", opts.nm.max_evals);
    opts.quad = read_quad(st, threads);
    st.finish();
    TestFunctionProfile u = fkh::profile_by_name(prof, n);
    Vector x = Vector::Zero(n);
    ExperimentReport rep = fkh::ellipticity_check(u, x, s, opts, rel_tol);
    JsonWriter jw = report_head("ellipticity", opts.seed);
    st.emit_config(jw);
    jw.key("report");
    emit_report_body(jw, rep);
    jw.end_object();
    write_output(out_path, jw.str());
    return rep.passed() ? 0 : 1;
}

int run_solve(Settings& st, const std::string& out_path, int threads) {
    int n = st.get_int("n", 2);
    int k = st.get_int("k", 2);
    double s = st.get_double("s", 0.75);
    std::string prof = st.get_string("profile", "smoothed_cone");
    int m = st.get_int("m", 64);
    double R = st.get_double("R", 8.0);
    fkh::SolveOptions opts;
    opts.omega = st.get_double("omega", opts.omega);
    opts.max_iters = st.get_int("max_iters", opts.max_iters);
    opts.residual_tol = st.get_double("residual_tol", opts.residual_tol);
    opts.radial_panels = st.get_int("radial_panels", opts.radial_panels);
    opts.gl_per_panel = st.get_int("gl_per_panel", opts.gl_per_panel);
    opts.anderson_window = st.get_int("anderson_window", opts.anderson_window);
    opts.cascadic = st.get_bool("cascadic", opts.cascadic);
    opts.quad.n_angular = st.get_int("n_angular", 16);
    opts.quad.r_max = st.get_double("r_max", opts.quad.r_max);
    opts.n_threads = threads;
    bool allow_n3 = st.get_bool("allow_n3", false);
    std::string prefix = st.get_string("out_prefix", "solve_out");
    std::uint64_t seed = st.get_u64("seed", 0);
    st.finish();
    if (n == 3 && !allow_n3) {
        throw ConfigError("n = 3 solves are coarse-grid only; set allow_n3 = true to confirm");
    }
    TestFunctionProfile phi = fkh::profile_by_name(prof, n);
    fkh::SolveResult res = fkh::solve_global(phi, k, s, n, R, m, opts);
    fkh::ModulusReport mods = fkh::modulus_report(res.u);
    fkh::save_grid(prefix, res.u, k, s, seed);
    {
        std::ofstream rf(prefix + "_residuals.csv");
        rf << "iteration,residual\n";
        for (std::size_t i = 0; i < res.residual_history.size(); ++i) {
            rf << i << "," << JsonWriter::format_double(res.residual_history[i]) << "\n";
        }
    }
    JsonWriter jw = report_head("solve", seed);
    st.emit_config(jw);
    jw.key("result");
    jw.begin_object();
    jw.kv("converged", res.converged);
    jw.kv("sweeps", res.sweeps);
    jw.kv("final_residual",
          res.residual_history.empty() ? -1.0 : res.residual_history.back());
    jw.kv("lipschitz_estimate", mods.lipschitz_estimate);
    jw.kv("semiconcavity_estimate", mods.semiconcavity_estimate);
    jw.key("artifacts");
    jw.begin_object();
    jw.kv("header", prefix + ".json");
    jw.kv("csv", prefix + ".csv");
    jw.kv("binary", prefix + ".bin");
    jw.kv("residuals", prefix + "_residuals.csv");
    jw.end_object();
    jw.end_object();
    jw.end_object();
    write_output(out_path, jw.str());
    return res.converged ? 0 : 1;
}

void add_keys(CLI::App* cmd, std::map<std::string, std::string>& ov,
              const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
        cmd->add_option_function<std::string>(
            "--" + key, [&ov, key](const std::string& v) { ov[key] = v; },
            "overrides config key '" + key + "'");
    }
}

const std::vector<std::string> kQuadKeys = {
    "n_radial", "n_angular", "r_min",   "r_max",
    "gl_per_panel", "tol",   "tail_policy", "allow_extreme_anisotropy", "mc_seed"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal degenerate elliptic operator toolkit"};
    app.require_subcommand(1);

    struct SubSpec {
        CLI::App* cmd;
        std::map<std::string, std::string> overrides;
        std::string config_path;
        std::string out_path;
        int threads = 0;
    };
    std::vector<std::unique_ptr<SubSpec>> subs;
    int rc = 0;

    auto make_sub = [&](const std::string& name, const std::string& desc,
                        std::vector<std::string> keys,
                        int (*runner)(Settings&, const std::string&, int)) {
        auto spec = std::make_unique<SubSpec>();
        SubSpec* sp = spec.get();
        sp->cmd = app.add_subcommand(name, desc);
        sp->cmd->add_option("--config", sp->config_path, "flat key = value settings file");
        sp->cmd->add_option("--out", sp->out_path, "write the JSON report here (default stdout)");
        sp->cmd->add_option("--threads", sp->threads, "worker thread cap (0 = auto)")
            ->envname("FRAC_HESSIAN_THREADS");
        add_keys(sp->cmd, sp->overrides, keys);
        sp->cmd->callback([sp, runner, &rc] {
            Settings st;
            if (!sp->config_path.empty()) st.attach_file(sp->config_path);
            for (const auto& p : sp->overrides) st.set_override(p.first, p.second);
            rc = runner(st, sp->out_path, sp->threads);
        });
        subs.push_back(std::move(spec));
    };

    auto with_quad = [](std::vector<std::string> keys) {
        keys.insert(keys.end(), kQuadKeys.begin(), kQuadKeys.end());
        return keys;
    };

    make_sub("constants", "two-route evaluation of the ellipticity constant chain",
             {"n", "s", "L", "SC", "eta0", "seed"}, run_constants);
    make_sub("envelope-check", "derivative and envelope invariants on random cone samples",
             {"n", "k", "samples", "seed", "fd_h", "fd_tol"}, run_envelope_check);
    make_sub("eval", "one anisotropic linear operator value at a point",
             with_quad({"n", "k", "s", "profile", "b_diag", "x", "path", "seed"}), run_eval);
    make_sub("inf", "infimum of linear operator values over admissible slope matrices",
             with_quad({"n", "k", "s", "profile", "x", "mode", "n_starts", "seed",
                        "min_lambda", "nm_max_evals"}),
             run_inf);
    make_sub("blowup", "degenerate-family sweep and log-log blow-up rate fit",
             with_quad({"n", "s", "profile", "eps_list", "eps_min", "eps_max", "eps_count",
                        "eta0", "slope_tol", "seed"}),
             run_blowup);
    make_sub("subspace", "restricted fractional Laplacian bounds over random frames",
             with_quad({"n", "s", "profile", "frames", "seed", "eta0"}), run_subspace);
    make_sub("eigencheck", "constrained-sample slope eigenvalue inequalities",
             {"n", "eps_list", "samples", "seed"}, run_eigencheck);
    make_sub("ellipticity", "restricted vs unrestricted infimum comparison at the origin",
             with_quad({"n", "s", "profile", "rel_tol", "n_starts", "seed", "nm_max_evals"}),
             run_ellipticity);
    make_sub("solve", "global fixed-point solve on a grid with far-field profile",
             {"n", "k", "s", "profile", "m", "R", "omega", "max_iters", "residual_tol",
              "radial_panels", "gl_per_panel", "anderson_window", "cascadic", "n_angular",
              "r_max", "allow_n3", "out_prefix", "seed"},
             run_solve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const fkh::Diverged& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    } catch (const fkh::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    return rc;
}
