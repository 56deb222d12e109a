// Command-line front end: wires run configurations to the spectrum, covariant
// vector, scalar-field, gauge, bound and section pipelines, and emits
// machine-readable reports (a JSON summary per command plus CSV data files).

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "clvlab/analysis.hpp"
#include "clvlab/config.hpp"
#include "clvlab/parallel.hpp"
#include "clvlab/poincare.hpp"

using namespace clvlab;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "clvlab 0.1.0";

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
};

struct RunContext {
    RunConfig cfg;
    BuiltSystem sys;
    IntegratorConfig integ;
    std::filesystem::path out;
    int jobs = 1;
    std::chrono::steady_clock::time_point started;
};

RunContext make_context(const CommonArgs& args) {
    RunContext ctx{RunConfig::from_file(args.config_path), {}, {}, args.out_dir, 1,
                   std::chrono::steady_clock::now()};
    if (args.seed_set) ctx.cfg.set("seed", std::to_string(args.seed));
    if (args.jobs > 0) ctx.cfg.set("jobs", std::to_string(args.jobs));
    ctx.sys = build_system(ctx.cfg);
    ctx.integ = build_integrator(ctx.cfg, ctx.sys);
    ctx.jobs = static_cast<int>(ctx.cfg.get_int("jobs", 1));
    if (ctx.jobs < 1) throw ConfigError("config key 'jobs': must be >= 1");
    std::filesystem::create_directories(ctx.out);
    return ctx;
}

void write_report(const RunContext& ctx, const std::string& command, ordered_json results) {
    ordered_json report;
    report["command"] = command;
    report["version"] = kVersion;
    ordered_json cfg_json;
    for (const auto& [k, v] : ctx.cfg.entries()) cfg_json[k] = v;
    report["config"] = std::move(cfg_json);
    report["results"] = std::move(results);
    report["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
    std::ofstream out(ctx.out / (command + ".json"));
    out << report.dump(2) << "\n";
}

void write_history_csv(const std::filesystem::path& path, const LyapunovSpectrum& spec) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::fputs("t", f);
    for (int j = 0; j < spec.m; ++j) std::fprintf(f, ",lambda_%d", j + 1);
    std::fputs("\n", f);
    for (std::size_t k = 0; k < spec.intervals(); ++k) {
        std::fprintf(f, "%.17g", static_cast<double>(k + 1) * spec.qr_interval);
        for (int j = 0; j < spec.m; ++j)
            std::fprintf(f, ",%.17g", spec.history[k * spec.m + j]);
        std::fputs("\n", f);
    }
    std::fclose(f);
}

void write_clv_csv(const std::filesystem::path& path, const std::vector<ClvSample>& samples) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    if (samples.empty()) {
        std::fclose(f);
        return;
    }
    const int n = static_cast<int>(samples[0].state.size());
    const int m = samples[0].vectors.cols;
    std::fputs("t", f);
    for (int i = 0; i < n; ++i) std::fprintf(f, ",x%d", i + 1);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) std::fprintf(f, ",v%d_%d", j + 1, i + 1);
    std::fputs("\n", f);
    for (const ClvSample& s : samples) {
        std::fprintf(f, "%.17g", s.time);
        for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", s.state[i]);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", s.vectors(i, j));
        std::fputs("\n", f);
    }
    std::fclose(f);
}

ordered_json spectrum_json(const LyapunovSpectrum& spec) {
    ordered_json j;
    j["exponents"] = spec.exponents;
    j["stderrs"] = spec.stderrs;
    j["qr_interval"] = spec.qr_interval;
    j["direction"] = spec.direction == TimeDirection::forward ? "forward" : "backward";
    return j;
}

StateVector single_initial_state(RunConfig& cfg, const BuiltSystem& sys) {
    auto ics = resolve_initial_states(cfg, sys);
    if (ics.size() != 1)
        throw ConfigError("this command needs exactly one initial state; got " +
                          std::to_string(ics.size()));
    return ics[0];
}

GinelliParams ginelli_params(RunConfig& cfg, const BuiltSystem& sys) {
    GinelliParams p;
    p.t_store = cfg.get_double("t_store");
    p.t_transient = cfg.get_double("t_transient", 0.2 * p.t_store);
    p.t_discard = cfg.get_double("t_discard", 0.2 * p.t_store);
    p.qr_interval = cfg.get_double("qr_interval", 1.0);
    p.m = static_cast<int>(cfg.get_int("m", sys.def.dim));
    p.seed = cfg.get_u64("seed", 1);
    p.memory_budget =
        static_cast<std::size_t>(cfg.get_int("memory_budget_mb", 256)) * 1024 * 1024;
    return p;
}

// Scalar series of the unit flow-direction field along a seeded trajectory;
// the b series of the exponent-zero covariant field (b = c in the unit gauge).
ScalarFieldSeries zero_mode_series(RunContext& ctx, const StateVector& x0, double t_total,
                                   double sample_every, TangentTrajectory& traj_out) {
    traj_out = evolve(ctx.sys.def, x0, Matrix{}, ctx.integ, t_total, sample_every);
    const auto samples = flow_direction_samples(ctx.sys.def, traj_out);
    return scalar_c_along(ctx.sys.def, MetricTensor::identity(ctx.sys.def.dim), samples, 0);
}

int cmd_spectrum(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    const double t_total = ctx.cfg.get_double("t_total");
    const double tau = ctx.cfg.get_double("qr_interval", 1.0);
    const int m = static_cast<int>(ctx.cfg.get_int("m", ctx.sys.def.dim));
    const double t_transient = ctx.cfg.get_double("t_transient", 0.0);
    const StateVector x0 = single_initial_state(ctx.cfg, ctx.sys);

    LyapunovSpectrum fwd, bwd;
    for_each_index(2, std::min(ctx.jobs, 2), [&](std::size_t i) {
        if (i == 0)
            fwd = benettin_spectrum(ctx.sys.def, x0, ctx.integ, t_total, tau, m, t_transient);
        else
            bwd = backward_spectrum(ctx.sys.def, x0, ctx.integ, t_total, tau, m, t_transient);
    });

    write_history_csv(ctx.out / "history_forward.csv", fwd);
    write_history_csv(ctx.out / "history_backward.csv", bwd);

    // Pairing per lambda_j = lambda_j^+ = -lambda_j^-: descending forward vs
    // negated ascending backward.
    double pairing = 0.0;
    for (int j = 0; j < m; ++j)
        pairing = std::max(pairing, std::abs(fwd.exponents[j] + bwd.exponents[m - 1 - j]));

    ordered_json results;
    results["forward"] = spectrum_json(fwd);
    results["backward"] = spectrum_json(bwd);
    results["pairing_max_mismatch"] = pairing;
    results["degenerate_indices"] = degenerate_indices(fwd);
    if (ctx.sys.modes) results["eigenvalue_oracle"] = ctx.sys.modes->exponents;
    write_report(ctx, "spectrum", std::move(results));
    return 0;
}

int cmd_clv(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    GinelliParams p = ginelli_params(ctx.cfg, ctx.sys);
    const double t_probe = ctx.cfg.get_double("t_probe", 10.0);
    const StateVector x0 = single_initial_state(ctx.cfg, ctx.sys);

    std::vector<ClvSample> samples;
    LyapunovSpectrum spec;
    for_each_index(2, std::min(ctx.jobs, 2), [&](std::size_t i) {
        if (i == 0)
            samples = ginelli_clv(ctx.sys.def, x0, ctx.integ, p);
        else
            spec = benettin_spectrum(ctx.sys.def, x0, ctx.integ, p.t_store, p.qr_interval, p.m,
                                     p.t_transient);
    });
    write_clv_csv(ctx.out / "clv_samples.csv", samples);

    ordered_json results;
    results["spectrum"] = spectrum_json(spec);
    const auto degenerate = degenerate_indices(spec);
    results["degenerate_indices"] = degenerate;
    results["degenerate_warning"] =
        !degenerate.empty()
            ? "covariant vectors in the flagged exponent cluster are untrusted"
            : "";

    const MetricTensor g = MetricTensor::identity(ctx.sys.def.dim);
    const ClvSample& mid = samples[samples.size() / 2];
    ordered_json per_column = ordered_json::array();
    for (int j = 0; j < p.m; ++j) {
        ordered_json col;
        col["column"] = j;
        const auto [lf, lb] =
            clv_exponent_check(ctx.sys.def, mid.state, mid.vectors.col(j), ctx.integ, t_probe);
        col["lambda_forward_est"] = lf;
        col["lambda_backward_est"] = lb;
        const auto c = scalar_c_along(ctx.sys.def, g, samples, j);
        col["clf_residual"] = clf_residual(ctx.sys.def, samples, c, j);
        if (ctx.sys.modes) {
            double worst = 0.0;
            for (const ClvSample& s : samples)
                worst = std::max(worst,
                                 line_angle(s.vectors.col(j), ctx.sys.modes->vectors.col(j)));
            col["max_angle_to_eigenvector"] = worst;
        }
        if (ctx.sys.def.is_hamiltonian) {
            Vec angles;
            angles.reserve(samples.size());
            for (const ClvSample& s : samples)
                angles.push_back(line_angle(s.vectors.col(j), ctx.sys.def.field_at(s.state)));
            std::sort(angles.begin(), angles.end());
            col["median_angle_to_flow"] = angles[angles.size() / 2];
        }
        per_column.push_back(std::move(col));
    }
    results["columns"] = std::move(per_column);
    write_report(ctx, "clv", std::move(results));
    return 0;
}

int cmd_bfield(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    GinelliParams p = ginelli_params(ctx.cfg, ctx.sys);
    const StateVector x0 = single_initial_state(ctx.cfg, ctx.sys);

    std::vector<ClvSample> samples;
    LyapunovSpectrum spec;
    for_each_index(2, std::min(ctx.jobs, 2), [&](std::size_t i) {
        if (i == 0)
            samples = ginelli_clv(ctx.sys.def, x0, ctx.integ, p);
        else
            spec = benettin_spectrum(ctx.sys.def, x0, ctx.integ, p.t_store, p.qr_interval, p.m,
                                     p.t_transient);
    });

    const MetricTensor g = MetricTensor::identity(ctx.sys.def.dim);
    const auto c = scalar_c_along(ctx.sys.def, g, samples, 0);
    write_series_csv(ctx.out / "c_series.csv", c);
    const auto avg = time_average(c);
    const double lambda1 = spec.exponents[0];
    const bool pass = std::abs(avg.value - lambda1) <= 3.0 * avg.sem;

    ordered_json results;
    results["c_average"] = avg.value;
    results["c_stderr"] = avg.sem;
    results["lambda_benettin"] = lambda1;
    results["lambda_stderr"] = spec.stderrs[0];
    results["abs_difference"] = std::abs(avg.value - lambda1);
    results["tolerance_3_stderr"] = 3.0 * avg.sem;
    results["le_integral_estimate"] = le_integral_estimate(ctx.sys.def, g, samples, 0);
    results["verdict"] = pass ? "PASS" : "FAIL";
    write_report(ctx, "bfield", std::move(results));
    return 0;
}

int cmd_gauge(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    const double t_total = ctx.cfg.get_double("t_total");
    const double sample_every = ctx.cfg.get_double("sample_every", 0.5);
    const StateVector x0 = single_initial_state(ctx.cfg, ctx.sys);

    const std::string kind = ctx.cfg.get_string("phi", "none");
    std::function<double(std::span<const double>)> phi_fn;
    if (kind == "none") {
        phi_fn = [](std::span<const double>) { return 0.0; };
    } else if (kind == "const") {
        const double c = ctx.cfg.get_double("phi_const", 1.0);
        phi_fn = [c](std::span<const double>) { return c; };
    } else if (kind == "coord") {
        const int i = static_cast<int>(ctx.cfg.get_int("phi_coord", 0));
        if (i < 0 || i >= ctx.sys.def.dim)
            throw ConfigError("config key 'phi_coord': index out of range");
        phi_fn = [i](std::span<const double> x) { return x[i]; };
    } else if (kind == "sin12") {
        phi_fn = [](std::span<const double> x) { return std::sin(x[0] * x[1]); };
    } else {
        throw ConfigError("config key 'phi': expected none, const, coord or sin12");
    }

    TangentTrajectory traj;
    const auto b = zero_mode_series(ctx, x0, t_total, sample_every, traj);
    GaugeFunction phi{phi_fn, 0.0};
    for (std::size_t k = 0; k < traj.size(); ++k)
        phi.bound = std::max(phi.bound, std::abs(phi_fn(traj.state(k))));
    const auto bp = gauge_transform(b, phi, traj);
    write_series_csv(ctx.out / "b_series.csv", b);
    write_series_csv(ctx.out / "b_gauged_series.csv", bp);

    const double avg_b = time_average(b).value;
    const double avg_bp = time_average(bp).value;
    const double telescoped =
        (phi_fn(traj.state(0)) - phi_fn(traj.state(traj.size() - 1))) / t_total;
    const double bound = 2.0 * phi.bound / t_total;

    ordered_json results;
    results["phi"] = kind;
    results["phi_sup"] = phi.bound;
    results["b_average"] = avg_b;
    results["b_gauged_average"] = avg_bp;
    results["difference"] = avg_bp - avg_b;
    results["telescoped_difference"] = telescoped;
    results["bound_2sup_over_T"] = bound;
    results["verdict"] = std::abs(avg_bp - avg_b) <= bound + 1e-15 ? "PASS" : "FAIL";
    write_report(ctx, "gauge", std::move(results));
    return 0;
}

int cmd_bound(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    const double t_total = ctx.cfg.get_double("t_total");
    const double tau = ctx.cfg.get_double("qr_interval", 1.0);
    const int m = static_cast<int>(ctx.cfg.get_int("m", ctx.sys.def.dim));
    const double t_transient = ctx.cfg.get_double("t_transient", 0.0);
    const double sample_every = ctx.cfg.get_double("sample_every", 0.5);
    const StateVector x0 = single_initial_state(ctx.cfg, ctx.sys);

    LyapunovSpectrum spec;
    TangentTrajectory traj;
    for_each_index(2, std::min(ctx.jobs, 2), [&](std::size_t i) {
        if (i == 0)
            spec = benettin_spectrum(ctx.sys.def, x0, ctx.integ, t_total, tau, m, t_transient);
        else
            traj = evolve(ctx.sys.def, x0, Matrix{}, ctx.integ, t_total, sample_every);
    });
    const MetricTensor g = MetricTensor::identity(ctx.sys.def.dim);
    const double bound = le_upper_bound(ctx.sys.def, g, traj);
    double max_abs = 0.0;
    for (double lam : spec.exponents) max_abs = std::max(max_abs, std::abs(lam));

    ordered_json results;
    results["upper_bound"] = bound;
    results["exponents"] = spec.exponents;
    results["max_abs_exponent"] = max_abs;
    results["verdict"] = bound >= max_abs ? "PASS" : "FAIL";
    write_report(ctx, "bound", std::move(results));
    return 0;
}

int cmd_poincare(const CommonArgs& args) {
    RunContext ctx = make_context(args);
    const double t_span = ctx.cfg.get_double("t_span");
    const double chunk = ctx.cfg.get_double("chunk_span", 50.0);
    const auto ics = resolve_initial_states(ctx.cfg, ctx.sys);

    SectionSpec spec;  // x = 0, px > 0, projected to (y, py)
    const auto portraits =
        section_portrait(ctx.sys.def, spec, ics, ctx.integ, t_span, ctx.jobs, chunk);
    write_section_csv(ctx.out / "section.csv", portraits);

    ordered_json orbits = ordered_json::array();
    bool any_failed = false;
    for (const auto& p : portraits) {
        ordered_json o;
        o["orbit_id"] = p.orbit_id;
        o["initial_state"] = p.initial_state;
        o["lambda1"] = p.lambda1;
        o["crossings"] = p.points.size();
        if (p.failed) {
            o["error"] = p.error;
            any_failed = true;
        }
        orbits.push_back(std::move(o));
    }
    ordered_json results;
    results["orbits"] = std::move(orbits);
    results["section"] = "x1 = 0, crossing direction +, projection (x2, x4)";
    write_report(ctx, "poincare", std::move(results));
    return any_failed ? kExitNumericalError : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) +
                 " - Lyapunov exponents and covariant Lyapunov vector fields"};
    app.require_subcommand(1);

    CommonArgs args;
    int (*handler)(const CommonArgs&) = nullptr;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "run configuration file")->required();
        sub->add_option("--out", args.out_dir, "output directory (default .)");
        sub->add_option("--seed", args.seed, "override the config seed")
            ->each([&](const std::string&) { args.seed_set = true; });
        sub->add_option("--jobs", args.jobs, "parallel workers across initial conditions");
    };
    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(const CommonArgs&);
    };
    const Cmd cmds[] = {
        {"spectrum", "forward and backward exponent spectra with pairing check", cmd_spectrum},
        {"clv", "covariant vectors by the dynamic method, with residual report", cmd_clv},
        {"bfield", "scalar field c along the top covariant vector and its average", cmd_bfield},
        {"gauge", "gauge-transformed scalar series comparison", cmd_gauge},
        {"bound", "metric upper bound for the exponent spectrum", cmd_bound},
        {"poincare", "section portrait with projected covariant vectors", cmd_poincare},
    };
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        sub->callback([&handler, fn = c.fn] { handler = fn; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        return handler(args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumericalError;
    }
}
