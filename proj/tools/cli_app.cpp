#include "cli_app.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "adaptikh/experiments.hpp"

namespace fs = std::filesystem;
using namespace adaptikh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// 17 significant digits, locale-independent; round-trips every double.
std::string fmt(double v) {
    if (std::isnan(v)) return {};
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

struct Options {
    std::string problem = "blur";
    long size = 64;
    double psf_sigma = 4.0;
    long band = 12;
    double depth = 0.25;
    double noise = 1e-2;
    std::uint64_t seed = 0;
    double safety = 1.01;

    std::vector<std::string> rules;
    std::string stop;  // empty: rule default
    double tau = 1e-2;
    long maxit = 200;
    double init_param = 1e-10;

    double alpha_min = 1e-8;
    double alpha_max = 1.0;
    long alpha_count = 50;
    long kmax = 150;

    std::vector<std::string> surfaces{"error"};
    std::string out = ".";
    bool timing = false;
};

RuleKind parse_rule(const std::string& s) {
    if (s == "dp") return RuleKind::DP;
    if (s == "gcv") return RuleKind::GCV;
    if (s == "qo") return RuleKind::QO;
    if (s == "reginska") return RuleKind::Reginska;
    throw CLI::ValidationError("--rule", "unknown rule '" + s + "'");
}

StopRuleId parse_stop(const std::string& s) {
    if (s == "dp-residual") return StopRuleId::DPResidual;
    if (s == "dp-averaged") return StopRuleId::DPAveraged;
    if (s == "dp-combined") return StopRuleId::DPCombined;
    if (s == "sc1") return StopRuleId::SC1;
    if (s == "sc2") return StopRuleId::SC2;
    throw CLI::ValidationError("--stop", "unknown stopping rule '" + s + "'");
}

StopRuleId default_stop(RuleKind rule) {
    return rule == RuleKind::DP ? StopRuleId::DPResidual : StopRuleId::SC1;
}

SurfaceKind parse_surface(const std::string& s) {
    if (s == "error") return SurfaceKind::Error;
    if (s == "dp") return SurfaceKind::DP;
    if (s == "gcv") return SurfaceKind::GCV;
    if (s == "qo") return SurfaceKind::QO;
    if (s == "reginska") return SurfaceKind::Reginska;
    throw CLI::ValidationError("--surfaces", "unknown surface type '" + s + "'");
}

TestProblem build_problem(const Options& o) {
    TestProblem p;
    if (o.problem == "blur") {
        p = make_blur_problem(o.size, o.psf_sigma, o.band);
    } else if (o.problem == "gravity") {
        p = make_gravity_problem(o.size, o.depth);
    } else {
        throw InvalidArgument("unknown problem kind '" + o.problem + "'");
    }
    return add_noise(p, o.noise, o.seed, o.safety);
}

/// Self-describing header block common to every output file.
void write_config_header(std::ostream& os, const Options& o, const std::string& command) {
    os << "# command=" << command << "\n"
       << "# problem=" << o.problem << "\n"
       << "# size=" << o.size << "\n"
       << "# psf_sigma=" << fmt(o.psf_sigma) << "\n"
       << "# band=" << o.band << "\n"
       << "# depth=" << fmt(o.depth) << "\n"
       << "# noise=" << fmt(o.noise) << "\n"
       << "# seed=" << o.seed << "\n"
       << "# safety=" << fmt(o.safety) << "\n"
       << "# rule=";
    for (size_t i = 0; i < o.rules.size(); ++i) os << (i ? "," : "") << o.rules[i];
    os << "\n"
       << "# stop=" << o.stop << "\n"
       << "# tau=" << fmt(o.tau) << "\n"
       << "# maxit=" << o.maxit << "\n"
       << "# init=" << fmt(o.init_param) << "\n"
       << "# alpha_min=" << fmt(o.alpha_min) << "\n"
       << "# alpha_max=" << fmt(o.alpha_max) << "\n"
       << "# alpha_count=" << o.alpha_count << "\n"
       << "# kmax=" << o.kmax << "\n"
       << "# timing=" << (o.timing ? 1 : 0) << "\n";
}

std::ofstream open_output(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / name;
    std::ofstream os(path, std::ios::binary);  // LF line endings everywhere
    if (!os) throw InvalidArgument("cannot open output file " + path.string());
    return os;
}

void write_trace_csv(std::ostream& os, const SolveReport& rep, bool timing) {
    os << "k,param_alpha,Pk_value,dPk,stop_metric,rre,wall_ms\n";
    for (const auto& te : rep.trace) {
        os << te.k << ',' << fmt(te.alpha) << ',' << fmt(te.p_value) << ',' << fmt(te.dp_value)
           << ',' << fmt(te.stop_metric) << ',' << fmt(te.rre) << ','
           << (timing ? fmt(te.wall_ms) : std::string()) << "\n";
    }
}

void write_solution_csv(std::ostream& os, const Vector& x, Index img_size) {
    if (img_size > 0) {
        for (Index i = 0; i < img_size; ++i) {
            for (Index j = 0; j < img_size; ++j)
                os << (j ? "," : "") << fmt(x[i * img_size + j]);
            os << "\n";
        }
    } else {
        for (Index i = 0; i < x.size(); ++i) os << fmt(x[i]) << "\n";
    }
}

int cmd_solve(const Options& o) {
    if (o.rules.size() != 1) {
        std::fprintf(stderr, "solve: exactly one --rule is required\n");
        return kExitUsage;
    }
    const RuleKind rule = parse_rule(o.rules[0]);
    const StopRuleId stop = o.stop.empty() ? default_stop(rule) : parse_stop(o.stop);
    if (!valid_pairing(rule, stop)) {
        std::fprintf(stderr, "solve: stopping rule '%s' cannot be paired with rule '%s'\n",
                     to_string(stop), to_string(rule));
        return kExitUsage;
    }
    if (rule == RuleKind::DP && o.noise == 0.0) {
        std::fprintf(stderr,
                     "solve: the discrepancy principle needs noisy data (epsilon > 0); "
                     "--noise 0 gives epsilon = 0 and the discrepancy equation has no "
                     "meaningful root\n");
        return kExitUsage;
    }

    const TestProblem p = build_problem(o);
    SolveOptions so;
    so.rule = rule;
    so.stop = stop;
    so.tau = o.tau;
    so.maxit = static_cast<int>(o.maxit);
    so.init_param = o.init_param;
    const SolveReport rep = adaptive_solve(p, so);

    Options echo = o;
    echo.stop = to_string(stop);
    auto ts = open_output(o, "trace.csv");
    write_config_header(ts, echo, "solve");
    write_trace_csv(ts, rep, o.timing);
    auto ss = open_output(o, "solution.csv");
    write_config_header(ss, echo, "solve");
    write_solution_csv(ss, rep.x, p.img_size);

    const double final_rre = rep.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : rep.trace.back().rre;
    std::printf("k=%d alpha=%s rre=%s stopped_by=%s%s\n", rep.k_final,
                fmt(rep.alpha_final).c_str(), fmt(final_rre).c_str(), to_string(rep.stopped_by),
                rep.breakdown ? " (breakdown)" : "");
    return kExitOk;
}

int cmd_surface(const Options& o) {
    if (o.rules.size() > 1) {
        std::fprintf(stderr, "surface: at most one --rule for the overlay markers\n");
        return kExitUsage;
    }
    const RuleKind rule = o.rules.empty() ? RuleKind::DP : parse_rule(o.rules[0]);
    const StopRuleId stop = o.stop.empty() ? default_stop(rule) : parse_stop(o.stop);
    if (!valid_pairing(rule, stop)) {
        std::fprintf(stderr, "surface: stopping rule '%s' cannot be paired with rule '%s'\n",
                     to_string(stop), to_string(rule));
        return kExitUsage;
    }
    std::vector<SurfaceKind> kinds;
    for (const auto& s : o.surfaces) kinds.push_back(parse_surface(s));
    if (kinds.empty()) {
        std::fprintf(stderr, "surface: no surface types requested\n");
        return kExitUsage;
    }

    const TestProblem p = build_problem(o);
    const Vector alphas = log_spaced(o.alpha_min, o.alpha_max, static_cast<int>(o.alpha_count));
    const int threads = default_thread_count();

    SurfaceEngine engine(p, static_cast<int>(o.kmax));
    Options echo = o;
    echo.rules = {std::string(to_string(rule))};
    echo.stop = to_string(stop);

    for (SurfaceKind kind : kinds) {
        const SurfaceData data = engine.compute(kind, alphas, threads);
        auto os = open_output(o, std::string("surface_") + to_string(kind) + ".csv");
        write_config_header(os, echo, std::string("surface:") + to_string(kind));
        os << "alpha,k,z\n";
        for (int k = 1; k <= data.kmax; ++k)  // row-major: k outer, alpha inner
            for (Index j = 0; j < alphas.size(); ++j)
                os << fmt(alphas[j]) << ',' << k << ',' << fmt(data.z(k - 1, j)) << "\n";
    }

    // Overlay markers: adaptive trace, hybrid trace, per-k optimum of the
    // error surface.
    SolveOptions so;
    so.rule = rule;
    so.stop = stop;
    so.tau = o.tau;
    so.maxit = static_cast<int>(o.maxit);
    so.init_param = o.init_param;
    const SolveReport ra = adaptive_solve(p, so);
    HybridOptions ho;
    ho.rule = rule;
    ho.tau_outer = o.tau;
    ho.maxit = static_cast<int>(o.maxit);
    const SolveReport rh = hybrid_solve(p, ho);
    const SurfaceData err = engine.compute(SurfaceKind::Error, alphas, threads);

    auto ms = open_output(o, "markers.csv");
    write_config_header(ms, echo, "surface:markers");
    ms << "kind,k,alpha,z\n";
    for (const auto& te : ra.trace) ms << "adaptive," << te.k << ',' << fmt(te.alpha) << ','
                                       << fmt(te.rre) << "\n";
    for (const auto& te : rh.trace) ms << "hybrid," << te.k << ',' << fmt(te.alpha) << ','
                                       << fmt(te.rre) << "\n";
    for (int k = 1; k <= err.kmax; ++k)
        ms << "optimal," << k << ',' << fmt(err.optimal_alpha[k - 1]) << ','
           << fmt(err.optimal_z[k - 1]) << "\n";
    return kExitOk;
}

int cmd_compare(const Options& o) {
    if (o.rules.empty()) {
        std::fprintf(stderr, "compare: at least one --rule is required\n");
        return kExitUsage;
    }
    const TestProblem p = build_problem(o);
    const Vector alphas = log_spaced(o.alpha_min, o.alpha_max, static_cast<int>(o.alpha_count));
    const SurfaceEngine engine(p, static_cast<int>(o.kmax));
    const SurfaceData err = engine.compute(SurfaceKind::Error, alphas, default_thread_count());

    for (const auto& rname : o.rules) {
        const RuleKind rule = parse_rule(rname);
        const StopRuleId stop = o.stop.empty() ? default_stop(rule) : parse_stop(o.stop);
        if (!valid_pairing(rule, stop)) {
            std::fprintf(stderr, "compare: stopping rule '%s' cannot be paired with rule '%s'\n",
                         to_string(stop), to_string(rule));
            return kExitUsage;
        }
        SolveOptions so;
        so.rule = rule;
        so.stop = stop;
        so.tau = o.tau;
        so.maxit = static_cast<int>(o.maxit);
        so.init_param = o.init_param;
        const SolveReport ra = adaptive_solve(p, so);
        HybridOptions ho;
        ho.rule = rule;
        ho.tau_outer = o.tau;
        ho.maxit = static_cast<int>(o.maxit);
        const SolveReport rh = hybrid_solve(p, ho);

        Options echo = o;
        echo.rules = {rname};
        echo.stop = to_string(stop);
        auto os = open_output(o, "compare_" + rname + ".csv");
        write_config_header(os, echo, "compare:" + rname);
        os << "k,alpha_adaptive,alpha_hybrid,alpha_optimal,rre_adaptive,rre_hybrid,rre_optimal\n";
        const int kmax = std::max({static_cast<int>(ra.trace.size()),
                                   static_cast<int>(rh.trace.size()), err.kmax});
        for (int k = 1; k <= kmax; ++k) {
            const auto* ta = k <= static_cast<int>(ra.trace.size()) ? &ra.trace[k - 1] : nullptr;
            const auto* th = k <= static_cast<int>(rh.trace.size()) ? &rh.trace[k - 1] : nullptr;
            os << k << ',' << (ta ? fmt(ta->alpha) : std::string()) << ','
               << (th ? fmt(th->alpha) : std::string()) << ','
               << (k <= err.kmax ? fmt(err.optimal_alpha[k - 1]) : std::string()) << ','
               << (ta ? fmt(ta->rre) : std::string()) << ','
               << (th ? fmt(th->rre) : std::string()) << ','
               << (k <= err.kmax ? fmt(err.optimal_z[k - 1]) : std::string()) << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"adaptikh: adaptive Tikhonov regularization with interlaced GKB iterations"};
    app.require_subcommand(1);
    app.fallthrough();  // lets `adaptikh solve --config FILE` reach the app-level option
    app.set_config("--config", "",
                   "key=value file with a [solve] / [surface] / [compare] section");
    app.allow_config_extras(false);  // unknown keys are an error
    Options o;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--problem", o.problem, "Test problem kind: blur|gravity")
            ->check(CLI::IsMember({"blur", "gravity"}));
        cmd->add_option("--size", o.size, "Image side (blur) or grid size (gravity)");
        cmd->add_option("--psf-sigma", o.psf_sigma, "Gaussian PSF width (blur)");
        cmd->add_option("--band", o.band, "PSF truncation half-width (blur)");
        cmd->add_option("--depth", o.depth, "Kernel depth parameter (gravity)");
        cmd->add_option("--noise", o.noise, "Relative noise level ||e||/||b||");
        cmd->add_option("--seed", o.seed, "Noise RNG seed");
        cmd->add_option("--safety", o.safety, "epsilon = safety * ||e||");
        cmd->add_option("--rule", o.rules, "Parameter rule: dp|gcv|qo|reginska");
        cmd->add_option("--stop", o.stop,
                        "Stopping rule: dp-residual|dp-averaged|dp-combined|sc1|sc2");
        cmd->add_option("--tau", o.tau, "Stopping tolerance");
        cmd->add_option("--maxit", o.maxit, "Maximum iterations");
        cmd->add_option("--init", o.init_param, "Initial parameter (beta for dp, alpha else)");
        cmd->add_option("--alpha-min", o.alpha_min, "Grid: smallest alpha");
        cmd->add_option("--alpha-max", o.alpha_max, "Grid: largest alpha");
        cmd->add_option("--alpha-count", o.alpha_count, "Grid: number of alpha samples");
        cmd->add_option("--kmax", o.kmax, "Grid: largest subspace dimension");
        cmd->add_option("--out", o.out, "Output directory");
        cmd->add_flag("--timing", o.timing, "Populate the wall_ms column (non-reproducible)");
        return cmd;
    };

    auto* solve = add_common(app.add_subcommand("solve", "Run the adaptive solver"));
    auto* surface = add_common(
        app.add_subcommand("surface", "Emit error / higher-level surfaces over (alpha, k)"));
    surface->add_option("--surfaces", o.surfaces,
                        "Surface types: error|dp|gcv|qo|reginska (repeatable)");
    auto* compare =
        add_common(app.add_subcommand("compare", "Adaptive vs hybrid vs optimal, per rule"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(o);
        if (surface->parsed()) return cmd_surface(o);
        if (compare->parsed()) return cmd_compare(o);
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("adaptikh");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}
