// Command-line front end: scenario selection and overrides, run
// execution, CSV/plot emission, and theorem-check reporting.
//
// Verbs:
//   run      one scenario under one law
//   compare  all three laws side by side (parallel workers)
//   check    run with the exact-derivative diagnostic + theorem check
//
// Exit status: 0 on success; 1 if the run diverged or a requested
// theorem check failed; 2 on usage/configuration errors.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <future>

#include "mrclc/config.hpp"
#include "mrclc/mrclc.hpp"

namespace {

struct Options {
    std::string scenario = "inverted_pendulum";
    std::string law = "composite";
    std::string out_dir;
    std::string config_file;
    std::vector<std::string> sets;
    bool emit_plots = false;
    bool theorem = false;
    bool true_derivative = false;
    double noise = 0.0;
    unsigned long long seed = 0;
};

void add_common_options(CLI::App* cmd, Options& o, bool with_law) {
    cmd->add_option("--scenario", o.scenario, "scenario registry name")
        ->capture_default_str();
    if (with_law)
        cmd->add_option("--law", o.law, "adaptation law: mrac | concurrent | composite")
            ->capture_default_str();
    cmd->add_option("--out", o.out_dir,
                    "output directory (default: $MRCLC_OUT_DIR or ./out)");
    cmd->add_option("--config", o.config_file, "flat key = value config file");
    cmd->add_option("--set", o.sets, "override, e.g. --set controller.k_w=0 (repeatable)")
        ->take_all();
    cmd->add_flag("--emit-plots", o.emit_plots, "also write gnuplot scripts");
    cmd->add_option("--noise", o.noise, "measurement-noise amplitude");
    cmd->add_option("--seed", o.seed, "noise seed");
}

mrclc::Law parse_law(const std::string& name) {
    if (auto law = mrclc::law_from_name(name)) return *law;
    throw mrclc::ParseError("unknown law '" + name +
                            "' (valid laws: mrac, concurrent, composite)");
}

std::filesystem::path resolve_out_dir(const Options& o) {
    if (!o.out_dir.empty()) return o.out_dir;
    if (const char* env = std::getenv("MRCLC_OUT_DIR"); env && *env) return env;
    return "out";
}

// Precedence: defaults, then the verb's own defaults, then the config
// file, then --set, then dedicated flags.
mrclc::Scenario build_scenario(const CLI::App* cmd, const Options& o, bool exact_default) {
    mrclc::Scenario sc = mrclc::make_scenario(o.scenario);
    sc.use_true_error_derivative = exact_default;
    if (!o.config_file.empty())
        for (const auto& [key, value] : mrclc::load_config_file(o.config_file))
            mrclc::apply_override(sc, key, value);
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw mrclc::ParseError("--set expects key=value, got '" + kv + "'");
        mrclc::apply_override(sc, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cmd->count("--noise")) sc.noise_amplitude = o.noise;
    if (cmd->count("--seed")) sc.noise_seed = o.seed;
    return sc;
}

int finish_run(const mrclc::RunRecord& rec, const std::filesystem::path& dir, bool emit_plots,
               bool with_theorem) {
    mrclc::TheoremReport rep;
    if (with_theorem) rep = mrclc::theorem_check(rec);
    mrclc::emit_outputs(rec, dir, emit_plots, with_theorem ? &rep : nullptr);
    std::fputs(mrclc::summary_text(rec, with_theorem ? &rep : nullptr).c_str(), stdout);
    std::printf("outputs: %s\n", dir.string().c_str());
    if (rec.diverged) {
        std::fprintf(stderr, "error: run diverged at t = %g s\n", rec.t.back());
        return 1;
    }
    if (with_theorem && !rep.passed()) {
        std::fprintf(stderr, "error: theorem check failed\n");
        return 1;
    }
    return 0;
}

int cmd_run(const CLI::App* cmd, const Options& o, bool check_verb) {
    mrclc::Scenario sc = build_scenario(cmd, o, /*exact_default=*/check_verb);
    sc.law = parse_law(o.law);
    const mrclc::RunRecord rec = mrclc::run(sc);
    return finish_run(rec, resolve_out_dir(o), o.emit_plots, check_verb || o.theorem);
}

int cmd_compare(const CLI::App* cmd, const Options& o) {
    const std::filesystem::path dir = resolve_out_dir(o);
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);  // workers only create their own subdirs
    }
    const mrclc::Law laws[] = {mrclc::Law::MRAC, mrclc::Law::ConcurrentLearning,
                               mrclc::Law::CompositeLearning};

    // Each worker owns its run and writes to its own subdirectory.
    std::vector<std::future<mrclc::RunRecord>> futures;
    for (mrclc::Law law : laws)
        futures.push_back(std::async(std::launch::async, [&, law] {
            mrclc::Scenario sc = build_scenario(cmd, o, false);
            sc.law = law;
            mrclc::RunRecord rec = mrclc::run(sc);
            mrclc::emit_outputs(rec, dir / mrclc::law_name(law), o.emit_plots);
            return rec;
        }));
    std::vector<mrclc::RunRecord> recs;
    for (auto& f : futures) recs.push_back(f.get());

    const auto row = [&](const char* label, auto value_of) {
        std::printf("%-22s", label);
        for (const auto& rec : recs) std::printf(" %14s", value_of(rec).c_str());
        std::printf("\n");
    };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };

    row("law", [](const mrclc::RunRecord& r) { return std::string(mrclc::law_name(r.law)); });
    row("final_Wtilde_norm",
        [&](const mrclc::RunRecord& r) { return num(r.summary.final_wtilde_norm); });
    for (std::size_t j = 0; j < recs.front().n; ++j) {
        const std::string label = "tail_rmse_e" + std::to_string(j + 1);
        row(label.c_str(), [&](const mrclc::RunRecord& r) { return num(r.summary.tail_rmse[j]); });
    }
    row("max_abs_u", [&](const mrclc::RunRecord& r) { return num(r.summary.max_abs_u); });
    row("T_e", [&](const mrclc::RunRecord& r) {
        return r.t_e ? num(*r.t_e) : std::string("-");
    });
    row("sigma_best", [&](const mrclc::RunRecord& r) {
        return r.law == mrclc::Law::CompositeLearning ? num(r.sigma_best_final)
                                                      : std::string("-");
    });
    row("stack_min_eig", [&](const mrclc::RunRecord& r) {
        return r.law == mrclc::Law::ConcurrentLearning ? num(r.stack_min_eig_final)
                                                       : std::string("-");
    });
    row("diverged", [](const mrclc::RunRecord& r) {
        return std::string(r.diverged ? "yes" : "no");
    });
    std::printf("outputs: %s\n", dir.string().c_str());

    for (const auto& rec : recs)
        if (rec.diverged) {
            std::fprintf(stderr, "error: %s run diverged\n", mrclc::law_name(rec.law));
            return 1;
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-reference adaptive control simulator (classical, concurrent, composite)"};
    app.require_subcommand(1);

    Options run_opts, cmp_opts, chk_opts;
    CLI::App* run_cmd = app.add_subcommand("run", "simulate one scenario under one law");
    add_common_options(run_cmd, run_opts, true);
    run_cmd->add_flag("--theorem-check", run_opts.theorem,
                      "verify the stability monitor on this run");
    run_cmd->add_flag("--true-derivative", run_opts.true_derivative,
                      "feed the learning signals the exact error derivative");

    CLI::App* cmp_cmd = app.add_subcommand("compare", "run all three laws side by side");
    add_common_options(cmp_cmd, cmp_opts, false);

    CLI::App* chk_cmd = app.add_subcommand(
        "check", "run with the exact error derivative and verify the stability theorem");
    add_common_options(chk_cmd, chk_opts, true);

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) {
            if (run_opts.true_derivative) run_opts.sets.push_back("scenario.true_derivative=1");
            return cmd_run(run_cmd, run_opts, false);
        }
        if (cmp_cmd->parsed()) return cmd_compare(cmp_cmd, cmp_opts);
        return cmd_run(chk_cmd, chk_opts, true);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
