#include <cmath>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bosupp/analytics.hpp"
#include "bosupp/channels.hpp"
#include "bosupp/codes.hpp"
#include "bosupp/protocols.hpp"
#include "bosupp/sweep.hpp"

namespace {

using namespace bosupp;

int check(bool ok, const char* what, int& failures) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
    return failures;
}

// Quick cross-module consistency pass, a few seconds end to end.
int selftest() {
    int failures = 0;

    const FockSpace space(24, 6);
    const Code bin = binomial_code(2, 4, space);
    const Mat c_l = codespace_identity(bin);

    {
        std::istringstream in(
            "code = bin(2,4)\ncv = loss(eta=0)\nprotocol = none\nsweep = eta: 0\n"
            "dim = 24\nguard = 6\n");
        RunReport rep = evaluate(parse_config(in, "selftest"));
        check(rep.exit_code == 0 && std::abs(rep.rows[0].f_supp - 1.0) < 1e-12 &&
                  std::abs(rep.rows[0].p_succ - 1.0) < 1e-12,
              "noiseless sweep returns unit fidelity and success", failures);
    }
    {
        const KrausChannel cv = loss_channel(0.06, space);
        const auto run = [&](const Mat& m) {
            return suppress_analytic_raw(m, 0.06, 1.0, 1, space);
        };
        HaarAverages ha = haar_averaged_fidelity(bin, run);
        double closed = psucc_closed(c_l, 0.06, 1.0, 1);
        check(std::abs(ha.p - closed) < 1e-10, "heralded success matches the closed form",
              failures);
        HaarAverages bare = haar_averaged_fidelity(bin, [&](const Mat& m) {
            return apply_raw(cv, m);
        });
        check(ha.fidelity > bare.fidelity, "suppression beats the bare channel", failures);
    }
    {
        // like-parity flatness under ancilla damping
        const KrausChannel cv = loss_channel(0.05, space);
        const ProtocolSpec spec = cf_spec(1);
        double f[2];
        for (int i = 0; i < 2; ++i) {
            const KrausChannel dv = qubit_damping(i == 0 ? 0.0 : 0.3, QubitDampKind::composite);
            f[i] = haar_averaged_fidelity(bin, [&](const Mat& m) {
                       return suppress_cf_raw(m, cv, dv, spec, space);
                   }).fidelity;
        }
        check(std::abs(f[0] - f[1]) < 1e-10, "like-parity fidelity is damping-independent",
              failures);
    }
    {
        std::istringstream text(
            "code = bin(2,4)\ncv = loss(eta=0.02)\nprotocol = cf(K=1)\n"
            "sweep = p: 0, 0.5\ndv = qubit_damp(kind=composite)\ndim = 24\nguard = 6\nseed = 3\n");
        ExperimentConfig cfg = parse_config(text, "selftest");
        RunReport a = evaluate(cfg);
        RunReport b = evaluate(cfg);
        check(csv_text(cfg, a.rows) == csv_text(cfg, b.rows), "repeated runs are byte-identical",
              failures);
    }
    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bosonic noise suppression experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string figure_name;
    std::string out_dir = ".";
    int dim = 0, guard = -1, jobs = 0;
    unsigned long long seed = 0;

    CLI::App* run = app.add_subcommand("run", "evaluate a sweep config and write its CSV");
    run->add_option("config", config_path, "config file (key = value lines)")->required();
    CLI::Option* dim_opt = run->add_option("--dim", dim, "Fock dimension override");
    CLI::Option* guard_opt = run->add_option("--guard", guard, "guard band override");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "seed override");
    CLI::Option* jobs_opt = run->add_option("--jobs", jobs, "concurrent sweep rows");

    CLI::App* fig = app.add_subcommand("figure", "regenerate a bundled figure dataset");
    fig->add_option("name", figure_name, "fig3 fig4 fig5 fig6 fig7 fig8 fig9 fig10c")->required();
    fig->add_option("--out", out_dir, "output directory");
    CLI::Option* fig_jobs_opt = fig->add_option("--jobs", jobs, "concurrent sweep rows");

    CLI::App* self = app.add_subcommand("selftest", "quick cross-module consistency checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            bosupp::ExperimentConfig cfg = bosupp::parse_config_file(config_path);
            if (dim_opt->count()) cfg.dim = dim;
            if (guard_opt->count()) cfg.guard = guard;
            if (seed_opt->count()) cfg.seed = seed;
            if (jobs_opt->count()) cfg.jobs = jobs;
            bosupp::RunReport rep = bosupp::run_experiment(cfg);
            for (const std::string& m : rep.messages) std::cerr << m << "\n";
            std::cerr << cfg.output << ": " << rep.rows.size() << " rows\n";
            return rep.exit_code;
        }
        if (fig->parsed())
            return bosupp::run_figure(figure_name, out_dir,
                                      fig_jobs_opt->count() ? jobs : 0);
        if (self->parsed()) return selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
