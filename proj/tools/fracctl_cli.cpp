// fracctl: experiment driver for fractional optimal control on graded cylinders.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fracctl/errors.hpp"
#include "fracctl/study.hpp"

using namespace fracctl;

namespace {

struct Options {
    std::vector<double> s;
    int n = 2;
    std::vector<long> dofs;
    std::optional<double> gamma;
    std::optional<double> truncation;
    std::string mode = "anisotropic";
    double tol = 1e-8;
    std::string out = "out";
    std::uint64_t seed = 20240611;
    // truncation study
    int cells = 32;
    int reference_intervals = 200;
    double reference_Y = 5.0;
    std::vector<double> heights{1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0};
};

study::StudyConfig make_config(const Options& o, std::vector<double> default_s) {
    study::StudyConfig cfg;
    cfg.s_values = o.s.empty() ? std::move(default_s) : o.s;
    cfg.dim = o.n;
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigurationError("--n must be 1 or 2");
    if (!o.dofs.empty()) cfg.dof_targets = o.dofs;
    else if (cfg.dim == 1) cfg.dof_targets = {256, 1024, 4096, 16384, 65536};
    for (std::size_t i = 1; i < cfg.dof_targets.size(); ++i)
        if (cfg.dof_targets[i] <= cfg.dof_targets[i - 1]) throw ConfigurationError("--dofs must be increasing");
    cfg.gamma = o.gamma;
    cfg.truncation = o.truncation;
    cfg.mode = study::refinement_from_string(o.mode);
    cfg.tol = o.tol;
    cfg.seed = o.seed;
    cfg.out_dir = o.out;
    return cfg;
}

nlohmann::json echo(const study::StudyConfig& cfg) {
    nlohmann::json j{{"s", cfg.s_values}, {"n", cfg.dim},    {"dofs", cfg.dof_targets},
                     {"mode", study::to_string(cfg.mode)}, {"tol", cfg.tol}, {"seed", cfg.seed}};
    if (cfg.gamma) j["gamma"] = *cfg.gamma;
    if (cfg.truncation) j["truncation_Y"] = *cfg.truncation;
    return j;
}

std::pair<double, double> band(double center, double rel) {
    return {std::min(center * (1 - rel), center * (1 + rel)), std::max(center * (1 - rel), center * (1 + rel))};
}

std::string tag(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%.2f", s);
    return buf;
}

int report(const study::ConvergenceRecord& rec, const study::SlopeBands& bands, const study::StudyConfig& cfg,
           const std::string& stem) {
    study::emit_report(rec, bands, cfg.out_dir, stem, echo(cfg));
    const auto j = study::summary_json(rec, bands);
    std::cout << stem << ':';
    for (const auto& [name, fit] : rec.slopes) std::cout << ' ' << name << '=' << fit.slope;
    std::cout << (j["pass"].get<bool>() ? "  pass" : "  FAIL") << '\n';
    if (!rec.complete) std::cerr << "incomplete: " << rec.failure << '\n';
    return rec.complete ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional optimal control through the extension problem on graded tensor meshes"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file with any of the long options");
    app.config_formatter(std::make_shared<CLI::ConfigINI>());

    Options o;
    app.add_option("--s", o.s, "fractional order(s) in (0,1)")->check(CLI::Range(0.0, 1.0));
    app.add_option("--n", o.n, "space dimension (1 or 2)");
    app.add_option("--dofs", o.dofs, "increasing DOF targets");
    app.add_option("--gamma", o.gamma, "grading exponent for anisotropic meshes");
    app.add_option("--truncation-Y", o.truncation, "truncation height Y");
    app.add_option("--mode", o.mode, "uniform | anisotropic")->check(CLI::IsMember({"uniform", "anisotropic"}));
    app.add_option("--tol", o.tol, "optimizer tolerance");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--seed", o.seed, "seed of the VI sampling");
    app.add_option("--cells", o.cells, "truncation: cells per side of the base mesh");
    app.add_option("--reference-intervals", o.reference_intervals, "truncation: y intervals of the reference mesh");
    app.add_option("--reference-Y", o.reference_Y, "truncation: height of the reference mesh");
    app.add_option("--heights", o.heights, "truncation: increasing Y values");

    auto* state = app.add_subcommand("state-rates", "state equation with single-eigenmode data");
    auto* oracle = app.add_subcommand("oracle-check", "state equation check, L2 and energy errors plus extension");
    auto* control = app.add_subcommand("control-rates", "fully discrete control of the manufactured problem");
    auto* variational = app.add_subcommand("variational-rates", "variational discretization of the control");
    auto* compare = app.add_subcommand("compare-refinement", "uniform vs anisotropic at matched DOFs");
    auto* trunc = app.add_subcommand("truncation", "exponential decay of the truncation error in Y");

    CLI11_PARSE(app, argc, argv);

    try {
        int status = 0;
        if (state->parsed() || oracle->parsed()) {
            const auto cfg = make_config(o, {0.5});
            for (double s : cfg.s_values) {
                const auto rec = study::run_oracle_check(cfg, s);
                const double rate = -(1 + s) / (cfg.dim + 1);
                status |= report(rec, {{"err_state_L2", band(rate, 0.15)}}, cfg,
                                 std::string(state->parsed() ? "state_rates_" : "oracle_check_") + tag(s));
            }
        } else if (control->parsed()) {
            const auto cfg = make_config(o, {0.2, 0.5, 0.8});
            for (double s : cfg.s_values)
                status |= report(study::run_rate_study(cfg, s),
                                 {{"err_control_L2", {-0.45, -0.25}}, {"err_state_L2", {-0.85, -0.5}}}, cfg,
                                 "control_rates_" + tag(s));
        } else if (variational->parsed()) {
            const auto cfg = make_config(o, {0.5});
            for (double s : cfg.s_values)
                status |= report(study::run_variational_study(cfg, s),
                                 {{"err_control_L2", band(-(1 + s) / (cfg.dim + 1), 0.2)}}, cfg,
                                 "variational_rates_" + tag(s));
        } else if (compare->parsed()) {
            auto base = o;
            if (base.dofs.empty() && base.n == 2) base.dofs = {3000, 10000, 25000};
            for (double s : base.s.empty() ? std::vector<double>{0.05} : base.s) {
                double err[2] = {0, 0};
                for (const char* mode : {"uniform", "anisotropic"}) {
                    auto opts = base;
                    opts.mode = mode;
                    opts.s = {s};
                    const auto cfg = make_config(opts, {s});
                    const auto rec = study::run_rate_study(cfg, s);
                    status |= report(rec, {}, cfg, std::string("compare_") + mode + "_" + tag(s));
                    err[cfg.mode == study::Refinement::anisotropic] = rec.rows.back().errors.at("err_control_L2");
                }
                std::cout << "s=" << s << " control error uniform/anisotropic = " << err[0] / err[1]
                          << (err[1] <= err[0] / 3.0 ? "  pass" : "  FAIL") << '\n';
            }
        } else if (trunc->parsed()) {
            // one-dimensional unless asked otherwise: the reference mesh is tall
            const int dim = app.get_option("--n")->count() ? o.n : 1;
            for (double s : o.s.empty() ? std::vector<double>{0.5} : o.s) {
                const auto rec = study::run_truncation_study(s, dim, o.cells, o.reference_intervals, o.reference_Y,
                                                             o.heights, std::min(o.tol, 1e-10));
                const double limit = -0.7 * std::sqrt(rec.lambda1) / 4.0;
                nlohmann::json cfg{{"s", s},
                                   {"n", dim},
                                   {"cells", o.cells},
                                   {"reference_intervals", o.reference_intervals},
                                   {"reference_Y", o.reference_Y},
                                   {"heights", o.heights}};
                study::emit_report(rec, limit, o.out, "truncation_" + tag(s), cfg);
                std::cout << "truncation_" << tag(s) << ": decay slope " << rec.decay.slope << " over "
                          << rec.fitted_rows << " rows, limit " << limit
                          << (rec.decay.slope <= limit ? "  pass" : "  FAIL") << '\n';
            }
        }
        return status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
