#include "fracctl/study.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "fracctl/errors.hpp"

namespace fracctl::study {

namespace {

double sine_product(int dim, int k, const BasePoint& x) {
    double v = std::sin(k * std::numbers::pi * x[0]);
    if (dim == 2) v *= std::sin(k * std::numbers::pi * x[1]);
    return v;
}

double lambda_first(int dim) { return dim * std::numbers::pi * std::numbers::pi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ConvergenceRow row_for(const mesh::TensorMesh& m, long target) {
    ConvergenceRow row;
    row.target = target;
    row.dofs = m.node_count();
    row.cells = m.cell_count();
    row.cells_per_side = m.base().cells_per_side();
    row.intervals = m.layers();
    row.Y = m.extended().height();
    row.gamma = m.extended().gamma();
    return row;
}

}  // namespace

const char* to_string(Refinement r) { return r == Refinement::uniform ? "uniform" : "anisotropic"; }

Refinement refinement_from_string(const std::string& s) {
    if (s == "uniform") return Refinement::uniform;
    if (s == "anisotropic") return Refinement::anisotropic;
    throw ConfigurationError("refinement mode must be uniform or anisotropic, got '" + s + "'");
}

ManufacturedProblem build_manufactured(double s, int n, double mu, int mode, control::BoxBounds bounds) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigurationError("manufactured problem: s must lie in (0,1)");
    if (n != 1 && n != 2) throw ConfigurationError("manufactured problem: n must be 1 or 2");
    if (mode < 1) throw ConfigurationError("manufactured problem: mode must be >= 1");
    ManufacturedProblem p;
    p.dim = n;
    p.mode = mode;
    p.s = s;
    p.mu = mu;
    p.bounds = bounds;
    p.lambda = spectral::eigenvalue(n == 1 ? spectral::EigenIndex(mode) : spectral::EigenIndex(mode, mode));
    p.lambda_s = std::pow(p.lambda, s);
    const double ls = p.lambda_s;
    p.state = [n, mode](const BasePoint& x) { return sine_product(n, mode, x); };
    p.adjoint = [n, mode, mu](const BasePoint& x) { return -mu * sine_product(n, mode, x); };
    p.control = [n, mode, bounds](const BasePoint& x) { return control::project_box(sine_product(n, mode, x), bounds); };
    p.forcing = [n, mode, ls, bounds](const BasePoint& x) {
        const double u = sine_product(n, mode, x);
        return ls * u - control::project_box(u, bounds);
    };
    p.desired = [n, mode, ls, mu](const BasePoint& x) { return (1.0 + mu * ls) * sine_product(n, mode, x); };
    p.state_data = [n, mode, ls](const BasePoint& x) { return ls * sine_product(n, mode, x); };
    return p;
}

control::ControlProblem ManufacturedProblem::control_problem() const {
    control::ControlProblem cp;
    cp.s = s;
    cp.mu = mu;
    cp.bounds = bounds;
    cp.desired_state = desired;
    cp.forcing = forcing;
    return cp;
}

std::shared_ptr<const mesh::TensorMesh> sweep_mesh(const StudyConfig& cfg, double s, long target) {
    const auto res = mesh::balanced_resolution(target, cfg.dim);
    const double Y = cfg.truncation.value_or(mesh::choose_truncation(s, lambda_first(cfg.dim), target, cfg.dim));
    const double gamma = cfg.mode == Refinement::uniform ? 1.0 : cfg.gamma.value_or(mesh::default_grading(s));
    auto ext = mesh::make_graded_partition(res.intervals, gamma, Y, s);
    return std::make_shared<const mesh::TensorMesh>(mesh::BasePartition(cfg.dim, res.cells_per_side), std::move(ext));
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigurationError("fit_loglog: size mismatch");
    SlopeFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    fit.points = static_cast<int>(lx.size());
    if (fit.points < 2) {
        fit.slope = fit.intercept = fit.residual = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= fit.points;
    my /= fit.points;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / fit.points);
    return fit;
}

void ConvergenceRecord::fit() {
    slopes.clear();
    std::vector<double> cells;
    for (const auto& r : rows) cells.push_back(double(r.cells));
    for (const auto& col : columns) {
        std::vector<double> err;
        for (const auto& r : rows) {
            auto it = r.errors.find(col);
            err.push_back(it == r.errors.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
        }
        slopes[col] = fit_loglog(cells, err);
    }
}

ConvergenceRecord run_rate_study(const StudyConfig& cfg, double s) {
    if (cfg.dof_targets.size() < 3) throw ConfigurationError("rate study needs at least 3 DOF targets");
    ConvergenceRecord rec;
    rec.study = "control-rates";
    rec.s = s;
    rec.dim = cfg.dim;
    rec.mode = cfg.mode;
    rec.columns = {"err_control_L2", "err_state_Hs", "err_state_L2"};
    const auto mp = build_manufactured(s, cfg.dim);
    control::OptimizerOptions opts;
    opts.tol = cfg.tol;
    for (long target : cfg.dof_targets) {
        const auto t0 = std::chrono::steady_clock::now();
        auto m = sweep_mesh(cfg, s, target);
        control::ReducedProblem rp(mp.control_problem(), m);
        auto sol = control::solve_fully_discrete(rp, opts);
        auto row = row_for(*m, target);
        row.iterations = sol.report.iterations;
        row.converged = sol.report.converged;
        row.fixed_point_residual = sol.report.fixed_point_residual;
        const auto res = control::optimality_residuals(rp, sol.control, sol.state, sol.adjoint, cfg.vi_samples, cfg.seed);
        row.vi_sampled_min = res.vi_sampled_min;

        const auto& base = m->base();
        const auto zfun = control::as_function(sol.control, base);
        row.errors["err_control_L2"] = fem::l2_distance(base, mp.control, zfun, 6);
        const auto tv = fem::trace(sol.state);
        row.errors["err_state_L2"] = fem::l2_trace_error(tv, mp.state, 6);
        const BaseFunction discrete = [&](const BasePoint& x) { return mp.forcing(x) + zfun(x); };
        try {
            row.errors["err_state_Hs"] =
                fem::energy_error_galerkin(tv, mp.state_data, mp.state, rp.op().d_s(), &discrete);
        } catch (const InconsistencyError&) {
            row.errors["err_state_Hs"] = std::numeric_limits<double>::quiet_NaN();
        }
        row.seconds = seconds_since(t0);
        rec.rows.push_back(row);
        if (!sol.report.converged) {
            rec.complete = false;
            rec.failure = "fully discrete solve did not converge at target " + std::to_string(target);
            break;
        }
    }
    rec.fit();
    return rec;
}

ConvergenceRecord run_variational_study(const StudyConfig& cfg, double s) {
    if (cfg.dof_targets.size() < 3) throw ConfigurationError("rate study needs at least 3 DOF targets");
    ConvergenceRecord rec;
    rec.study = "variational-rates";
    rec.s = s;
    rec.dim = cfg.dim;
    rec.mode = cfg.mode;
    rec.columns = {"err_control_L2", "err_state_L2"};
    const auto mp = build_manufactured(s, cfg.dim);
    control::OptimizerOptions opts;
    opts.tol = cfg.tol;
    for (long target : cfg.dof_targets) {
        const auto t0 = std::chrono::steady_clock::now();
        auto m = sweep_mesh(cfg, s, target);
        control::ReducedProblem rp(mp.control_problem(), m);
        auto sol = control::solve_variational(rp, opts);
        auto row = row_for(*m, target);
        row.iterations = sol.report.iterations;
        row.converged = sol.report.converged;
        row.fixed_point_residual = sol.report.fixed_point_residual;
        row.errors["err_control_L2"] = fem::l2_distance(m->base(), mp.control, sol.control, 6);
        row.errors["err_state_L2"] = fem::l2_trace_error(fem::trace(sol.state), mp.state, 6);
        row.seconds = seconds_since(t0);
        rec.rows.push_back(row);
        if (!sol.report.converged) {
            rec.complete = false;
            rec.failure = "variational solve did not converge at target " + std::to_string(target);
            break;
        }
    }
    rec.fit();
    return rec;
}

ConvergenceRecord run_oracle_check(const StudyConfig& cfg, double s) {
    if (cfg.dof_targets.size() < 3) throw ConfigurationError("rate study needs at least 3 DOF targets");
    ConvergenceRecord rec;
    rec.study = "state-rates";
    rec.s = s;
    rec.dim = cfg.dim;
    rec.mode = cfg.mode;
    rec.columns = {"err_state_L2", "err_state_Hs"};
    const bool closed_form = std::abs(s - 0.5) < 1e-15;
    if (closed_form) rec.columns.push_back("err_extension_max");

    const auto idx = cfg.dim == 1 ? spectral::EigenIndex(1) : spectral::EigenIndex(1, 1);
    // unnormalized sine data: amplitude 2^{-n/2} in the orthonormal basis
    spectral::SpectralFunction data(cfg.dim);
    data.set(idx, std::pow(2.0, -0.5 * cfg.dim));
    const auto exact = spectral::fractional_solve(data, s);
    const BaseFunction z = [&data](const BasePoint& x) { return data(x); };
    const BaseFunction u = [&exact](const BasePoint& x) { return exact(x); };

    for (long target : cfg.dof_targets) {
        const auto t0 = std::chrono::steady_clock::now();
        auto m = sweep_mesh(cfg, s, target);
        auto op = fem::assemble_stiffness(m, s);
        const auto load = fem::assemble_trace_load(*m, z);
        const auto v = fem::solve_state(op, load);
        const auto tv = fem::trace(v);
        auto row = row_for(*m, target);
        row.errors["err_state_L2"] = fem::l2_trace_error(tv, u, 6);
        try {
            row.errors["err_state_Hs"] = fem::energy_error_galerkin(tv, z, u, op.d_s());
        } catch (const InconsistencyError&) {
            row.errors["err_state_Hs"] = std::numeric_limits<double>::quiet_NaN();
        }
        if (closed_form) {
            double emax = 0.0;
            for (int node = 0; node < m->node_count(); ++node) {
                const auto [x, y] = m->node_coord(node);
                if (m->node_kind(node) == mesh::NodeKind::lateral) continue;
                emax = std::max(emax, std::abs(v.node_value(node) - spectral::spectral_extension(exact, s, x, y)));
            }
            row.errors["err_extension_max"] = emax;
        }
        row.seconds = seconds_since(t0);
        rec.rows.push_back(row);
    }
    rec.fit();
    return rec;
}

TruncationRecord run_truncation_study(double s, int dim, int cells_per_side, int reference_intervals,
                                      double reference_Y, const std::vector<double>& heights, double tol) {
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (heights[i] < 1.0) throw ConfigurationError("truncation study: Y values must be >= 1");
        if (i > 0 && !(heights[i] > heights[i - 1])) throw ConfigurationError("truncation study: Y values must increase");
    }
    if (heights.empty() || !(heights.back() < reference_Y))
        throw ConfigurationError("truncation study: reference Y must exceed every Y value");
    TruncationRecord rec;
    rec.s = s;
    rec.dim = dim;
    rec.cells_per_side = cells_per_side;
    rec.reference_intervals = reference_intervals;
    rec.reference_Y = reference_Y;
    rec.gamma = mesh::default_grading(s);
    rec.lambda1 = lambda_first(dim);

    const auto mp = build_manufactured(s, dim, 1.0, 1);
    const mesh::BasePartition base(dim, cells_per_side);
    const auto ref_ext = mesh::make_graded_partition(reference_intervals, rec.gamma, reference_Y, s);
    control::OptimizerOptions opts;
    opts.tol = tol;

    auto solve_on = [&](mesh::GradedPartition ext) {
        auto m = std::make_shared<const mesh::TensorMesh>(base, std::move(ext));
        control::ReducedProblem rp(mp.control_problem(), m);
        auto sol = control::solve_fully_discrete(rp, opts);
        if (!sol.report.converged) throw SolverError("truncation study: control solve did not converge",
                                                     sol.report.fixed_point_residual, sol.report.iterations);
        return std::make_pair(std::move(sol.control), fem::trace(sol.state));
    };
    const auto [z_ref, u_ref] = solve_on(ref_ext);
    const auto z_exact = control::project_piecewise_constant(mp.control, base, 6);

    for (double target : heights) {
        // smallest prefix of the reference partition reaching the requested height
        int k = 1;
        while (ref_ext.nodes()[k] < target) ++k;
        auto ext = mesh::make_graded_partition(k, rec.gamma, ref_ext.nodes()[k], s);
        const auto [z, u] = solve_on(std::move(ext));
        TruncationRow row;
        row.Y = ref_ext.nodes()[k];
        row.intervals = k;
        double dz = 0.0, de = 0.0;
        for (int c = 0; c < base.cell_count(); ++c) {
            dz += std::pow(z.values[c] - z_ref.values[c], 2);
            de += std::pow(z.values[c] - z_exact.values[c], 2);
        }
        row.err_control = std::sqrt(dz * base.cell_measure());
        row.err_control_exact = std::sqrt(de * base.cell_measure());
        double du = 0.0;
        for (std::size_t i = 0; i < u.values().size(); ++i) du += std::pow(u.values()[i] - u_ref.values()[i], 2);
        // nodal l2 scaled to approximate the L2 norm
        row.err_state = std::sqrt(du * base.cell_measure());
        rec.rows.push_back(row);
    }

    // Leading rows while the error keeps halving and stays above the solver floor.
    const double floor = 1e3 * tol;
    int n = 0;
    while (n < static_cast<int>(rec.rows.size()) && rec.rows[n].err_control > floor &&
           (n == 0 || rec.rows[n].err_control < 0.5 * rec.rows[n - 1].err_control))
        ++n;
    rec.fitted_rows = n;
    std::vector<double> ys, le;
    for (int i = 0; i < n; ++i) {
        ys.push_back(rec.rows[i].Y);
        le.push_back(std::log(rec.rows[i].err_control));
    }
    if (n >= 2) {
        // linear (not log-log) fit of log error against Y
        double my = 0, ml = 0;
        for (int i = 0; i < n; ++i) {
            my += ys[i];
            ml += le[i];
        }
        my /= n;
        ml /= n;
        double sxx = 0, sxy = 0;
        for (int i = 0; i < n; ++i) {
            sxx += (ys[i] - my) * (ys[i] - my);
            sxy += (ys[i] - my) * (le[i] - ml);
        }
        rec.decay.slope = sxy / sxx;
        rec.decay.intercept = ml - rec.decay.slope * my;
        double ss = 0;
        for (int i = 0; i < n; ++i) ss += std::pow(le[i] - rec.decay.intercept - rec.decay.slope * ys[i], 2);
        rec.decay.residual = std::sqrt(ss / n);
    } else {
        rec.decay.slope = std::numeric_limits<double>::quiet_NaN();
    }
    rec.decay.points = n;
    return rec;
}

}  // namespace fracctl::study
