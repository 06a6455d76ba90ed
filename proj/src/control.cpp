#include "fracctl/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "fracctl/errors.hpp"

namespace fracctl::control {

namespace {

void check_bounds(const BoxBounds& bounds) {
    if (!(bounds.a <= bounds.b)) throw ConfigurationError("box bounds require a <= b");
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double project_box(double v, const BoxBounds& bounds) {
    check_bounds(bounds);
    return std::min(bounds.b, std::max(bounds.a, v));
}

ControlField project_box(const ControlField& z, const BoxBounds& bounds) {
    ControlField out{z.values};
    for (double& v : out.values) v = project_box(v, bounds);
    return out;
}

ControlField project_piecewise_constant(const BaseFunction& r, const mesh::BasePartition& base, int points) {
    const auto quad = fem::ReferenceQuadrature::make(base.dim(), points);
    ControlField z{std::vector<double>(base.cell_count(), 0.0)};
    for (int cell = 0; cell < base.cell_count(); ++cell) {
        double sum = 0.0;
        for (int q = 0; q < quad.size(); ++q) sum += quad.weights[q] * r(fem::map_to_cell(base, cell, quad.points[q]));
        z.values[cell] = sum;
    }
    return z;
}

BaseFunction as_function(const ControlField& z, const mesh::BasePartition& base) {
    return [values = z.values, base](const BasePoint& x) { return values[base.locate(x)]; };
}

ReducedProblem::ReducedProblem(ControlProblem problem, std::shared_ptr<const TensorMesh> mesh,
                               fem::LinearSolverOptions linear, fem::Exec exec)
    : problem_(std::move(problem)),
      mesh_(std::move(mesh)),
      linear_(linear),
      op_(mesh_, problem_.s, problem_.reaction, exec),
      quad_(fem::ReferenceQuadrature::make(mesh_->dim(), 3)) {
    check_bounds(problem_.bounds);
    if (!(problem_.mu > 0.0)) throw ConfigurationError("regularization mu must be positive");
    if (!problem_.desired_state) throw ConfigurationError("control problem needs a desired state");
    desired_at_points_.resize(point_count());
    for (int cell = 0; cell < cell_count(); ++cell)
        for (int q = 0; q < quad_.size(); ++q) desired_at_points_[cell * quad_.size() + q] = problem_.desired_state(point(cell, q));
    if (problem_.forcing)
        forcing_load_ = fem::assemble_trace_load(*mesh_, problem_.forcing);
    else
        forcing_load_.assign(mesh_->free_count(), 0.0);
}

BasePoint ReducedProblem::point(int cell, int q) const { return fem::map_to_cell(mesh_->base(), cell, quad_.points[q]); }

std::vector<double> ReducedProblem::state_load(const ControlField& z) const {
    auto load = fem::assemble_trace_load(*mesh_, z.values);
    for (std::size_t i = 0; i < load.size(); ++i) load[i] += forcing_load_[i];
    return load;
}

std::vector<double> ReducedProblem::state_load_at_points(std::span<const double> g) const {
    const auto& base = mesh_->base();
    std::vector<double> load = forcing_load_;
    const double meas = cell_measure();
    for (int cell = 0; cell < cell_count(); ++cell) {
        const auto corners = base.cell_nodes(cell);
        for (int q = 0; q < quad_.size(); ++q) {
            const double val = quad_.weights[q] * meas * g[cell * quad_.size() + q];
            for (int a = 0; a < quad_.corners; ++a) {
                const int i = base.interior_index(corners[a]);
                if (i >= 0) load[i] += val * quad_.shapes[q][a];
            }
        }
    }
    return load;
}

std::vector<double> ReducedProblem::adjoint_load(const FeField& state) const {
    const auto tv = trace_at_points(state);
    std::vector<double> mismatch(tv.size());
    for (std::size_t k = 0; k < tv.size(); ++k) mismatch[k] = tv[k] - desired_at_points_[k];
    const auto& base = mesh_->base();
    std::vector<double> load(mesh_->free_count(), 0.0);
    const double meas = cell_measure();
    for (int cell = 0; cell < cell_count(); ++cell) {
        const auto corners = base.cell_nodes(cell);
        for (int q = 0; q < quad_.size(); ++q) {
            const double val = quad_.weights[q] * meas * mismatch[cell * quad_.size() + q];
            for (int a = 0; a < quad_.corners; ++a) {
                const int i = base.interior_index(corners[a]);
                if (i >= 0) load[i] += val * quad_.shapes[q][a];
            }
        }
    }
    return load;
}

FeField ReducedProblem::solve(std::span<const double> load) const {
    ++solves_;
    return fem::solve_state(op_, load, linear_);
}

std::vector<double> ReducedProblem::trace_at_points(const FeField& v) const {
    const auto tr = fem::trace(v);
    std::vector<double> out(point_count());
    for (int cell = 0; cell < cell_count(); ++cell) {
        const auto c = tr.cell_corners(cell);
        for (int q = 0; q < quad_.size(); ++q) {
            double sum = 0.0;
            for (int a = 0; a < quad_.corners; ++a) sum += quad_.shapes[q][a] * c[a];
            out[cell * quad_.size() + q] = sum;
        }
    }
    return out;
}

double ReducedProblem::tracking(const FeField& state) const {
    const auto tv = trace_at_points(state);
    double sum = 0.0;
    for (int k = 0; k < point_count(); ++k) {
        const double e = tv[k] - desired_at_points_[k];
        sum += quad_.weights[k % quad_.size()] * e * e;
    }
    return 0.5 * sum * cell_measure();
}

double ReducedProblem::cost_change(const ControlField& z0, const FeField& v0, const ControlField& z1,
                                   const FeField& v1) const {
    const auto t0 = trace_at_points(v0);
    const auto t1 = trace_at_points(v1);
    double track = 0.0;
    for (int k = 0; k < point_count(); ++k) {
        const double e = t0[k] - desired_at_points_[k];
        const double d = t1[k] - t0[k];
        track += quad_.weights[k % quad_.size()] * (e + 0.5 * d) * d;
    }
    double reg = 0.0;
    for (std::size_t k = 0; k < z0.values.size(); ++k) {
        const double d = z1.values[k] - z0.values[k];
        reg += (z0.values[k] + 0.5 * d) * d;
    }
    return (track + problem_.mu * reg) * cell_measure();
}

double ReducedProblem::l2_norm_sq(const ControlField& z) const {
    double sum = 0.0;
    for (double v : z.values) sum += v * v;
    return sum * cell_measure();
}

double ReducedProblem::l2_norm_sq_at_points(std::span<const double> g) const {
    double sum = 0.0;
    for (int k = 0; k < point_count(); ++k) sum += quad_.weights[k % quad_.size()] * g[k] * g[k];
    return sum * cell_measure();
}

double ReducedProblem::l2_inner(std::span<const double> a, std::span<const double> b) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
    return sum * cell_measure();
}

std::vector<double> ReducedProblem::gradient(const ControlField& z, const FeField& adjoint) const {
    const auto tp = trace_at_points(adjoint);
    std::vector<double> g(cell_count());
    for (int cell = 0; cell < cell_count(); ++cell) {
        double avg = 0.0;
        for (int q = 0; q < quad_.size(); ++q) avg += quad_.weights[q] * tp[cell * quad_.size() + q];
        g[cell] = problem_.mu * z.values[cell] + avg;
    }
    return g;
}

ReducedCostReport reduced_cost_and_gradient(const ReducedProblem& rp, const ControlField& z) {
    if (static_cast<int>(z.values.size()) != rp.cell_count())
        throw ConfigurationError("control must have one value per base cell");
    auto state = rp.state(z);
    auto adjoint = rp.adjoint(state);
    const double cost = rp.tracking(state) + 0.5 * rp.problem().mu * rp.l2_norm_sq(z);
    auto g = rp.gradient(z, adjoint);
    return {cost, std::move(g), std::move(state), std::move(adjoint)};
}

nlohmann::json to_json(const OptimizerReport& r) {
    return {{"iterations", r.iterations},       {"converged", r.converged},
            {"cost", r.cost},                   {"fixed_point_residual", r.fixed_point_residual},
            {"linear_solves", r.linear_solves}, {"seconds", r.seconds},
            {"cost_history", r.cost_history}};
}

namespace {

double fixed_point_residual(const ReducedProblem& rp, const ControlField& z, std::span<const double> g) {
    const auto& bounds = rp.problem().bounds;
    double sum = 0.0;
    for (std::size_t k = 0; k < z.values.size(); ++k) {
        const double d = z.values[k] - project_box(z.values[k] - g[k], bounds);
        sum += d * d;
    }
    return std::sqrt(sum * rp.cell_measure());
}

}  // namespace

FullyDiscreteSolution solve_fully_discrete(const ReducedProblem& rp, const OptimizerOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const int solves0 = rp.linear_solves();
    const auto& pb = rp.problem();
    ControlField z = opts.start ? project_box(*opts.start, pb.bounds)
                                : ControlField{std::vector<double>(rp.cell_count(),
                                                                   project_box(0.5 * (pb.bounds.a + pb.bounds.b), pb.bounds))};
    if (static_cast<int>(z.values.size()) != rp.cell_count())
        throw ConfigurationError("start control must have one value per base cell");

    auto eval = reduced_cost_and_gradient(rp, z);
    OptimizerReport report;
    report.cost_history.push_back(eval.cost);
    const double step0 = opts.initial_step.value_or(1.0 / pb.mu);

    for (;;) {
        report.fixed_point_residual = fixed_point_residual(rp, z, eval.gradient);
        if (report.fixed_point_residual <= opts.tol) {
            report.converged = true;
            break;
        }
        if (report.iterations >= opts.max_iterations) break;

        double t = step0;
        bool accepted = false;
        ControlField trial;
        FeField trial_state = eval.state;
        double trial_cost = 0.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, t *= 0.5) {
            trial = z;
            for (std::size_t k = 0; k < trial.values.size(); ++k)
                trial.values[k] = project_box(z.values[k] - t * eval.gradient[k], pb.bounds);
            std::vector<double> d(trial.values.size());
            for (std::size_t k = 0; k < d.size(); ++k) d[k] = trial.values[k] - z.values[k];
            // V(Z + D) = V(Z) + V_0(D): solver noise then scales with D, not with V
            const auto dv = rp.solve(fem::assemble_trace_load(rp.mesh(), d));
            std::vector<double> tv = eval.state.values();
            for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += dv.values()[i];
            trial_state = FeField(rp.mesh_ptr(), std::move(tv));
            const double change = rp.cost_change(z, eval.state, trial, trial_state);
            trial_cost = eval.cost + change;
            const double decrease = opts.armijo * rp.l2_inner(eval.gradient, d);
            if (change <= decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        z = std::move(trial);
        auto adjoint = rp.adjoint(trial_state);
        auto g = rp.gradient(z, adjoint);
        eval = {trial_cost, std::move(g), std::move(trial_state), std::move(adjoint)};
        report.cost_history.push_back(eval.cost);
        ++report.iterations;
    }
    report.cost = eval.cost;
    report.linear_solves = rp.linear_solves() - solves0;
    report.seconds = elapsed(t0);
    return {std::move(z), std::move(eval.state), std::move(eval.adjoint), std::move(report)};
}

VariationalSolution solve_variational(const ReducedProblem& rp, const OptimizerOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const int solves0 = rp.linear_solves();
    const auto& pb = rp.problem();
    const int np = rp.point_count();
    const auto& w = rp.quadrature().weights;
    const int nq = rp.quadrature().size();

    std::vector<double> g(np, project_box(0.5 * (pb.bounds.a + pb.bounds.b), pb.bounds));
    auto cost_of = [&](const FeField& state, const std::vector<double>& gv) {
        return rp.tracking(state) + 0.5 * pb.mu * rp.l2_norm_sq_at_points(gv);
    };
    auto clamp_adjoint = [&](const FeField& adjoint) {
        auto tp = rp.trace_at_points(adjoint);
        for (double& v : tp) v = project_box(-v / pb.mu, pb.bounds);
        return tp;
    };

    FeField state = rp.solve(rp.state_load_at_points(g));
    double cost = cost_of(state, g);
    FeField adjoint = rp.adjoint(state);
    std::vector<double> target = clamp_adjoint(adjoint);
    OptimizerReport report;
    report.cost_history.push_back(cost);

    for (;;) {
        double sum = 0.0;
        for (int k = 0; k < np; ++k) sum += w[k % nq] * (g[k] - target[k]) * (g[k] - target[k]);
        report.fixed_point_residual = std::sqrt(sum * rp.cell_measure());
        if (report.fixed_point_residual <= opts.tol) {
            report.converged = true;
            break;
        }
        if (report.iterations >= opts.max_iterations) break;

        bool accepted = false;
        double theta = 1.0;
        std::vector<double> trial(np);
        FeField trial_state = state;
        double trial_cost = 0.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, theta *= 0.5) {
            for (int k = 0; k < np; ++k) trial[k] = (1.0 - theta) * g[k] + theta * target[k];
            trial_state = rp.solve(rp.state_load_at_points(trial));
            trial_cost = cost_of(trial_state, trial);
            if (trial_cost <= cost + 1e-14 * std::max(1.0, std::abs(cost))) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        g = trial;
        state = std::move(trial_state);
        cost = trial_cost;
        adjoint = rp.adjoint(state);
        target = clamp_adjoint(adjoint);
        report.cost_history.push_back(cost);
        ++report.iterations;
    }
    report.cost = cost;
    report.linear_solves = rp.linear_solves() - solves0;
    report.seconds = elapsed(t0);
    BaseFunction control = [tp = fem::trace(adjoint), mu = pb.mu, bounds = pb.bounds](const BasePoint& x) {
        return project_box(-tp(x) / mu, bounds);
    };
    return {std::move(control), std::move(target), std::move(state), std::move(adjoint), std::move(report)};
}

nlohmann::json to_json(const OptimalityResiduals& r) {
    return {{"state_residual", r.state_residual},     {"adjoint_residual", r.adjoint_residual},
            {"vi_sampled_min", r.vi_sampled_min},     {"vi_exact_min", r.vi_exact_min},
            {"fixed_point_residual", r.fixed_point_residual}, {"samples", r.samples}};
}

OptimalityResiduals optimality_residuals(const ReducedProblem& rp, const ControlField& z, const FeField& state,
                                         const FeField& adjoint, int samples, std::uint64_t seed) {
    OptimalityResiduals res;
    res.samples = samples;
    res.state_residual = rp.op().relative_residual(state.values(), rp.state_load(z));
    res.adjoint_residual = rp.op().relative_residual(adjoint.values(), rp.adjoint_load(state));
    const auto g = rp.gradient(z, adjoint);
    res.fixed_point_residual = fixed_point_residual(rp, z, g);

    const auto& bounds = rp.problem().bounds;
    const double meas = rp.cell_measure();
    double exact = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        exact += meas * std::min(g[k] * (bounds.a - z.values[k]), g[k] * (bounds.b - z.values[k]));
    res.vi_exact_min = exact;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> box(bounds.a, bounds.b);
    double best = samples > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    for (int sample = 0; sample < samples; ++sample) {
        // densities from a single cell up to all cells
        const double density = std::pow(unit(rng), 3.0);
        double value = 0.0;
        bool any = false;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (unit(rng) >= density) continue;
            any = true;
            value += meas * g[k] * (box(rng) - z.values[k]);
        }
        if (!any) {
            const std::size_t k = std::min(g.size() - 1, static_cast<std::size_t>(unit(rng) * g.size()));
            value = meas * g[k] * (box(rng) - z.values[k]);
        }
        best = std::min(best, value);
    }
    res.vi_sampled_min = best;
    return res;
}

}  // namespace fracctl::control
