#pragma once

// Box-constrained linear-quadratic control of the truncated extension problem:
//   min J(z) = 1/2 ||tr V(z) - u_d||^2 + mu/2 ||z||^2,  a <= z <= b,
// solved by projected gradient (piecewise-constant controls) or by the
// variational fixed point z = proj(-tr P / mu).

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracctl/fem.hpp"

namespace fracctl::control {

using fem::FeField;
using mesh::TensorMesh;

struct BoxBounds {
    double a = 0.0;
    double b = 0.5;
};

/// min{b, max{a, v}}; throws ConfigurationError when a > b.
double project_box(double v, const BoxBounds& bounds);

/// One value per base cell.
struct ControlField {
    std::vector<double> values;
};

ControlField project_box(const ControlField& z, const BoxBounds& bounds);

/// Cellwise averages (1/|K|) int_K r with a tensor Gauss rule (3 points: degree 5).
ControlField project_piecewise_constant(const BaseFunction& r, const mesh::BasePartition& base, int points = 3);

/// Piecewise-constant function on the base partition.
BaseFunction as_function(const ControlField& z, const mesh::BasePartition& base);

struct ControlProblem {
    double s = 0.5;
    double mu = 1.0;
    BoxBounds bounds{};
    double reaction = 0.0;
    BaseFunction desired_state;
    /// Extra fixed source added to the control in the state equation; may be empty.
    BaseFunction forcing;
};

/// Discretized reduced problem on one tensor mesh. Holds the operator and the
/// quadrature tables shared by cost, gradient and loads (3-point tensor Gauss
/// per base cell).
class ReducedProblem {
public:
    ReducedProblem(ControlProblem problem, std::shared_ptr<const TensorMesh> mesh,
                   fem::LinearSolverOptions linear = {}, fem::Exec exec = fem::Exec::parallel);

    const ControlProblem& problem() const { return problem_; }
    const fem::StiffnessOperator& op() const { return op_; }
    const TensorMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TensorMesh>& mesh_ptr() const { return mesh_; }
    const fem::ReferenceQuadrature& quadrature() const { return quad_; }
    const fem::LinearSolverOptions& linear_options() const { return linear_; }
    int cell_count() const { return mesh_->base().cell_count(); }
    double cell_measure() const { return mesh_->base().cell_measure(); }
    /// Quadrature points of all cells, cell-major.
    int point_count() const { return cell_count() * quad_.size(); }
    BasePoint point(int cell, int q) const;

    std::vector<double> state_load(const ControlField& z) const;
    /// Control given by values at the quadrature points.
    std::vector<double> state_load_at_points(std::span<const double> g) const;
    std::vector<double> adjoint_load(const FeField& state) const;

    FeField solve(std::span<const double> load) const;
    FeField state(const ControlField& z) const { return solve(state_load(z)); }
    FeField adjoint(const FeField& state) const { return solve(adjoint_load(state)); }

    std::vector<double> trace_at_points(const FeField& v) const;
    /// 1/2 ||tr V - u_d||^2.
    double tracking(const FeField& state) const;
    /// J(Z1) - J(Z0) from the increments, free of the cancellation in J1 - J0.
    double cost_change(const ControlField& z0, const FeField& v0, const ControlField& z1, const FeField& v1) const;
    double l2_norm_sq(const ControlField& z) const;
    double l2_norm_sq_at_points(std::span<const double> g) const;
    /// mu Z_K + (1/|K|) int_K tr P.
    std::vector<double> gradient(const ControlField& z, const FeField& adjoint) const;
    double l2_inner(std::span<const double> cell_a, std::span<const double> cell_b) const;

    int linear_solves() const { return solves_; }

private:
    ControlProblem problem_;
    std::shared_ptr<const TensorMesh> mesh_;
    fem::LinearSolverOptions linear_;
    fem::StiffnessOperator op_;
    fem::ReferenceQuadrature quad_;
    std::vector<double> desired_at_points_;
    std::vector<double> forcing_load_;
    mutable int solves_ = 0;
};

struct ReducedCostReport {
    double cost;
    std::vector<double> gradient;
    FeField state;
    FeField adjoint;
};

/// One state and one adjoint solve.
ReducedCostReport reduced_cost_and_gradient(const ReducedProblem& rp, const ControlField& z);

struct OptimizerOptions {
    double tol = 1e-8;
    int max_iterations = 500;
    double armijo = 1e-4;
    /// Defaults to 1/mu.
    std::optional<double> initial_step;
    int max_backtracks = 30;
    /// Fully discrete start; defaults to the projected midpoint (a+b)/2.
    std::optional<ControlField> start;
};

struct OptimizerReport {
    int iterations = 0;
    bool converged = false;
    double cost = 0.0;
    /// ||Z - proj(Z - g)||_{L2} (fully discrete) or ||g - proj(-tr P/mu)||_{L2} (variational).
    double fixed_point_residual = 0.0;
    std::vector<double> cost_history;
    int linear_solves = 0;
    double seconds = 0.0;
};

nlohmann::json to_json(const OptimizerReport& r);

struct FullyDiscreteSolution {
    ControlField control;
    FeField state;
    FeField adjoint;
    OptimizerReport report;
};

/// Projected gradient with Armijo backtracking (initial step 1/mu, halving).
FullyDiscreteSolution solve_fully_discrete(const ReducedProblem& rp, const OptimizerOptions& opts = {});

struct VariationalSolution {
    /// x -> proj(-tr P(x) / mu), evaluable anywhere in Omega.
    BaseFunction control;
    std::vector<double> control_at_points;
    FeField state;
    FeField adjoint;
    OptimizerReport report;
};

/// Damped fixed point g <- (1-theta) g + theta proj(-tr P/mu) on the quadrature
/// points; theta starts at 1 each iteration and halves on cost increase.
VariationalSolution solve_variational(const ReducedProblem& rp, const OptimizerOptions& opts = {});

struct OptimalityResiduals {
    double state_residual = 0.0;    ///< ||K V - b(Z)|| / ||b(Z)||
    double adjoint_residual = 0.0;  ///< ||K P - b(tr V - u_d)|| / ||b||
    double vi_sampled_min = 0.0;    ///< min over samples of (tr P + mu Z, Z' - Z)
    double vi_exact_min = 0.0;      ///< minimum over the box vertices
    double fixed_point_residual = 0.0;
    int samples = 0;
};

nlohmann::json to_json(const OptimalityResiduals& r);

/// Samples draw a random subset of cells (random density) and redraw those
/// values uniformly in [a,b].
OptimalityResiduals optimality_residuals(const ReducedProblem& rp, const ControlField& z, const FeField& state,
                                         const FeField& adjoint, int samples = 1000, std::uint64_t seed = 20240611);

}  // namespace fracctl::control
