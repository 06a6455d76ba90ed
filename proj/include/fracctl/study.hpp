#pragma once

// Experiment driver: manufactured optimal control problem, mesh sweeps for
// uniform and graded refinement, rate fits, truncation and oracle studies.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracctl/control.hpp"

namespace fracctl::study {

enum class Refinement { uniform, anisotropic };

const char* to_string(Refinement r);
Refinement refinement_from_string(const std::string& s);

/// Closed-form optimal triple on (0,1)^n with u = prod sin(k pi x_i):
///   p = -mu u, z = clamp(u, a, b), f = lambda^s u - z, u_d = (1 + mu lambda^s) u.
struct ManufacturedProblem {
    int dim;
    int mode;
    double s;
    double mu;
    control::BoxBounds bounds;
    double lambda;    ///< n k^2 pi^2
    double lambda_s;  ///< lambda^s
    BaseFunction state;
    BaseFunction adjoint;
    BaseFunction control;
    BaseFunction forcing;
    BaseFunction desired;
    /// f + z = lambda^s u, the exact state-equation data.
    BaseFunction state_data;

    control::ControlProblem control_problem() const;
};

/// mode = 2 is the standard problem; mode = 1 keeps every field in the lowest
/// eigenmode (used by the truncation study).
ManufacturedProblem build_manufactured(double s, int n, double mu = 1.0, int mode = 2,
                                       control::BoxBounds bounds = {0.0, 0.5});

struct StudyConfig {
    std::vector<double> s_values{0.5};
    int dim = 2;
    Refinement mode = Refinement::anisotropic;
    std::vector<long> dof_targets{3000, 10000, 25000, 50000};
    /// Override of the grading exponent for anisotropic meshes.
    std::optional<double> gamma;
    /// Override of the truncation height.
    std::optional<double> truncation;
    double tol = 1e-8;
    std::uint64_t seed = 20240611;
    int vi_samples = 1000;
    std::string out_dir = "out";
};

/// Mesh for one DOF target: balanced resolution, Y from choose_truncation,
/// gamma = 1 (uniform) or the admissible default (anisotropic).
std::shared_ptr<const mesh::TensorMesh> sweep_mesh(const StudyConfig& cfg, double s, long target);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< RMS of the log-log fit
    int points = 0;
};

/// Ordinary least squares of log(y) on log(x).
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
    long target = 0;
    long dofs = 0;   ///< nodes of T_Y
    long cells = 0;  ///< #T_Y
    int cells_per_side = 0;
    int intervals = 0;
    double Y = 0.0;
    double gamma = 1.0;
    std::map<std::string, double> errors;
    int iterations = 0;
    bool converged = true;
    double vi_sampled_min = 0.0;
    double fixed_point_residual = 0.0;
    double seconds = 0.0;
};

struct ConvergenceRecord {
    std::string study;
    double s = 0.5;
    int dim = 2;
    Refinement mode = Refinement::anisotropic;
    std::vector<std::string> columns;
    std::vector<ConvergenceRow> rows;
    /// Fitted against #T_Y.
    std::map<std::string, SlopeFit> slopes;
    bool complete = true;
    std::string failure;

    void fit();
};

/// Fully discrete sweep of the manufactured problem: err_control_L2,
/// err_state_Hs (energy surrogate), err_state_L2.
ConvergenceRecord run_rate_study(const StudyConfig& cfg, double s);

/// Variational sweep of the manufactured problem: err_control_L2 = ||z - g||.
ConvergenceRecord run_variational_study(const StudyConfig& cfg, double s);

/// State equation with single-eigenmode data z = prod sin(pi x_i) and exact
/// trace lambda_1^{-s} z: err_state_L2, err_state_Hs and, for s = 1/2,
/// err_extension_max against the closed-form extension at the mesh nodes.
ConvergenceRecord run_oracle_check(const StudyConfig& cfg, double s);

struct TruncationRow {
    double Y = 0.0;
    int intervals = 0;
    double err_control = 0.0;      ///< ||Z_Y - Z_ref||
    double err_state = 0.0;        ///< ||tr V_Y - tr V_ref||
    double err_control_exact = 0.0;  ///< ||Z_Y - z||
};

struct TruncationRecord {
    double s = 0.5;
    int dim = 1;
    int cells_per_side = 0;
    int reference_intervals = 0;
    double reference_Y = 0.0;
    double gamma = 1.0;
    double lambda1 = 0.0;
    std::vector<TruncationRow> rows;
    /// Slope of log(err_control) vs Y over the leading rows above the floor.
    SlopeFit decay;
    int fitted_rows = 0;
};

/// Nested meshes: each truncated partition is a prefix of the reference graded
/// partition, so differences to the reference solve are truncation effects only.
/// Uses the mode-1 manufactured problem.
TruncationRecord run_truncation_study(double s, int dim, int cells_per_side, int reference_intervals,
                                      double reference_Y, const std::vector<double>& heights, double tol = 1e-10);

/// Accepted slope band [lo, hi] per error column.
using SlopeBands = std::map<std::string, std::pair<double, double>>;

nlohmann::json summary_json(const ConvergenceRecord& rec, const SlopeBands& bands);
nlohmann::json summary_json(const TruncationRecord& rec, double max_slope);
void write_csv(const ConvergenceRecord& rec, std::ostream& out);
void write_csv(const TruncationRecord& rec, std::ostream& out);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json; throws std::runtime_error with the path on failure.
void emit_report(const ConvergenceRecord& rec, const SlopeBands& bands, const std::string& dir,
                 const std::string& stem, const nlohmann::json& config);
void emit_report(const TruncationRecord& rec, double max_slope, const std::string& dir, const std::string& stem,
                 const nlohmann::json& config);

}  // namespace fracctl::study
