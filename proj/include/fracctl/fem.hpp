#pragma once

// Weighted Q1 finite elements for the truncated extension problem
//   a_Y(V, W) = (1/d_s) int_{C_Y} y^alpha (A grad V . grad W + c V W) = <r, tr W>.

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "fracctl/kernels.hpp"
#include "fracctl/mesh.hpp"
#include "fracctl/sparse.hpp"
#include "fracctl/spectral.hpp"

namespace fracctl::fem {

using kernels::Exec;
using mesh::TensorMesh;

/// Element matrices of one interval [a,b] with weight y^alpha:
/// mass = int y^alpha l_i l_j, stiffness = int y^alpha l_i' l_j' = stiff * [[1,-1],[-1,1]].
struct IntervalMatrices {
    double m00;
    double m01;
    double m11;
    double stiff;
};

IntervalMatrices weighted_interval_matrices(double a, double b, double alpha);

/// Global weighted mass and stiffness in y over layers 0..M-1 (y = Y removed).
struct YMatrices {
    Tridiagonal mass;
    Tridiagonal stiffness;
};
YMatrices weighted_y_matrices(const mesh::GradedPartition& ext, double alpha);

/// 1D Q1 mass and stiffness over the interior nodes of one side of the base mesh.
struct BaseMatrices {
    Tridiagonal mass;
    Tridiagonal stiffness;
};
BaseMatrices base_matrices_1d(const mesh::BasePartition& base);

enum class SolverKind { tensor_direct, conjugate_gradient, banded_cholesky };

const char* to_string(SolverKind kind);

struct LinearSolverOptions {
    SolverKind kind = SolverKind::tensor_direct;
    double rel_tol = 1e-10;
    /// CG iteration cap; 0 means 50 sqrt(#DOFs).
    int max_iterations = 0;
};

struct SolveStats {
    SolverKind kind = SolverKind::tensor_direct;
    int iterations = 0;
    double relative_residual = 0.0;
    // max_i |b - Kx|_i / (|K||x| + |b|)_i, the roundoff-level check for direct solves
    double backward_error = 0.0;
};

/// Banded Cholesky is offered only below this many unknowns.
inline constexpr int kBandedLimit = 5000;

/// Stiffness of a_Y over the free DOFs of a tensor mesh. Keeps the Kronecker
/// factors next to the assembled CSR matrix so the exact tensor-product solver
/// can be used.
class StiffnessOperator {
public:
    StiffnessOperator(std::shared_ptr<const TensorMesh> mesh, double s, double reaction = 0.0,
                      Exec exec = Exec::parallel, std::array<double, 2> diffusion = {1.0, 1.0});

    const TensorMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TensorMesh>& mesh_ptr() const { return mesh_; }
    double s() const { return s_; }
    double alpha() const { return 1.0 - 2.0 * s_; }
    double d_s() const { return d_s_; }
    double reaction() const { return factors_.reaction; }
    Exec exec() const { return exec_; }
    int size() const { return matrix_.rows; }

    const CsrMatrix& matrix() const { return matrix_; }
    const kernels::KroneckerFactors& factors() const { return factors_; }

    void apply(std::span<const double> x, std::span<double> y) const;
    double relative_residual(std::span<const double> x, std::span<const double> b) const;
    double backward_error(std::span<const double> x, std::span<const double> b) const;

    /// Solves K x = b; throws SolverError when the residual contract fails.
    SolveStats solve(std::span<const double> b, std::span<double> x, const LinearSolverOptions& opts = {}) const;

private:
    void solve_tensor(std::span<const double> b, std::span<double> x) const;
    int solve_cg(std::span<const double> b, std::span<double> x, double tol, int max_it) const;
    void solve_banded(std::span<const double> b, std::span<double> x) const;

    std::shared_ptr<const TensorMesh> mesh_;
    double s_;
    double d_s_;
    Exec exec_;
    kernels::KroneckerFactors factors_;
    CsrMatrix matrix_;
    // M-orthonormal generalized eigenvectors of the 1D base pencil (row-major m x m)
    std::vector<double> modes_;
    std::vector<double> shifts_;
};

StiffnessOperator assemble_stiffness(std::shared_ptr<const TensorMesh> mesh, double s, double reaction = 0.0,
                                     Exec exec = Exec::parallel);

/// Element-by-element assembly with 2D/1D Gauss element matrices; the serial
/// reference for the Kronecker row kernels.
CsrMatrix assemble_stiffness_reference(const TensorMesh& mesh, double s, double reaction = 0.0);

/// Piecewise multilinear function on Omega given by its interior nodal values.
class TraceField {
public:
    TraceField(std::shared_ptr<const TensorMesh> mesh, std::vector<double> values);

    const TensorMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TensorMesh>& mesh_ptr() const { return mesh_; }
    const std::vector<double>& values() const { return values_; }

    /// Value at a base node (zero on the boundary).
    double node_value(int base_node) const;
    double operator()(const BasePoint& x) const;
    /// Corner values of a base cell, ordered as BasePartition::cell_nodes.
    std::array<double, 4> cell_corners(int cell) const;

private:
    std::shared_ptr<const TensorMesh> mesh_;
    std::vector<double> values_;
};

/// Continuous Q1 function on the cylinder; Dirichlet values are zero.
class FeField {
public:
    FeField(std::shared_ptr<const TensorMesh> mesh, std::vector<double> values);

    const TensorMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TensorMesh>& mesh_ptr() const { return mesh_; }
    const std::vector<double>& values() const { return values_; }
    double node_value(int node) const;

private:
    std::shared_ptr<const TensorMesh> mesh_;
    std::vector<double> values_;
};

TraceField trace(const FeField& v);
FeField extend_by_zero(const TraceField& u);

/// Bilinear (or linear) shape values on the reference cell, ordered like cell_nodes.
std::array<double, 4> reference_shape(int dim, double t1, double t2);

/// Tensor Gauss rule on the reference cell [0,1]^n with shape values at the
/// points; weights sum to one (scale by the cell measure).
struct ReferenceQuadrature {
    int dim = 1;
    int corners = 2;
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
    std::vector<std::array<double, 4>> shapes;

    int size() const { return static_cast<int>(weights.size()); }
    static ReferenceQuadrature make(int dim, int points_per_direction);
};

/// Physical point of a reference point in a base cell.
BasePoint map_to_cell(const mesh::BasePartition& base, int cell, const std::array<double, 2>& t);

/// Load <r, tr W_i> for every free DOF.
std::vector<double> assemble_trace_load(const TensorMesh& mesh, std::span<const double> cell_values);
std::vector<double> assemble_trace_load(const TensorMesh& mesh, const TraceField& r);
/// Pointwise data, tensor Gauss rule exact for degree 5.
std::vector<double> assemble_trace_load(const TensorMesh& mesh, const BaseFunction& r);

FeField solve_state(const StiffnessOperator& op, std::span<const double> load, const LinearSolverOptions& opts = {},
                    SolveStats* stats = nullptr);
/// Adjoint a_Y(P, W) = (mismatch, tr W).
FeField solve_adjoint(const StiffnessOperator& op, const BaseFunction& mismatch,
                      const LinearSolverOptions& opts = {}, SolveStats* stats = nullptr);

/// Energy error from Galerkin orthogonality,
///   ||grad(U - V)||^2_{L2(y^alpha)} = d_s int (data) (u - tr V)  [+ d_s int (discrete - data) tr V],
/// with a tensor Gauss rule exact for degree 7. The optional discrete data term
/// accounts for a state computed from different data than the exact one.
/// Values in [-1e-8, 0) are clamped; below -1e-8 throws InconsistencyError.
double energy_error_galerkin(const TraceField& v, const BaseFunction& data, const BaseFunction& exact_trace,
                             double d_s, const BaseFunction* discrete_data = nullptr);

/// ||U - exact||_{L2(Omega)} by cellwise tensor Gauss with `points` per direction.
double l2_trace_error(const TraceField& u, const BaseFunction& exact, int points = 4);

/// ||f - g||_{L2(Omega)} by cellwise Gauss on the base partition.
double l2_distance(const mesh::BasePartition& base, const BaseFunction& f, const BaseFunction& g, int points = 6);

/// Node coordinates and values of every mesh node: x1[,x2],y,value.
void write_field_csv(const FeField& v, std::ostream& out);
void write_trace_csv(const TraceField& u, std::ostream& out);

}  // namespace fracctl::fem
