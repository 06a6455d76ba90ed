#include "fracctl/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "fracctl/errors.hpp"
#include "fracctl/quadrature.hpp"

namespace fracctl::fem {

namespace {

double norm2(std::span<const double> v, Exec exec) { return std::sqrt(kernels::dot(exec, v, v)); }

}  // namespace

IntervalMatrices weighted_interval_matrices(double a, double b, double alpha) {
    const double h = b - a;
    const double h2 = h * h;
    if (a < 4.0 * h) {
        // Closed-form moments; exact for the weight singularity at y = 0.
        auto moment = [&](int k) {
            const double p = alpha + k + 1.0;
            return (std::pow(b, p) - std::pow(a, p)) / p;
        };
        const double m0 = moment(0), m1 = moment(1), m2 = moment(2);
        return {(b * b * m0 - 2.0 * b * m1 + m2) / h2, (-a * b * m0 + (a + b) * m1 - m2) / h2,
                (a * a * m0 - 2.0 * a * m1 + m2) / h2, m0 / h2};
    }
    // Away from the origin y^alpha is analytic on a neighbourhood of [a,b] with
    // |y - a| / h >= 4 to the nearest singularity; 20 Gauss points reach roundoff
    // there and avoid the cancellation of the moment formula.
    static const GaussRule rule = gauss_legendre(20);
    IntervalMatrices out{0.0, 0.0, 0.0, 0.0};
    for (int q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q];
        const double w = rule.weights[q] * h * std::pow(a + h * t, alpha);
        out.m00 += w * (1.0 - t) * (1.0 - t);
        out.m01 += w * (1.0 - t) * t;
        out.m11 += w * t * t;
        out.stiff += w / h2;
    }
    return out;
}

YMatrices weighted_y_matrices(const mesh::GradedPartition& ext, double alpha) {
    const int M = ext.intervals();
    YMatrices y{{std::vector<double>(M, 0.0), std::vector<double>(std::max(M - 1, 0), 0.0)},
                {std::vector<double>(M, 0.0), std::vector<double>(std::max(M - 1, 0), 0.0)}};
    const auto& nodes = ext.nodes();
    for (int e = 0; e < M; ++e) {
        const auto im = weighted_interval_matrices(nodes[e], nodes[e + 1], alpha);
        y.mass.diag[e] += im.m00;
        y.stiffness.diag[e] += im.stiff;
        if (e + 1 < M) {
            y.mass.diag[e + 1] += im.m11;
            y.stiffness.diag[e + 1] += im.stiff;
            y.mass.off[e] += im.m01;
            y.stiffness.off[e] -= im.stiff;
        }
    }
    return y;
}

BaseMatrices base_matrices_1d(const mesh::BasePartition& base) {
    const int N = base.cells_per_side();
    const int m = N - 1;
    const double h = base.h();
    static const GaussRule rule = gauss_legendre(3);
    double lm[2][2] = {{0, 0}, {0, 0}}, lk[2][2] = {{0, 0}, {0, 0}};
    for (int q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q], w = rule.weights[q] * h;
        const double phi[2] = {1.0 - t, t}, dphi[2] = {-1.0 / h, 1.0 / h};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                lm[i][j] += w * phi[i] * phi[j];
                lk[i][j] += w * dphi[i] * dphi[j];
            }
    }
    BaseMatrices bm{{std::vector<double>(m, 0.0), std::vector<double>(std::max(m - 1, 0), 0.0)},
                    {std::vector<double>(m, 0.0), std::vector<double>(std::max(m - 1, 0), 0.0)}};
    // cell c joins nodes c and c+1; interior index = node - 1
    for (int c = 0; c < N; ++c) {
        const int i0 = c - 1, i1 = c;
        if (i0 >= 0) {
            bm.mass.diag[i0] += lm[0][0];
            bm.stiffness.diag[i0] += lk[0][0];
        }
        if (i1 < m) {
            bm.mass.diag[i1] += lm[1][1];
            bm.stiffness.diag[i1] += lk[1][1];
        }
        if (i0 >= 0 && i1 < m) {
            bm.mass.off[i0] += lm[0][1];
            bm.stiffness.off[i0] += lk[0][1];
        }
    }
    return bm;
}

const char* to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::tensor_direct: return "tensor_direct";
        case SolverKind::conjugate_gradient: return "conjugate_gradient";
        case SolverKind::banded_cholesky: return "banded_cholesky";
    }
    return "unknown";
}

StiffnessOperator::StiffnessOperator(std::shared_ptr<const TensorMesh> mesh, double s, double reaction, Exec exec,
                                     std::array<double, 2> diffusion)
    : mesh_(std::move(mesh)), s_(s), exec_(exec) {
    const auto constants = spectral::FractionalConstants::of(s);
    d_s_ = constants.d_s;
    if (reaction < 0.0) throw ConfigurationError("reaction coefficient c must be >= 0");
    if (!(diffusion[0] > 0.0 && diffusion[1] > 0.0)) throw ConfigurationError("diffusion must be positive");
    const auto& base = mesh_->base();
    if (base.cells_per_side() < 2) throw ConfigurationError("base mesh has no interior nodes");

    auto bm = base_matrices_1d(base);
    auto ym = weighted_y_matrices(mesh_->extended(), constants.alpha);
    factors_.dim = base.dim();
    factors_.base_mass = std::move(bm.mass);
    factors_.base_stiffness = std::move(bm.stiffness);
    factors_.y_mass = std::move(ym.mass);
    factors_.y_stiffness = std::move(ym.stiffness);
    factors_.diffusion = diffusion;
    factors_.reaction = reaction;
    factors_.scale = 1.0 / d_s_;
    matrix_ = kernels::assemble_kronecker(exec_, factors_);

    // Uniform base: the 1D pencil (K, M) is diagonalized by discrete sines.
    const int N = base.cells_per_side();
    const int m = N - 1;
    const double dk = factors_.base_stiffness.diag[0];
    const double dm = factors_.base_mass.diag[0];
    const double ek = m > 1 ? factors_.base_stiffness.off[0] : 0.0;
    const double em = m > 1 ? factors_.base_mass.off[0] : 0.0;
    std::vector<double> xi(m);
    modes_.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int k = 0; k < m; ++k) {
        const double theta = (k + 1) * std::numbers::pi / N;
        const double mass_eig = dm + 2.0 * em * std::cos(theta);
        xi[k] = (dk + 2.0 * ek * std::cos(theta)) / mass_eig;
        const double norm = std::sqrt(mass_eig * N / 2.0);
        for (int j = 0; j < m; ++j) modes_[j * m + k] = std::sin((j + 1) * theta) / norm;
    }
    if (factors_.dim == 1) {
        shifts_.resize(m);
        for (int k = 0; k < m; ++k) shifts_[k] = diffusion[0] * xi[k] + reaction;
    } else {
        shifts_.resize(static_cast<std::size_t>(m) * m);
        for (int k2 = 0; k2 < m; ++k2)
            for (int k1 = 0; k1 < m; ++k1) shifts_[k2 * m + k1] = diffusion[0] * xi[k1] + diffusion[1] * xi[k2] + reaction;
    }
}

void StiffnessOperator::apply(std::span<const double> x, std::span<double> y) const {
    kernels::spmv(exec_, matrix_, x, y);
}

double StiffnessOperator::relative_residual(std::span<const double> x, std::span<const double> b) const {
    std::vector<double> r(size());
    apply(x, r);
    for (int i = 0; i < size(); ++i) r[i] = b[i] - r[i];
    const double nb = norm2(b, exec_);
    const double nr = norm2(r, exec_);
    return nb == 0.0 ? nr : nr / nb;
}

double StiffnessOperator::backward_error(std::span<const double> x, std::span<const double> b) const {
    const auto& A = matrix_;
    double worst = 0.0;
    for (int i = 0; i < A.rows; ++i) {
        double ax = 0.0, den = std::abs(b[i]);
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const double t = A.vals[k] * x[A.cols[k]];
            ax += t;
            den += std::abs(t);
        }
        if (den > 0.0) worst = std::max(worst, std::abs(b[i] - ax) / den);
    }
    return worst;
}

void StiffnessOperator::solve_tensor(std::span<const double> b, std::span<double> x) const {
    const int m = factors_.per_side();
    const int L = factors_.layers();
    std::vector<double> tmp(b.begin(), b.end());
    std::vector<double> work(b.size());
    if (factors_.dim == 1) {
        kernels::transform_axis(exec_, modes_, true, L, m, 1, tmp, work);
        kernels::tridiagonal_batch_solve(exec_, {shifts_, &factors_.y_mass, &factors_.y_stiffness, d_s_}, work);
        kernels::transform_axis(exec_, modes_, false, L, m, 1, work, x);
    } else {
        kernels::transform_axis(exec_, modes_, true, L * m, m, 1, tmp, work);
        kernels::transform_axis(exec_, modes_, true, L, m, m, work, tmp);
        kernels::tridiagonal_batch_solve(exec_, {shifts_, &factors_.y_mass, &factors_.y_stiffness, d_s_}, tmp);
        kernels::transform_axis(exec_, modes_, false, L, m, m, tmp, work);
        kernels::transform_axis(exec_, modes_, false, L * m, m, 1, work, x);
    }
}

int StiffnessOperator::solve_cg(std::span<const double> b, std::span<double> x, double tol, int max_it) const {
    const int n = size();
    const auto diag = matrix_.diagonal();
    std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
    std::fill(x.begin(), x.end(), 0.0);
    const double nb = norm2(b, exec_);
    if (nb == 0.0) return 0;
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = kernels::dot(exec_, r, z);
    for (int it = 1; it <= max_it; ++it) {
        apply(p, q);
        const double curvature = kernels::dot(exec_, p, q);
        if (!(curvature > 0.0)) throw SolverError("CG: nonpositive curvature", norm2(r, exec_) / nb, it);
        const double step = rz / curvature;
        kernels::axpy(exec_, step, p, x);
        kernels::axpy(exec_, -step, q, r);
        if (norm2(r, exec_) <= tol * nb) return it;
        for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        const double rz_new = kernels::dot(exec_, r, z);
        kernels::xpby(exec_, z, rz_new / rz, p);
        rz = rz_new;
    }
    return max_it + 1;
}

void StiffnessOperator::solve_banded(std::span<const double> b, std::span<double> x) const {
    const int n = size();
    if (n >= kBandedLimit)
        throw ConfigurationError("banded Cholesky is limited to fewer than " + std::to_string(kBandedLimit) + " DOFs");
    const int bw = matrix_.bandwidth();
    // band[i][d] = L(i, i - d)
    std::vector<double> band(static_cast<std::size_t>(n) * (bw + 1), 0.0);
    auto at = [&](int i, int d) -> double& { return band[static_cast<std::size_t>(i) * (bw + 1) + d]; };
    for (int i = 0; i < n; ++i)
        for (int k = matrix_.row_ptr[i]; k < matrix_.row_ptr[i + 1]; ++k)
            if (matrix_.cols[k] <= i) at(i, i - matrix_.cols[k]) = matrix_.vals[k];
    for (int j = 0; j < n; ++j) {
        double d = at(j, 0);
        for (int k = std::max(0, j - bw); k < j; ++k) d -= at(j, j - k) * at(j, j - k);
        if (!(d > 0.0)) throw SolverError("banded Cholesky: matrix not positive definite", 1.0, j);
        d = std::sqrt(d);
        at(j, 0) = d;
        for (int i = j + 1; i <= std::min(n - 1, j + bw); ++i) {
            double v = at(i, i - j);
            for (int k = std::max(0, i - bw); k < j; ++k) v -= at(i, i - k) * at(j, j - k);
            at(i, i - j) = v / d;
        }
    }
    std::copy(b.begin(), b.end(), x.begin());
    for (int i = 0; i < n; ++i) {
        double v = x[i];
        for (int k = std::max(0, i - bw); k < i; ++k) v -= at(i, i - k) * x[k];
        x[i] = v / at(i, 0);
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = x[i];
        for (int k = i + 1; k <= std::min(n - 1, i + bw); ++k) v -= at(k, k - i) * x[k];
        x[i] = v / at(i, 0);
    }
}

SolveStats StiffnessOperator::solve(std::span<const double> b, std::span<double> x,
                                    const LinearSolverOptions& opts) const {
    SolveStats stats;
    stats.kind = opts.kind;
    switch (opts.kind) {
        case SolverKind::tensor_direct: {
            solve_tensor(b, x);
            stats.iterations = 1;
            stats.relative_residual = relative_residual(x, b);
            // iterative refinement against the assembled matrix
            std::vector<double> r(size()), dx(size());
            double previous = std::numeric_limits<double>::infinity();
            while (stats.relative_residual > opts.rel_tol && stats.iterations < 4 &&
                   stats.relative_residual < 0.5 * previous) {
                previous = stats.relative_residual;
                apply(x, r);
                for (int i = 0; i < size(); ++i) r[i] = b[i] - r[i];
                solve_tensor(r, dx);
                for (int i = 0; i < size(); ++i) x[i] += dx[i];
                ++stats.iterations;
                stats.relative_residual = relative_residual(x, b);
            }
            break;
        }
        case SolverKind::conjugate_gradient: {
            const int cap = opts.max_iterations > 0 ? opts.max_iterations
                                                    : static_cast<int>(std::ceil(50.0 * std::sqrt(double(size()))));
            stats.iterations = solve_cg(b, x, opts.rel_tol, cap);
            stats.relative_residual = relative_residual(x, b);
            if (stats.iterations > cap)
                throw SolverError("CG did not converge within the iteration cap", stats.relative_residual, cap);
            break;
        }
        case SolverKind::banded_cholesky:
            solve_banded(b, x);
            stats.iterations = 1;
            stats.relative_residual = relative_residual(x, b);
            break;
    }
    stats.backward_error = backward_error(x, b);
    // graded layers put entries of size 1/y_1 next to O(1) loads, so the plain
    // residual of a direct solve sits at a roundoff floor far above eps
    const bool direct = opts.kind != SolverKind::conjugate_gradient;
    const bool ok = stats.relative_residual <= opts.rel_tol || (direct && stats.backward_error <= opts.rel_tol);
    if (!ok)
        throw SolverError(std::string(to_string(opts.kind)) + " missed the residual tolerance",
                          stats.relative_residual, stats.iterations);
    return stats;
}

StiffnessOperator assemble_stiffness(std::shared_ptr<const TensorMesh> mesh, double s, double reaction, Exec exec) {
    return StiffnessOperator(std::move(mesh), s, reaction, exec);
}

std::array<double, 4> reference_shape(int dim, double t1, double t2) {
    if (dim == 1) return {1.0 - t1, t1, 0.0, 0.0};
    return {(1.0 - t1) * (1.0 - t2), t1 * (1.0 - t2), (1.0 - t1) * t2, t1 * t2};
}

ReferenceQuadrature ReferenceQuadrature::make(int dim, int points_per_direction) {
    const auto rule = gauss_legendre(points_per_direction);
    ReferenceQuadrature rq;
    rq.dim = dim;
    rq.corners = dim == 1 ? 2 : 4;
    const int n2 = dim == 1 ? 1 : rule.size();
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < rule.size(); ++i) {
            const double t2 = dim == 1 ? 0.0 : rule.points[j];
            rq.points.push_back({rule.points[i], t2});
            rq.weights.push_back(rule.weights[i] * (dim == 1 ? 1.0 : rule.weights[j]));
            rq.shapes.push_back(reference_shape(dim, rule.points[i], t2));
        }
    return rq;
}

BasePoint map_to_cell(const mesh::BasePartition& base, int cell, const std::array<double, 2>& t) {
    const auto o = base.cell_origin(cell);
    return {o[0] + base.h() * t[0], base.dim() == 1 ? 0.0 : o[1] + base.h() * t[1]};
}

CsrMatrix assemble_stiffness_reference(const TensorMesh& mesh, double s, double reaction) {
    const auto constants = spectral::FractionalConstants::of(s);
    const auto& base = mesh.base();
    const int dim = base.dim();
    const int nc = dim == 1 ? 2 : 4;
    const double h = base.h();

    // Base element matrices by tensor Gauss on one cell.
    const auto rule = gauss_legendre(3);
    double kb[4][4] = {}, mb[4][4] = {};
    const int n2 = dim == 1 ? 1 : rule.size();
    for (int qj = 0; qj < n2; ++qj)
        for (int qi = 0; qi < rule.size(); ++qi) {
            const double t1 = rule.points[qi], t2 = dim == 1 ? 0.0 : rule.points[qj];
            const double w = rule.weights[qi] * (dim == 1 ? h : rule.weights[qj] * h * h);
            const auto phi = reference_shape(dim, t1, t2);
            std::array<std::array<double, 2>, 4> grad{};
            if (dim == 1) {
                grad[0] = {-1.0 / h, 0.0};
                grad[1] = {1.0 / h, 0.0};
            } else {
                grad[0] = {-(1.0 - t2) / h, -(1.0 - t1) / h};
                grad[1] = {(1.0 - t2) / h, -t1 / h};
                grad[2] = {-t2 / h, (1.0 - t1) / h};
                grad[3] = {t2 / h, t1 / h};
            }
            for (int a = 0; a < nc; ++a)
                for (int b = 0; b < nc; ++b) {
                    kb[a][b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                    mb[a][b] += w * phi[a] * phi[b];
                }
        }

    const int nb = base.node_count();
    const auto& nodes = mesh.extended().nodes();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.cell_count()) * 4 * nc * nc);
    for (int e = 0; e < mesh.layers(); ++e) {
        const auto im = weighted_interval_matrices(nodes[e], nodes[e + 1], constants.alpha);
        const double my[2][2] = {{im.m00, im.m01}, {im.m01, im.m11}};
        const double ky[2][2] = {{im.stiff, -im.stiff}, {-im.stiff, im.stiff}};
        for (int cell = 0; cell < base.cell_count(); ++cell) {
            const auto corners = base.cell_nodes(cell);
            for (int p = 0; p < 2; ++p)
                for (int a = 0; a < nc; ++a) {
                    const int row = mesh.free_index((e + p) * nb + corners[a]);
                    if (row < 0) continue;
                    for (int r = 0; r < 2; ++r)
                        for (int b = 0; b < nc; ++b) {
                            const int col = mesh.free_index((e + r) * nb + corners[b]);
                            if (col < 0) continue;
                            const double v = (kb[a][b] + reaction * mb[a][b]) * my[p][r] + mb[a][b] * ky[p][r];
                            triplets.push_back({row, col, v / constants.d_s});
                        }
                }
        }
    }
    return csr_from_triplets(mesh.free_count(), std::move(triplets));
}

TraceField::TraceField(std::shared_ptr<const TensorMesh> mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != mesh_->trace_count())
        throw ConfigurationError("TraceField: value count does not match the interior base nodes");
}

double TraceField::node_value(int base_node) const {
    const int i = mesh_->base().interior_index(base_node);
    return i < 0 ? 0.0 : values_[i];
}

std::array<double, 4> TraceField::cell_corners(int cell) const {
    const auto corners = mesh_->base().cell_nodes(cell);
    std::array<double, 4> v{0.0, 0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < corners.size(); ++a) v[a] = node_value(corners[a]);
    return v;
}

double TraceField::operator()(const BasePoint& x) const {
    const auto& base = mesh_->base();
    const int cell = base.locate(x);
    const auto o = base.cell_origin(cell);
    const double t1 = (x[0] - o[0]) / base.h();
    const double t2 = base.dim() == 1 ? 0.0 : (x[1] - o[1]) / base.h();
    const auto phi = reference_shape(base.dim(), t1, t2);
    const auto v = cell_corners(cell);
    return phi[0] * v[0] + phi[1] * v[1] + phi[2] * v[2] + phi[3] * v[3];
}

FeField::FeField(std::shared_ptr<const TensorMesh> mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != mesh_->free_count())
        throw ConfigurationError("FeField: value count does not match the free DOFs");
}

double FeField::node_value(int node) const {
    const int i = mesh_->free_index(node);
    return i < 0 ? 0.0 : values_[i];
}

TraceField trace(const FeField& v) {
    const int n = v.mesh().trace_count();
    return TraceField(v.mesh_ptr(), std::vector<double>(v.values().begin(), v.values().begin() + n));
}

FeField extend_by_zero(const TraceField& u) {
    std::vector<double> values(u.mesh().free_count(), 0.0);
    std::copy(u.values().begin(), u.values().end(), values.begin());
    return FeField(u.mesh_ptr(), std::move(values));
}

std::vector<double> assemble_trace_load(const TensorMesh& mesh, std::span<const double> cell_values) {
    const auto& base = mesh.base();
    if (static_cast<int>(cell_values.size()) != base.cell_count())
        throw ConfigurationError("trace load: one value per base cell expected");
    std::vector<double> load(mesh.free_count(), 0.0);
    const double share = base.cell_measure() / (base.dim() == 1 ? 2.0 : 4.0);
    for (int cell = 0; cell < base.cell_count(); ++cell)
        for (int node : base.cell_nodes(cell)) {
            const int i = base.interior_index(node);
            if (i >= 0) load[i] += share * cell_values[cell];
        }
    return load;
}

namespace {

std::vector<double> quadrature_load(const TensorMesh& mesh, const std::function<double(int, int, const BasePoint&)>& r) {
    const auto& base = mesh.base();
    static thread_local std::array<ReferenceQuadrature, 2> rq{ReferenceQuadrature::make(1, 3),
                                                              ReferenceQuadrature::make(2, 3)};
    const auto& quad = rq[base.dim() - 1];
    std::vector<double> load(mesh.free_count(), 0.0);
    const double meas = base.cell_measure();
    for (int cell = 0; cell < base.cell_count(); ++cell) {
        const auto corners = base.cell_nodes(cell);
        for (int q = 0; q < quad.size(); ++q) {
            const double val = quad.weights[q] * meas * r(cell, q, map_to_cell(base, cell, quad.points[q]));
            for (int a = 0; a < quad.corners; ++a) {
                const int i = base.interior_index(corners[a]);
                if (i >= 0) load[i] += val * quad.shapes[q][a];
            }
        }
    }
    return load;
}

}  // namespace

std::vector<double> assemble_trace_load(const TensorMesh& mesh, const TraceField& r) {
    return quadrature_load(mesh, [&](int, int, const BasePoint& x) { return r(x); });
}

std::vector<double> assemble_trace_load(const TensorMesh& mesh, const BaseFunction& r) {
    return quadrature_load(mesh, [&](int, int, const BasePoint& x) { return r(x); });
}

FeField solve_state(const StiffnessOperator& op, std::span<const double> load, const LinearSolverOptions& opts,
                    SolveStats* stats) {
    if (static_cast<int>(load.size()) != op.size()) throw ConfigurationError("solve_state: load size mismatch");
    std::vector<double> x(op.size(), 0.0);
    const auto st = op.solve(load, x, opts);
    if (stats) *stats = st;
    return FeField(op.mesh_ptr(), std::move(x));
}

FeField solve_adjoint(const StiffnessOperator& op, const BaseFunction& mismatch, const LinearSolverOptions& opts,
                      SolveStats* stats) {
    const auto load = assemble_trace_load(op.mesh(), mismatch);
    return solve_state(op, load, opts, stats);
}

double energy_error_galerkin(const TraceField& v, const BaseFunction& data, const BaseFunction& exact_trace,
                             double d_s, const BaseFunction* discrete_data) {
    const auto& base = v.mesh().base();
    const auto quad = ReferenceQuadrature::make(base.dim(), 4);  // exact for degree 7
    const double meas = base.cell_measure();
    double sum = 0.0;
    for (int cell = 0; cell < base.cell_count(); ++cell) {
        const auto corners = v.cell_corners(cell);
        for (int q = 0; q < quad.size(); ++q) {
            const auto x = map_to_cell(base, cell, quad.points[q]);
            double tv = 0.0;
            for (int a = 0; a < quad.corners; ++a) tv += quad.shapes[q][a] * corners[a];
            const double r = data(x);
            double integrand = r * (exact_trace(x) - tv);
            if (discrete_data) integrand += ((*discrete_data)(x) - r) * tv;
            sum += quad.weights[q] * meas * integrand;
        }
    }
    const double sq = d_s * sum;
    if (sq < -1e-8) throw InconsistencyError("energy_error_galerkin: squared error " + std::to_string(sq) + " < 0");
    return std::sqrt(std::max(sq, 0.0));
}

double l2_distance(const mesh::BasePartition& base, const BaseFunction& f, const BaseFunction& g, int points) {
    const auto quad = ReferenceQuadrature::make(base.dim(), points);
    const double meas = base.cell_measure();
    double sum = 0.0;
    for (int cell = 0; cell < base.cell_count(); ++cell)
        for (int q = 0; q < quad.size(); ++q) {
            const auto x = map_to_cell(base, cell, quad.points[q]);
            const double d = f(x) - g(x);
            sum += quad.weights[q] * meas * d * d;
        }
    return std::sqrt(sum);
}

double l2_trace_error(const TraceField& u, const BaseFunction& exact, int points) {
    if (points < 3) throw ConfigurationError("l2_trace_error: rule must be exact for degree >= 4");
    const auto& base = u.mesh().base();
    const auto quad = ReferenceQuadrature::make(base.dim(), points);
    const double meas = base.cell_measure();
    double sum = 0.0;
    for (int cell = 0; cell < base.cell_count(); ++cell) {
        const auto corners = u.cell_corners(cell);
        for (int q = 0; q < quad.size(); ++q) {
            double uv = 0.0;
            for (int a = 0; a < quad.corners; ++a) uv += quad.shapes[q][a] * corners[a];
            const double d = exact(map_to_cell(base, cell, quad.points[q])) - uv;
            sum += quad.weights[q] * meas * d * d;
        }
    }
    return std::sqrt(sum);
}

void write_field_csv(const FeField& v, std::ostream& out) {
    const auto& mesh = v.mesh();
    out << (mesh.dim() == 1 ? "x1,y,value\n" : "x1,x2,y,value\n");
    out.precision(12);
    for (int node = 0; node < mesh.node_count(); ++node) {
        const auto [x, y] = mesh.node_coord(node);
        out << x[0] << ',';
        if (mesh.dim() == 2) out << x[1] << ',';
        out << y << ',' << v.node_value(node) << '\n';
    }
}

void write_trace_csv(const TraceField& u, std::ostream& out) {
    const auto& base = u.mesh().base();
    out << (base.dim() == 1 ? "x1,value\n" : "x1,x2,value\n");
    out.precision(12);
    for (int node = 0; node < base.node_count(); ++node) {
        const auto x = base.node_coord(node);
        out << x[0] << ',';
        if (base.dim() == 2) out << x[1] << ',';
        out << u.node_value(node) << '\n';
    }
}

}  // namespace fracctl::fem
