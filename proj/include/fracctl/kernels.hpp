#pragma once

// Data-parallel inner kernels. Every kernel has a serial reference version and
// an OpenMP version with the same contract; the dispatchers pick by Exec.
// Reductions in the OpenMP versions use fixed-size blocks so results do not
// depend on the thread count.

#include <array>
#include <span>

#include "fracctl/sparse.hpp"

namespace fracctl::kernels {

enum class Exec { serial, parallel };

/// Factors of the cylinder stiffness
///   K = scale * [ (sum_i a_i K_i (x) M_rest + c M) (x) M_y + M (x) K_y ]
/// over interior base nodes (m per side) times layers 0..L-1.
struct KroneckerFactors {
    int dim = 1;
    Tridiagonal base_stiffness;  ///< 1D, interior nodes of one side
    Tridiagonal base_mass;
    Tridiagonal y_stiffness;     ///< weighted, layers 0..L-1
    Tridiagonal y_mass;
    std::array<double, 2> diffusion{1.0, 1.0};
    double reaction = 0.0;
    double scale = 1.0;

    int per_side() const { return base_mass.size(); }
    int layers() const { return y_mass.size(); }
    int base_size() const { return dim == 1 ? per_side() : per_side() * per_side(); }
    int size() const { return base_size() * layers(); }
};

/// Batched tridiagonal system (shift[q] * mass + stiff) w_q = scale * rhs_q along
/// layers for every mode q; data laid out [layer][q].
struct TridiagonalBatch {
    std::span<const double> shift;
    const Tridiagonal* mass;
    const Tridiagonal* stiff;
    double scale;
};

namespace serial {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void transform_axis(std::span<const double> matrix, bool transpose, int outer, int len, int inner,
                    std::span<const double> in, std::span<double> out);
void tridiagonal_batch_solve(const TridiagonalBatch& batch, std::span<double> data);
CsrMatrix assemble_kronecker(const KroneckerFactors& f);
}  // namespace serial

namespace omp {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void transform_axis(std::span<const double> matrix, bool transpose, int outer, int len, int inner,
                    std::span<const double> in, std::span<double> out);
void tridiagonal_batch_solve(const TridiagonalBatch& batch, std::span<double> data);
CsrMatrix assemble_kronecker(const KroneckerFactors& f);
}  // namespace omp

inline void spmv(Exec e, const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    e == Exec::serial ? serial::spmv(a, x, y) : omp::spmv(a, x, y);
}
inline double dot(Exec e, std::span<const double> a, std::span<const double> b) {
    return e == Exec::serial ? serial::dot(a, b) : omp::dot(a, b);
}
inline void axpy(Exec e, double alpha, std::span<const double> x, std::span<double> y) {
    e == Exec::serial ? serial::axpy(alpha, x, y) : omp::axpy(alpha, x, y);
}
/// y = x + beta y
inline void xpby(Exec e, std::span<const double> x, double beta, std::span<double> y) {
    e == Exec::serial ? serial::xpby(x, beta, y) : omp::xpby(x, beta, y);
}
/// out[o][k][i] = sum_j T[k][j] in[o][j][i]; with transpose, T[j][k]. T is len x len row-major.
inline void transform_axis(Exec e, std::span<const double> matrix, bool transpose, int outer, int len,
                           int inner, std::span<const double> in, std::span<double> out) {
    e == Exec::serial ? serial::transform_axis(matrix, transpose, outer, len, inner, in, out)
                      : omp::transform_axis(matrix, transpose, outer, len, inner, in, out);
}
inline void tridiagonal_batch_solve(Exec e, const TridiagonalBatch& batch, std::span<double> data) {
    e == Exec::serial ? serial::tridiagonal_batch_solve(batch, data) : omp::tridiagonal_batch_solve(batch, data);
}
inline CsrMatrix assemble_kronecker(Exec e, const KroneckerFactors& f) {
    return e == Exec::serial ? serial::assemble_kronecker(f) : omp::assemble_kronecker(f);
}

}  // namespace fracctl::kernels
