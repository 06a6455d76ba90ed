#include <vector>

#include "fracctl/kernels.hpp"
#include "kronecker_rows.hpp"

namespace fracctl::kernels::serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < a.rows; ++i) {
        double sum = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) sum += a.vals[k] * x[a.cols[k]];
        y[i] = sum;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

void transform_axis(std::span<const double> matrix, bool transpose, int outer, int len, int inner,
                    std::span<const double> in, std::span<double> out) {
    for (int o = 0; o < outer; ++o)
        for (int k = 0; k < len; ++k)
            for (int i = 0; i < inner; ++i) {
                double sum = 0.0;
                for (int j = 0; j < len; ++j) {
                    const double t = transpose ? matrix[j * len + k] : matrix[k * len + j];
                    sum += t * in[(o * len + j) * inner + i];
                }
                out[(o * len + k) * inner + i] = sum;
            }
}

void tridiagonal_batch_solve(const TridiagonalBatch& batch, std::span<double> data) {
    const int L = batch.mass->size();
    const int nq = static_cast<int>(batch.shift.size());
    std::vector<double> c(L);
    for (int q = 0; q < nq; ++q) {
        const double sh = batch.shift[q];
        auto d = [&](int l) { return sh * batch.mass->diag[l] + batch.stiff->diag[l]; };
        auto e = [&](int l) { return sh * batch.mass->off[l] + batch.stiff->off[l]; };
        auto x = [&](int l) -> double& { return data[static_cast<std::size_t>(l) * nq + q]; };
        double piv = d(0);
        x(0) = batch.scale * x(0) / piv;
        for (int l = 1; l < L; ++l) {
            c[l - 1] = e(l - 1) / piv;
            piv = d(l) - e(l - 1) * c[l - 1];
            x(l) = (batch.scale * x(l) - e(l - 1) * x(l - 1)) / piv;
        }
        for (int l = L - 2; l >= 0; --l) x(l) -= c[l] * x(l + 1);
    }
}

CsrMatrix assemble_kronecker(const KroneckerFactors& f) {
    CsrMatrix a;
    a.rows = f.size();
    a.row_ptr.assign(a.rows + 1, 0);
    for (int r = 0; r < a.rows; ++r) a.row_ptr[r + 1] = a.row_ptr[r] + detail::row_length(f, r);
    a.cols.resize(a.row_ptr.back());
    a.vals.resize(a.row_ptr.back());
    for (int r = 0; r < a.rows; ++r) detail::fill_row(f, r, &a.cols[a.row_ptr[r]], &a.vals[a.row_ptr[r]]);
    return a;
}

}  // namespace fracctl::kernels::serial
