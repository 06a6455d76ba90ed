#include <omp.h>

#include <vector>

#include "fracctl/kernels.hpp"
#include "kronecker_rows.hpp"

namespace fracctl::kernels::omp {

namespace {
constexpr std::ptrdiff_t kBlock = 2048;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) {
        double sum = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) sum += a.vals[k] * x[a.cols[k]];
        y[i] = sum;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    const std::ptrdiff_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < nblocks; ++blk) {
        double sum = 0.0;
        const std::ptrdiff_t end = std::min(n, (blk + 1) * kBlock);
        for (std::ptrdiff_t i = blk * kBlock; i < end; ++i) sum += a[i] * b[i];
        partial[blk] = sum;
    }
    double sum = 0.0;
    for (double p : partial) sum += p;
    return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void transform_axis(std::span<const double> matrix, bool transpose, int outer, int len, int inner,
                    std::span<const double> in, std::span<double> out) {
    // row k of the (possibly transposed) matrix is read with stride ts
    const std::size_t ks = transpose ? 1 : len, ts = transpose ? len : 1;
    const double* mat = matrix.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < outer; ++o)
        for (int k = 0; k < len; ++k) {
            const double* src = in.data() + static_cast<std::size_t>(o) * len * inner;
            double* __restrict dst = out.data() + (static_cast<std::size_t>(o) * len + k) * inner;
            const double* mrow = mat + k * ks;
            if (inner == 1) {
                double sum = 0.0;
                for (int j = 0; j < len; ++j) sum += mrow[j * ts] * src[j];
                dst[0] = sum;
                continue;
            }
            for (int i = 0; i < inner; ++i) dst[i] = 0.0;
            for (int j = 0; j < len; ++j) {
                const double tv = mrow[j * ts];
                const double* __restrict row = src + static_cast<std::size_t>(j) * inner;
                for (int i = 0; i < inner; ++i) dst[i] += tv * row[i];
            }
        }
}

void tridiagonal_batch_solve(const TridiagonalBatch& batch, std::span<double> data) {
    const int L = batch.mass->size();
    const int nq = static_cast<int>(batch.shift.size());
#pragma omp parallel
    {
        std::vector<double> c(L);
#pragma omp for schedule(static)
        for (int q = 0; q < nq; ++q) {
            const double sh = batch.shift[q];
            const auto& md = batch.mass->diag;
            const auto& mo = batch.mass->off;
            const auto& kd = batch.stiff->diag;
            const auto& ko = batch.stiff->off;
            double* x = data.data() + q;
            const std::size_t stride = nq;
            double piv = sh * md[0] + kd[0];
            x[0] = batch.scale * x[0] / piv;
            for (int l = 1; l < L; ++l) {
                const double e = sh * mo[l - 1] + ko[l - 1];
                c[l - 1] = e / piv;
                piv = sh * md[l] + kd[l] - e * c[l - 1];
                x[l * stride] = (batch.scale * x[l * stride] - e * x[(l - 1) * stride]) / piv;
            }
            for (int l = L - 2; l >= 0; --l) x[l * stride] -= c[l] * x[(l + 1) * stride];
        }
    }
}

CsrMatrix assemble_kronecker(const KroneckerFactors& f) {
    CsrMatrix a;
    a.rows = f.size();
    a.row_ptr.assign(a.rows + 1, 0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < a.rows; ++r) a.row_ptr[r + 1] = detail::row_length(f, r);
    for (int r = 0; r < a.rows; ++r) a.row_ptr[r + 1] += a.row_ptr[r];
    a.cols.resize(a.row_ptr.back());
    a.vals.resize(a.row_ptr.back());
#pragma omp parallel for schedule(static)
    for (int r = 0; r < a.rows; ++r) detail::fill_row(f, r, &a.cols[a.row_ptr[r]], &a.vals[a.row_ptr[r]]);
    return a;
}

}  // namespace fracctl::kernels::omp
