#include "fracctl/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>

namespace fracctl {

double Tridiagonal::operator()(int i, int j) const {
    if (i == j) return diag[i];
    if (j == i + 1) return off[i];
    if (i == j + 1) return off[j];
    return 0.0;
}

double CsrMatrix::at(int i, int j) const {
    auto first = cols.begin() + row_ptr[i];
    auto last = cols.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? vals[it - cols.begin()] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(rows);
    for (int i = 0; i < rows; ++i) d[i] = at(i, i);
    return d;
}

double CsrMatrix::max_abs() const {
    double m = 0.0;
    for (double v : vals) m = std::max(m, std::abs(v));
    return m;
}

double CsrMatrix::asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < rows; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m = std::max(m, std::abs(vals[k] - at(cols[k], i)));
    return m;
}

int CsrMatrix::bandwidth() const {
    int bw = 0;
    for (int i = 0; i < rows; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) bw = std::max(bw, std::abs(cols[k] - i));
    return bw;
}

CsrMatrix csr_from_triplets(int rows, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    CsrMatrix a;
    a.rows = rows;
    a.row_ptr.assign(rows + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
        const int r = triplets[k].row, c = triplets[k].col;
        double v = 0.0;
        while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) v += triplets[k++].val;
        a.cols.push_back(c);
        a.vals.push_back(v);
        ++a.row_ptr[r + 1];
    }
    for (int i = 0; i < rows; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
    return a;
}

void write_matrix_market(const CsrMatrix& a, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows << ' ' << a.rows << ' ' << a.nnz() << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < a.rows; ++i)
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            out << i + 1 << ' ' << a.cols[k] + 1 << ' ' << a.vals[k] << '\n';
}

}  // namespace fracctl
