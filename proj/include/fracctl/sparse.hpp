#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace fracctl {

/// Symmetric tridiagonal matrix; off[i] couples rows i and i+1.
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    int size() const { return static_cast<int>(diag.size()); }
    double operator()(int i, int j) const;
};

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
    int rows = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> cols;
    std::vector<double> vals;

    int nnz() const { return static_cast<int>(vals.size()); }
    /// Entry (i,j), zero when not stored.
    double at(int i, int j) const;
    std::vector<double> diagonal() const;
    double max_abs() const;
    /// max |A_ij - A_ji|.
    double asymmetry() const;
    /// max |i - j| over stored entries.
    int bandwidth() const;
};

struct Triplet {
    int row;
    int col;
    double val;
};

/// Sums duplicates.
CsrMatrix csr_from_triplets(int rows, std::vector<Triplet> triplets);

/// Coordinate text format (1-based, MatrixMarket "coordinate real general").
void write_matrix_market(const CsrMatrix& a, std::ostream& out);

}  // namespace fracctl
