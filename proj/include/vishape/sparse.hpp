#ifndef VISHAPE_SPARSE_HPP
#define VISHAPE_SPARSE_HPP

#include <vector>

namespace vishape {

struct Triplet {
    int row;
    int col;
    double value;
};

// Symmetric sparse matrix in CSR form (both triangles stored). Solves go
// through a banded LDL^T factorization on the free (non-pinned) dofs, which
// is exact and fast for the structured meshes this library produces.
class SparseSymmetric {
public:
    SparseSymmetric() = default;
    static SparseSymmetric from_triplets(int n, std::vector<Triplet> triplets);

    int size() const { return n_; }
    std::vector<double> apply(const std::vector<double>& x) const;
    double symmetry_error() const;
    double coeff(int i, int j) const;

    SparseSymmetric scaled(double s) const;
    static SparseSymmetric add(const SparseSymmetric& a, const SparseSymmetric& b,
                               double wa = 1.0, double wb = 1.0);

    // Solve A x = rhs with x_i prescribed for pinned dofs. Throws SolverError
    // when the reduced matrix is not positive definite.
    std::vector<double> solve_pinned(const std::vector<char>& pinned,
                                     const std::vector<double>& pinned_values,
                                     const std::vector<double>& rhs) const;
    std::vector<double> solve(const std::vector<double>& rhs) const;

    // True when the LDL^T pivots on the free dofs are all positive.
    bool positive_definite_on_free(const std::vector<char>& pinned) const;

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

private:
    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<double> vals_;
};

// Row/column elimination of prescribed dofs that keeps the matrix symmetric:
// rhs -= A(:,c) * value_c, then row/col c are cleared and A(c,c) = 1,
// rhs_c = value_c.
void apply_dirichlet(SparseSymmetric& A, std::vector<double>& rhs,
                     const std::vector<int>& dofs, const std::vector<double>& values);

} // namespace vishape

#endif
