#include "vishape/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vishape/error.hpp"

namespace vishape {

SparseSymmetric SparseSymmetric::from_triplets(int n, std::vector<Triplet> triplets) {
    for (const auto& t : triplets)
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
            throw InputError("sparse matrix: triplet index out of range");
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseSymmetric m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (size_t k = 0; k < triplets.size();) {
        size_t j = k;
        double sum = 0.0;
        while (j < triplets.size() && triplets[j].row == triplets[k].row &&
               triplets[j].col == triplets[k].col) {
            sum += triplets[j].value;
            ++j;
        }
        m.cols_.push_back(triplets[k].col);
        m.vals_.push_back(sum);
        m.row_ptr_[triplets[k].row + 1]++;
        k = j;
    }
    for (int i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
}

std::vector<double> SparseSymmetric::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw InputError("sparse apply: size mismatch");
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[i] += vals_[k] * x[cols_[k]];
    return y;
}

double SparseSymmetric::coeff(int i, int j) const {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (cols_[k] == j) return vals_[k];
    return 0.0;
}

double SparseSymmetric::symmetry_error() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            worst = std::max(worst, std::fabs(vals_[k] - coeff(cols_[k], i)));
    return worst;
}

SparseSymmetric SparseSymmetric::scaled(double s) const {
    SparseSymmetric m = *this;
    for (double& v : m.vals_) v *= s;
    return m;
}

SparseSymmetric SparseSymmetric::add(const SparseSymmetric& a, const SparseSymmetric& b,
                                     double wa, double wb) {
    if (a.n_ != b.n_) throw InputError("sparse add: size mismatch");
    std::vector<Triplet> trips;
    trips.reserve(a.vals_.size() + b.vals_.size());
    for (int i = 0; i < a.n_; ++i)
        for (int k = a.row_ptr_[i]; k < a.row_ptr_[i + 1]; ++k)
            trips.push_back({i, a.cols_[k], wa * a.vals_[k]});
    for (int i = 0; i < b.n_; ++i)
        for (int k = b.row_ptr_[i]; k < b.row_ptr_[i + 1]; ++k)
            trips.push_back({i, b.cols_[k], wb * b.vals_[k]});
    return from_triplets(a.n_, std::move(trips));
}

namespace {

// Banded LDL^T on the compacted free dofs. Returns false on a non-positive pivot.
bool band_ldlt_solve(int nf, int band, std::vector<double>& B, std::vector<double>& x) {
    auto at = [&](int i, int j) -> double& { return B[size_t(i) * (band + 1) + (j - i + band)]; };
    // B stores rows i, columns j in [i-band, i]; symmetric, lower triangle.
    std::vector<double> d(nf, 0.0);
    for (int i = 0; i < nf; ++i) {
        const int j0 = std::max(0, i - band);
        for (int j = j0; j <= i; ++j) {
            double sum = at(i, j);
            const int k0 = std::max(j0, j - band);
            for (int k = k0; k < j; ++k) sum -= at(i, k) * at(j, k) * d[k];
            if (j < i)
                at(i, j) = sum / d[j];
            else {
                if (sum <= 0.0) return false;
                d[i] = sum;
            }
        }
    }
    // forward: L z = x
    for (int i = 0; i < nf; ++i) {
        double sum = x[i];
        for (int j = std::max(0, i - band); j < i; ++j) sum -= at(i, j) * x[j];
        x[i] = sum;
    }
    for (int i = 0; i < nf; ++i) x[i] /= d[i];
    // backward: L^T x = z
    for (int i = nf - 1; i >= 0; --i) {
        double sum = x[i];
        for (int j = i + 1; j < std::min(nf, i + band + 1); ++j) sum -= at(j, i) * x[j];
        x[i] = sum;
    }
    return true;
}

} // namespace

namespace {

// Reverse Cuthill-McKee order of the free dofs; keeps the band of the
// factorization small for any input numbering. Deterministic tie-breaking.
std::vector<int> rcm_order(int n, const std::vector<int>& row_ptr, const std::vector<int>& cols,
                           const std::vector<char>& pinned, const std::vector<int>& free_idx) {
    const int nf = static_cast<int>(free_idx.size());
    std::vector<int> compact(n, -1);
    for (int c = 0; c < nf; ++c) compact[free_idx[c]] = c;

    std::vector<std::vector<int>> adj(nf);
    for (int c = 0; c < nf; ++c) {
        const int i = free_idx[c];
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            const int j = cols[k];
            if (j != i && !pinned[j]) adj[c].push_back(compact[j]);
        }
        std::sort(adj[c].begin(), adj[c].end());
    }

    std::vector<int> order;
    order.reserve(nf);
    std::vector<char> seen(nf, 0);
    auto degree_less = [&](int a, int b) {
        const size_t da = adj[a].size(), db = adj[b].size();
        return da != db ? da < db : a < b;
    };
    for (int root0 = 0; root0 < nf; ++root0) {
        if (seen[root0]) continue;
        // minimum-degree start inside this component
        int root = root0;
        // breadth-first sweep, children sorted by degree
        std::vector<int> queue{root};
        seen[root] = 1;
        for (size_t head = 0; head < queue.size(); ++head) {
            const int c = queue[head];
            order.push_back(c);
            std::vector<int> next;
            for (int nb : adj[c])
                if (!seen[nb]) {
                    seen[nb] = 1;
                    next.push_back(nb);
                }
            std::sort(next.begin(), next.end(), degree_less);
            for (int nb : next) queue.push_back(nb);
        }
    }
    std::reverse(order.begin(), order.end());
    return order; // order[pos] = compact index placed at position pos
}

} // namespace

std::vector<double> SparseSymmetric::solve_pinned(const std::vector<char>& pinned,
                                                  const std::vector<double>& pinned_values,
                                                  const std::vector<double>& rhs) const {
    if (static_cast<int>(pinned.size()) != n_ || static_cast<int>(rhs.size()) != n_)
        throw InputError("solve_pinned: size mismatch");

    std::vector<int> free_idx;
    for (int i = 0; i < n_; ++i)
        if (!pinned[i]) free_idx.push_back(i);
    const int nf = static_cast<int>(free_idx.size());
    std::vector<double> x(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        if (pinned[i]) x[i] = pinned_values[i];
    if (nf == 0) return x;

    const std::vector<int> order = rcm_order(n_, row_ptr_, cols_, pinned, free_idx);
    std::vector<int> position(nf, -1); // compact index -> permuted position
    for (int pos = 0; pos < nf; ++pos) position[order[pos]] = pos;
    std::vector<int> compact(n_, -1);
    for (int c = 0; c < nf; ++c) compact[free_idx[c]] = c;

    int band = 0;
    for (int c = 0; c < nf; ++c) {
        const int i = free_idx[c];
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const int j = cols_[k];
            if (!pinned[j]) band = std::max(band, std::abs(position[c] - position[compact[j]]));
        }
    }

    std::vector<double> B(size_t(nf) * (band + 1), 0.0);
    std::vector<double> r(nf, 0.0);
    for (int c = 0; c < nf; ++c) {
        const int i = free_idx[c];
        const int pi = position[c];
        double b = rhs[i];
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const int j = cols_[k];
            if (pinned[j]) {
                b -= vals_[k] * pinned_values[j];
            } else {
                const int pj = position[compact[j]];
                if (pj <= pi) B[size_t(pi) * (band + 1) + (pj - pi + band)] = vals_[k];
            }
        }
        r[pi] = b;
    }

    if (!band_ldlt_solve(nf, band, B, r))
        throw SolverError("sparse solve: matrix is not positive definite on the free dofs");
    for (int c = 0; c < nf; ++c) x[free_idx[c]] = r[position[c]];
    return x;
}

std::vector<double> SparseSymmetric::solve(const std::vector<double>& rhs) const {
    return solve_pinned(std::vector<char>(n_, 0), std::vector<double>(n_, 0.0), rhs);
}

bool SparseSymmetric::positive_definite_on_free(const std::vector<char>& pinned) const {
    try {
        solve_pinned(pinned, std::vector<double>(n_, 0.0), std::vector<double>(n_, 0.0));
        return true;
    } catch (const SolverError&) {
        return false;
    }
}

void apply_dirichlet(SparseSymmetric& A, std::vector<double>& rhs, const std::vector<int>& dofs,
                     const std::vector<double>& values) {
    const int n = A.size();
    if (rhs.size() != size_t(n)) throw InputError("apply_dirichlet: rhs size mismatch");
    std::vector<char> mask(n, 0);
    std::vector<double> vals(n, 0.0);
    for (size_t k = 0; k < dofs.size(); ++k) {
        const int d = dofs[k];
        if (d < 0 || d >= n) throw InputError("apply_dirichlet: boundary dof index out of range");
        mask[d] = 1;
        vals[d] = values[k];
    }
    std::vector<Triplet> trips;
    for (int i = 0; i < n; ++i) {
        for (int k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
            const int j = A.cols()[k];
            const double v = A.values()[k];
            if (mask[i] || mask[j]) {
                if (!mask[i] && mask[j]) rhs[i] -= v * vals[j];
                continue;
            }
            trips.push_back({i, j, v});
        }
    }
    for (int i = 0; i < n; ++i)
        if (mask[i]) {
            trips.push_back({i, i, 1.0});
            rhs[i] = vals[i];
        }
    A = SparseSymmetric::from_triplets(n, std::move(trips));
}

} // namespace vishape
