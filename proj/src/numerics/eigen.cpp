#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

namespace {

// Orders eigenpairs by |value| descending; equal magnitudes put the positive
// value first, then keep solver order.
EigenPairs take_top(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors, std::size_t m) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double fa = std::abs(values(a));
        const double fb = std::abs(values(b));
        if (fa != fb) return fa > fb;
        return values(a) > values(b);
    });
    EigenPairs out;
    out.values.resize(static_cast<Eigen::Index>(m));
    out.vectors.resize(vectors.rows(), static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) {
        out.values(static_cast<Eigen::Index>(c)) = values(order[c]);
        out.vectors.col(static_cast<Eigen::Index>(c)) = vectors.col(order[c]);
    }
    canonicalize_signs(out.vectors);
    return out;
}

void check_count(std::size_t n, std::size_t m) {
    if (m > n) {
        throw ParameterError("requested " + std::to_string(m) + " eigenpairs of a " + std::to_string(n) +
                             "-dimensional matrix");
    }
}

EigenPairs lanczos(const Eigen::SparseMatrix<double>& a, std::size_t m, const LanczosOptions& options) {
    const auto n = static_cast<std::size_t>(a.rows());
    const auto ni = static_cast<Eigen::Index>(n);
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    double scale = 0.0;  // Gershgorin bound on |lambda|
    {
        Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(ni);
        for (int k = 0; k < a.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) row_abs(it.row()) += std::abs(it.value());
        }
        scale = std::max(1.0, row_abs.maxCoeff());
    }

    auto random_orthogonal = [&](const Eigen::MatrixXd& basis, Eigen::Index used) {
        Eigen::VectorXd v(ni);
        for (Eigen::Index i = 0; i < ni; ++i) v(i) = normal(rng);
        for (int pass = 0; pass < 2; ++pass) {
            if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
        }
        return Eigen::VectorXd(v / v.norm());
    };

    std::size_t ncv = std::min(n, std::max<std::size_t>(2 * m + 20, 64));
    std::size_t matvecs = 0;
    const std::size_t max_matvecs = 10 * n;
    for (;;) {
        const auto nc = static_cast<Eigen::Index>(ncv);
        Eigen::MatrixXd q(ni, nc);
        Eigen::VectorXd alpha(nc);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(nc);
        q.col(0) = random_orthogonal(q, 0);
        for (Eigen::Index j = 0; j < nc; ++j) {
            Eigen::VectorXd w = a * q.col(j);
            ++matvecs;
            alpha(j) = q.col(j).dot(w);
            for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
            if (j + 1 == nc) break;
            const double b = w.norm();
            if (b <= 1e-12 * scale) {
                // Invariant subspace reached; continue from a fresh direction.
                beta(j) = 0.0;
                q.col(j + 1) = random_orthogonal(q, j + 1);
            } else {
                beta(j) = b;
                q.col(j + 1) = w / b;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(alpha, beta.head(nc - 1), Eigen::ComputeEigenvectors);
        const Eigen::MatrixXd ritz = q * tri.eigenvectors();
        EigenPairs top = take_top(tri.eigenvalues(), ritz, m);

        bool converged = true;
        const double tol = options.tolerance * std::max(1.0, std::abs(top.values(0)));
        for (Eigen::Index c = 0; c < top.values.size(); ++c) {
            const double res = (a * top.vectors.col(c) - top.values(c) * top.vectors.col(c)).norm();
            if (!(res <= tol)) {
                converged = false;
                break;
            }
        }
        if (converged) return top;
        if (ncv == n || matvecs >= max_matvecs) {
            throw NumericError("Lanczos eigensolver did not reach residual tolerance " +
                               std::to_string(options.tolerance) + " after " + std::to_string(matvecs) +
                               " iterations");
        }
        ncv = std::min(n, 2 * ncv);
    }
}

}  // namespace

void canonicalize_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double v = std::abs(vectors(r, c));
            if (v > best_abs) {
                best_abs = v;
                best = r;
            }
        }
        if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
    }
}

EigenPairs eig_sym(const Eigen::MatrixXd& a, std::size_t m) {
    if (a.rows() != a.cols()) throw ContractError("eig_sym: matrix is not square");
    check_count(static_cast<std::size_t>(a.rows()), m);
    const double asym = a.rows() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) {
        throw ContractError("eig_sym: input not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("eig_sym: dense eigensolver failed");
    return take_top(solver.eigenvalues(), solver.eigenvectors(), m);
}

EigenPairs eig_sym(const Eigen::SparseMatrix<double>& a, std::size_t m, const LanczosOptions& options) {
    if (a.rows() != a.cols()) throw ContractError("eig_sym: matrix is not square");
    const auto n = static_cast<std::size_t>(a.rows());
    check_count(n, m);
    const Eigen::SparseMatrix<double> diff = a - Eigen::SparseMatrix<double>(a.transpose());
    double asym = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    }
    if (asym > 1e-10) {
        throw ContractError("eig_sym: input not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
    }
    if (n <= options.dense_threshold || m == 0) return eig_sym(Eigen::MatrixXd(a), m);
    return lanczos(a, m, options);
}

EigenPairs eig_sym(const SparseSym& a, std::size_t m, const LanczosOptions& options) {
    return eig_sym(a.to_sparse(), m, options);
}

}  // namespace ds2dl
