#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ds2dl {

struct PcaResult {
    Eigen::MatrixXd scores;  // n x n_components
    Eigen::MatrixXd basis;   // B x n_components, orthonormal columns
    Eigen::VectorXd explained_variance;
    Eigen::RowVectorXd mean;
};

/// PCA by eigendecomposition of the B x B sample covariance. The largest
/// magnitude entry of each basis column is made positive.
PcaResult pca(const Eigen::MatrixXd& rows, std::size_t n_components);

/// Eigenpairs sorted by descending |value|, vectors column-aligned.
struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

struct SparseEntry {
    std::size_t row;
    std::size_t col;
    double weight;
};

/// Symmetric sparse matrix with non-negative weights. Only the upper triangle
/// (row <= col) is stored; explicit zeros are never kept.
class SparseSym {
public:
    explicit SparseSym(std::size_t n = 0) : n_(n) {}

    std::size_t dim() const noexcept { return n_; }

    /// Sets entry (i, j) = (j, i) = weight, replacing any earlier value.
    void set(std::size_t i, std::size_t j, double weight);
    /// Sets entry to max(existing, weight).
    void set_max(std::size_t i, std::size_t j, double weight);
    double get(std::size_t i, std::size_t j) const;

    /// Upper-triangle entries in (row, col) order.
    std::vector<SparseEntry> entries() const;
    std::size_t nonzeros() const noexcept { return upper_.size(); }

    /// Row sums of the full symmetric matrix.
    Eigen::VectorXd degrees() const;
    Eigen::SparseMatrix<double> to_sparse() const;
    Eigen::MatrixXd to_dense() const;

private:
    static std::pair<std::size_t, std::size_t> key(std::size_t i, std::size_t j) {
        return i <= j ? std::pair{i, j} : std::pair{j, i};
    }
    void check(std::size_t i, std::size_t j, double weight) const;

    std::size_t n_;
    std::map<std::pair<std::size_t, std::size_t>, double> upper_;
};

/// Top-m eigenpairs of a dense symmetric matrix. Throws ContractError when
/// max |A - A^T| > 1e-10.
EigenPairs eig_sym(const Eigen::MatrixXd& a, std::size_t m);

struct LanczosOptions {
    double tolerance = 1e-10;           // residual, relative to max(1, |lambda_max|)
    std::size_t dense_threshold = 1500;  // at or below this size use the dense solver
    unsigned seed = 12345;
};

/// Top-m eigenpairs of a sparse symmetric matrix. Large inputs go through
/// Lanczos with full reorthogonalization; NumericError if the residual
/// tolerance is not met within 10 * n iterations.
EigenPairs eig_sym(const Eigen::SparseMatrix<double>& a, std::size_t m, const LanczosOptions& options = {});
EigenPairs eig_sym(const SparseSym& a, std::size_t m, const LanczosOptions& options = {});

/// Flips each column so that its largest-magnitude entry (first on ties) is positive.
void canonicalize_signs(Eigen::MatrixXd& vectors);

struct KnnResult {
    std::vector<std::size_t> indices;  // q x k, row-major
    std::vector<double> distances;     // q x k, ascending per query
    std::size_t k = 0;

    std::size_t index(std::size_t query, std::size_t rank) const { return indices[query * k + rank]; }
    double distance(std::size_t query, std::size_t rank) const { return distances[query * k + rank]; }
};

struct KnnOptions {
    /// Point counts above this use the kd-tree; both paths return identical results.
    std::size_t tree_threshold = 2048;
};

/// Exact Euclidean k nearest neighbours. Ties break by smaller index. With
/// exclude_self, query i never returns point i (queries must be the points).
KnnResult knn(const Eigen::MatrixXd& points, const Eigen::MatrixXd& queries, std::size_t k,
              bool exclude_self, const KnnOptions& options = {});
KnnResult knn_self(const Eigen::MatrixXd& points, std::size_t k, const KnnOptions& options = {});

/// Minimum-cost one-to-one assignment of min(a, b) (row, col) pairs, sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> hungarian(const Eigen::MatrixXd& cost);

}  // namespace ds2dl
