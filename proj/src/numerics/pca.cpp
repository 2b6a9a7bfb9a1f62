#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

PcaResult pca(const Eigen::MatrixXd& rows, std::size_t n_components) {
    const auto n = static_cast<std::size_t>(rows.rows());
    const auto b = static_cast<std::size_t>(rows.cols());
    if (n < 2) throw ParameterError("pca needs at least 2 rows");
    if (n_components == 0 || n_components > std::min(n, b)) {
        throw ParameterError("pca: n_components = " + std::to_string(n_components) + " exceeds min(n, B) = " +
                             std::to_string(std::min(n, b)));
    }
    PcaResult out;
    out.mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - out.mean;
    const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
    // Symmetrize exactly; the product above can differ in the last ulp.
    const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("pca: covariance eigensolve failed");
    const auto k = static_cast<Eigen::Index>(n_components);
    const auto nb = static_cast<Eigen::Index>(b);
    // Eigen returns ascending eigenvalues; PCA wants descending.
    out.basis.resize(nb, k);
    out.explained_variance.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        out.basis.col(c) = solver.eigenvectors().col(nb - 1 - c);
        out.explained_variance(c) = std::max(0.0, solver.eigenvalues()(nb - 1 - c));
    }
    canonicalize_signs(out.basis);
    out.scores = centered * out.basis;
    return out;
}

}  // namespace ds2dl
