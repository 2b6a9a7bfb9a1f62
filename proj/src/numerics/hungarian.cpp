#include <cmath>
#include <limits>

#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"

namespace ds2dl {

// Shortest augmenting path formulation with row/column potentials, O(n^3).
// Rectangular input is padded to a square with zero-cost dummy rows/cols.
std::vector<std::pair<std::size_t, std::size_t>> hungarian(const Eigen::MatrixXd& cost) {
    const auto rows = static_cast<std::size_t>(cost.rows());
    const auto cols = static_cast<std::size_t>(cost.cols());
    if (!cost.allFinite()) throw ParameterError("hungarian: cost matrix has non-finite entries");
    if (rows == 0 || cols == 0) return {};
    const std::size_t n = std::max(rows, cols);
    auto c = [&](std::size_t i, std::size_t j) {
        return (i < rows && j < cols) ? cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; index 0 is the virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::vector<std::size_t> col_of_row(n + 1, 0);
    for (std::size_t j = 1; j <= n; ++j) col_of_row[match[j]] = j;
    for (std::size_t i = 1; i <= rows; ++i) {
        const std::size_t j = col_of_row[i];
        if (j >= 1 && j <= cols) out.emplace_back(i - 1, j - 1);
    }
    return out;
}

}  // namespace ds2dl
