#pragma once

// Pre-norm transformer block on D x N token matrices (one token per column):
//   x1 = x + Attn(LN1(x)),  y = x1 + MLP(LN2(x1)),  MLP = W2 gelu(W1 z + b1) + b2

#include <vector>

#include <Eigen/Dense>

#include "ds2dl/umae.hpp"

namespace ds2dl::umae::detail {

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
    Eigen::MatrixXd xhat;
    Eigen::RowVectorXd inv_std;
};

struct BlockCache {
    LayerNormCache ln1;
    Eigen::MatrixXd z1, q, k, v, o;
    std::vector<Eigen::MatrixXd> attn;  // per head, N x N, row i = query i
    LayerNormCache ln2;
    Eigen::MatrixXd z2, h1, g;
};

Eigen::MatrixXd block_forward(const Eigen::MatrixXd& x, const BlockParams& p, std::size_t heads, BlockCache* cache);

/// Returns dL/dx and accumulates parameter gradients into `grad`.
Eigen::MatrixXd block_backward(const Eigen::MatrixXd& dy, const BlockParams& p, std::size_t heads,
                               const BlockCache& cache, BlockParams& grad);

double gelu(double x);
double gelu_grad(double x);

}  // namespace ds2dl::umae::detail
