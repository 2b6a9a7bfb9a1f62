#include "transformer.hpp"

#include <cmath>
#include <numbers>

namespace ds2dl::umae::detail {

namespace {

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& beta,
                           LayerNormCache& cache) {
    const double d = static_cast<double>(x.rows());
    const Eigen::RowVectorXd mean = x.colwise().sum() / d;
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::RowVectorXd var = centered.cwiseAbs2().colwise().sum() / d;
    cache.inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
    cache.xhat = centered.array().rowwise() * cache.inv_std.array();
    return (cache.xhat.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& gamma,
                                    const LayerNormCache& cache, Eigen::MatrixXd& dgamma, Eigen::MatrixXd& dbeta) {
    const double d = static_cast<double>(dy.rows());
    dgamma.col(0) += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
    dbeta.col(0) += dy.rowwise().sum();
    const Eigen::MatrixXd dxhat = dy.array().colwise() * gamma.col(0).array();
    const Eigen::RowVectorXd mean_dxhat = dxhat.colwise().sum() / d;
    const Eigen::RowVectorXd mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix() / d;
    Eigen::MatrixXd dx = dxhat.rowwise() - mean_dxhat;
    dx -= (cache.xhat.array().rowwise() * mean_dxhat_xhat.array()).matrix();
    return dx.array().rowwise() * cache.inv_std.array();
}

Eigen::MatrixXd affine(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b, const Eigen::MatrixXd& x) {
    return (w * x).colwise() + b.col(0);
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * pdf;
}

Eigen::MatrixXd block_forward(const Eigen::MatrixXd& x, const BlockParams& p, std::size_t heads, BlockCache* cache) {
    BlockCache local;
    BlockCache& c = cache ? *cache : local;
    const Eigen::Index n = x.cols();
    const auto dh = static_cast<Eigen::Index>(static_cast<std::size_t>(x.rows()) / heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    c.z1 = layer_norm(x, p.ln1_gamma, p.ln1_beta, c.ln1);
    c.q = affine(p.wq, p.bq, c.z1);
    c.k = affine(p.wk, p.bk, c.z1);
    c.v = affine(p.wv, p.bv, c.z1);
    c.o.resize(x.rows(), n);
    c.attn.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(h) * dh;
        Eigen::MatrixXd s = scale * (c.q.middleRows(r0, dh).transpose() * c.k.middleRows(r0, dh));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = s.row(i).maxCoeff();
            s.row(i) = (s.row(i).array() - mx).exp().matrix();
            s.row(i) /= s.row(i).sum();
        }
        c.o.middleRows(r0, dh) = c.v.middleRows(r0, dh) * s.transpose();
        c.attn[h] = std::move(s);
    }
    const Eigen::MatrixXd x1 = x + affine(p.wo, p.bo, c.o);

    c.z2 = layer_norm(x1, p.ln2_gamma, p.ln2_beta, c.ln2);
    c.h1 = affine(p.w1, p.b1, c.z2);
    c.g = c.h1.unaryExpr([](double v) { return gelu(v); });
    return x1 + affine(p.w2, p.b2, c.g);
}

Eigen::MatrixXd block_backward(const Eigen::MatrixXd& dy, const BlockParams& p, std::size_t heads,
                               const BlockCache& c, BlockParams& grad) {
    const Eigen::Index n = dy.cols();
    const auto dh = static_cast<Eigen::Index>(static_cast<std::size_t>(dy.rows()) / heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // MLP branch.
    grad.w2 += dy * c.g.transpose();
    grad.b2.col(0) += dy.rowwise().sum();
    const Eigen::MatrixXd dg = p.w2.transpose() * dy;
    const Eigen::MatrixXd dh1 = dg.cwiseProduct(c.h1.unaryExpr([](double v) { return gelu_grad(v); }));
    grad.w1 += dh1 * c.z2.transpose();
    grad.b1.col(0) += dh1.rowwise().sum();
    const Eigen::MatrixXd dz2 = p.w1.transpose() * dh1;
    const Eigen::MatrixXd dx1 = dy + layer_norm_backward(dz2, p.ln2_gamma, c.ln2, grad.ln2_gamma, grad.ln2_beta);

    // Attention branch.
    grad.wo += dx1 * c.o.transpose();
    grad.bo.col(0) += dx1.rowwise().sum();
    const Eigen::MatrixXd dout = p.wo.transpose() * dx1;
    Eigen::MatrixXd dq(dy.rows(), n), dk(dy.rows(), n), dv(dy.rows(), n);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(h) * dh;
        const Eigen::MatrixXd& a = c.attn[h];
        const auto doh = dout.middleRows(r0, dh);
        dv.middleRows(r0, dh) = doh * a;
        const Eigen::MatrixXd da = doh.transpose() * c.v.middleRows(r0, dh);
        const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
        const Eigen::MatrixXd ds = (a.array() * (da.colwise() - row_dot).array()).matrix();
        dq.middleRows(r0, dh) = scale * (c.k.middleRows(r0, dh) * ds.transpose());
        dk.middleRows(r0, dh) = scale * (c.q.middleRows(r0, dh) * ds);
    }
    grad.wq += dq * c.z1.transpose();
    grad.bq.col(0) += dq.rowwise().sum();
    grad.wk += dk * c.z1.transpose();
    grad.bk.col(0) += dk.rowwise().sum();
    grad.wv += dv * c.z1.transpose();
    grad.bv.col(0) += dv.rowwise().sum();
    const Eigen::MatrixXd dz1 = p.wq.transpose() * dq + p.wk.transpose() * dk + p.wv.transpose() * dv;
    return dx1 + layer_norm_backward(dz1, p.ln1_gamma, c.ln1, grad.ln1_gamma, grad.ln1_beta);
}

}  // namespace ds2dl::umae::detail
