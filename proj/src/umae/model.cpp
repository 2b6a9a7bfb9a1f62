#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ds2dl/error.hpp"
#include "ds2dl/parallel.hpp"
#include "ds2dl/umae.hpp"
#include "transformer.hpp"

namespace ds2dl::umae {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Eigen::MatrixXd uniform_fan_in(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
    return m;
}

BlockParams init_block(std::size_t d, std::size_t hidden, std::mt19937_64& rng) {
    const auto di = static_cast<Eigen::Index>(d);
    const auto hi = static_cast<Eigen::Index>(hidden);
    BlockParams b;
    b.ln1_gamma = Eigen::MatrixXd::Ones(di, 1);
    b.ln1_beta = Eigen::MatrixXd::Zero(di, 1);
    b.wq = uniform_fan_in(d, d, rng);
    b.bq = Eigen::MatrixXd::Zero(di, 1);
    b.wk = uniform_fan_in(d, d, rng);
    b.bk = Eigen::MatrixXd::Zero(di, 1);
    b.wv = uniform_fan_in(d, d, rng);
    b.bv = Eigen::MatrixXd::Zero(di, 1);
    b.wo = uniform_fan_in(d, d, rng);
    b.bo = Eigen::MatrixXd::Zero(di, 1);
    b.ln2_gamma = Eigen::MatrixXd::Ones(di, 1);
    b.ln2_beta = Eigen::MatrixXd::Zero(di, 1);
    b.w1 = uniform_fan_in(hidden, d, rng);
    b.b1 = Eigen::MatrixXd::Zero(hi, 1);
    b.w2 = uniform_fan_in(d, hidden, rng);
    b.b2 = Eigen::MatrixXd::Zero(di, 1);
    return b;
}

void check_mask(const Mask& mask, std::size_t bands) {
    std::vector<char> seen(bands, 0);
    auto mark = [&](const std::vector<std::size_t>& idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= bands) throw ContractError("mask index out of range");
            if (i > 0 && idx[i] <= idx[i - 1]) throw ContractError("mask indices must be strictly ascending");
            if (seen[idx[i]]) throw ContractError("visible and masked index sets overlap");
            seen[idx[i]] = 1;
        }
    };
    mark(mask.visible);
    mark(mask.masked);
    if (mask.visible.size() + mask.masked.size() != bands) {
        throw ContractError("visible and masked index sets do not cover every band");
    }
}

void check_finite(const Eigen::MatrixXd& m, const char* stack, std::size_t block) {
    if (!m.allFinite()) {
        throw NumericError(std::string("non-finite activation after ") + stack + " block " + std::to_string(block));
    }
}

struct ForwardCache {
    std::vector<detail::BlockCache> enc;
    std::vector<detail::BlockCache> dec;
    Eigen::MatrixXd latent;   // D x K
    Eigen::MatrixXd dec_out;  // D x B
    Eigen::MatrixXd recon;    // T x |masked|
};

Eigen::MatrixXd run_encoder(const Eigen::MatrixXd& tokens, const UmaeParams& p, ForwardCache* cache) {
    Eigen::MatrixXd x = tokens;
    if (cache) cache->enc.resize(p.encoder.size());
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
        x = detail::block_forward(x, p.encoder[i], p.n_heads, cache ? &cache->enc[i] : nullptr);
        check_finite(x, "encoder", i);
    }
    return x;
}

Eigen::MatrixXd assemble_decoder_input(const Eigen::MatrixXd& latent, const Mask& mask, const UmaeParams& p) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(p.latent_dim()), static_cast<Eigen::Index>(p.bands));
    const Eigen::MatrixXd projected = p.dec_proj * latent;
    for (std::size_t k = 0; k < mask.visible.size(); ++k) {
        const auto b = static_cast<Eigen::Index>(mask.visible[k]);
        z.col(b) = projected.col(static_cast<Eigen::Index>(k)) + p.dec_pos.col(b);
    }
    for (std::size_t b : mask.masked) {
        const auto bi = static_cast<Eigen::Index>(b);
        z.col(bi) = p.mask_token.col(0) + p.dec_pos.col(bi);
    }
    return z;
}

Eigen::MatrixXd run_decoder(const Eigen::MatrixXd& latent, const Mask& mask, const UmaeParams& p, ForwardCache* cache) {
    Eigen::MatrixXd z = assemble_decoder_input(latent, mask, p);
    if (cache) cache->dec.resize(p.decoder.size());
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
        z = detail::block_forward(z, p.decoder[i], p.n_heads, cache ? &cache->dec[i] : nullptr);
        check_finite(z, "decoder", i);
    }
    Eigen::MatrixXd recon(p.head.rows(), static_cast<Eigen::Index>(mask.masked.size()));
    for (std::size_t k = 0; k < mask.masked.size(); ++k) {
        recon.col(static_cast<Eigen::Index>(k)) = p.head * z.col(static_cast<Eigen::Index>(mask.masked[k]));
    }
    if (cache) cache->dec_out = std::move(z);
    return recon;
}

Eigen::MatrixXd visible_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
    return out;
}

// Loss of one sample; accumulates scale * dLoss/dparams into grad.
double sample_backward(const TrainingSample& s, const UmaeParams& p, double scale, UmaeParams& grad) {
    check_mask(s.mask, p.bands);
    const Eigen::MatrixXd tokens = tokenize(s.groups, p);
    ForwardCache cache;
    cache.latent = run_encoder(visible_columns(tokens, s.mask.visible), p, &cache);
    cache.recon = run_decoder(cache.latent, s.mask, p, &cache);
    const double loss = mse_masked(cache.recon, s.groups, s.mask.masked);

    const double count = static_cast<double>(cache.recon.size());
    const Eigen::MatrixXd target = visible_columns(s.groups, s.mask.masked);
    const Eigen::MatrixXd drecon = (2.0 * scale / count) * (cache.recon - target);

    // Reconstruction head, masked positions only.
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(cache.dec_out.rows(), cache.dec_out.cols());
    for (std::size_t k = 0; k < s.mask.masked.size(); ++k) {
        const auto b = static_cast<Eigen::Index>(s.mask.masked[k]);
        const auto kk = static_cast<Eigen::Index>(k);
        grad.head += drecon.col(kk) * cache.dec_out.col(b).transpose();
        dz.col(b) = p.head.transpose() * drecon.col(kk);
    }
    for (std::size_t i = p.decoder.size(); i-- > 0;) {
        dz = detail::block_backward(dz, p.decoder[i], p.n_heads, cache.dec[i], grad.decoder[i]);
    }
    // Decoder input assembly.
    grad.dec_pos += dz;
    Eigen::MatrixXd dprojected(dz.rows(), static_cast<Eigen::Index>(s.mask.visible.size()));
    for (std::size_t k = 0; k < s.mask.visible.size(); ++k) {
        dprojected.col(static_cast<Eigen::Index>(k)) = dz.col(static_cast<Eigen::Index>(s.mask.visible[k]));
    }
    for (std::size_t b : s.mask.masked) grad.mask_token.col(0) += dz.col(static_cast<Eigen::Index>(b));
    grad.dec_proj += dprojected * cache.latent.transpose();
    Eigen::MatrixXd dx = p.dec_proj.transpose() * dprojected;

    for (std::size_t i = p.encoder.size(); i-- > 0;) {
        dx = detail::block_backward(dx, p.encoder[i], p.n_heads, cache.enc[i], grad.encoder[i]);
    }
    // Tokenisation of the visible groups.
    for (std::size_t k = 0; k < s.mask.visible.size(); ++k) {
        const auto b = static_cast<Eigen::Index>(s.mask.visible[k]);
        const auto kk = static_cast<Eigen::Index>(k);
        grad.enc_pos.col(b) += dx.col(kk);
        grad.embed += dx.col(kk) * s.groups.col(b).transpose();
    }
    return loss;
}

}  // namespace

std::size_t visible_count(std::size_t bands, double mask_ratio) {
    const double k = std::round((1.0 - mask_ratio) * static_cast<double>(bands));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, k)));
}

void TrainConfig::validate(std::size_t bands) const {
    auto fail = [](const std::string& m) { throw ParameterError("umae config: " + m); };
    if (patch == 0 || patch % 2 == 0) fail("patch size must be odd and positive");
    if (group_len == 0 || group_len % 2 == 0) fail("group length must be odd and positive");
    if (latent_dim == 0) fail("latent_dim must be positive");
    if (n_heads == 0 || latent_dim % n_heads != 0) fail("latent_dim must be divisible by n_heads");
    if (mlp_ratio == 0) fail("mlp_ratio must be positive");
    if (batch_size == 0) fail("batch_size must be positive");
    if (n_train == 0) fail("n_train must be positive");
    if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) fail("mask_ratio must lie in [0, 1)");
    if (bands == 0) fail("cube has no bands");
    if (epochs > 0 && visible_count(bands, mask_ratio) >= bands) {
        fail("mask_ratio " + std::to_string(mask_ratio) + " masks no band out of " + std::to_string(bands) +
             "; training needs at least one masked group");
    }
    if (!(learning_rate > 0.0) || !(adam_eps > 0.0)) fail("learning_rate and adam_eps must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        fail("Adam betas must lie in [0, 1)");
    }
}

std::size_t UmaeParams::parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Eigen::MatrixXd& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

bool UmaeParams::all_finite() const {
    bool ok = true;
    visit([&](const std::string&, const Eigen::MatrixXd& t) { ok = ok && t.allFinite(); });
    return ok;
}

UmaeParams UmaeParams::zeros_like() const {
    UmaeParams z = *this;
    z.visit([](const std::string&, Eigen::MatrixXd& t) { t.setZero(); });
    return z;
}

void UmaeParams::add_scaled(const UmaeParams& other, double scale) {
    std::vector<const Eigen::MatrixXd*> src;
    other.visit([&](const std::string&, const Eigen::MatrixXd& t) { src.push_back(&t); });
    std::size_t i = 0;
    visit([&](const std::string&, Eigen::MatrixXd& t) { t += scale * *src[i++]; });
}

UmaeParams init_params(const TrainConfig& config, std::size_t bands) {
    config.validate(bands);
    std::mt19937_64 rng(splitmix64(config.seed));
    const std::size_t d = config.latent_dim;
    const std::size_t t = config.group_len * config.patch * config.patch;
    const auto di = static_cast<Eigen::Index>(d);
    const auto bi = static_cast<Eigen::Index>(bands);
    UmaeParams p;
    p.bands = bands;
    p.n_heads = config.n_heads;
    p.embed = uniform_fan_in(d, t, rng);
    p.enc_pos = Eigen::MatrixXd::Zero(di, bi);
    for (std::size_t i = 0; i < config.enc_depth; ++i) p.encoder.push_back(init_block(d, config.mlp_ratio * d, rng));
    p.dec_proj = uniform_fan_in(d, d, rng);
    p.dec_pos = Eigen::MatrixXd::Zero(di, bi);
    p.mask_token = Eigen::MatrixXd::Zero(di, 1);
    p.head = uniform_fan_in(t, d, rng);
    for (std::size_t i = 0; i < config.dec_depth; ++i) p.decoder.push_back(init_block(d, config.mlp_ratio * d, rng));
    return p;
}

HsiCube extract_patch(const HsiCube& padded, std::size_t row, std::size_t col, std::size_t p) {
    if (row + p > padded.height() || col + p > padded.width()) throw ContractError("patch outside padded cube");
    HsiCube patch(p, p, padded.bands());
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) {
            const auto src = padded.pixel((row + r) * padded.width() + col + c);
            std::copy(src.begin(), src.end(), patch.pixel(r * p + c).begin());
        }
    return patch;
}

Eigen::MatrixXd build_groups(const HsiCube& patch, std::size_t group_len) {
    if (group_len == 0 || group_len % 2 == 0) {
        throw ParameterError("group length must be odd, got " + std::to_string(group_len));
    }
    const std::size_t bands = patch.bands();
    const std::size_t area = patch.pixels();
    const auto half = static_cast<std::ptrdiff_t>(group_len / 2);
    const auto nb = static_cast<std::ptrdiff_t>(bands);
    Eigen::MatrixXd groups(static_cast<Eigen::Index>(group_len * area), static_cast<Eigen::Index>(bands));
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        for (std::ptrdiff_t o = -half; o <= half; ++o) {
            // Zero-based form of the spectral wrap ((r - 1) mod B) + 1.
            const auto src = static_cast<std::size_t>(((b + o) % nb + nb) % nb);
            const std::size_t slot = static_cast<std::size_t>(o + half);
            for (std::size_t px = 0; px < area; ++px) {
                groups(static_cast<Eigen::Index>(slot * area + px), static_cast<Eigen::Index>(b)) = patch.pixel(px)[src];
            }
        }
    }
    return groups;
}

Eigen::MatrixXd tokenize(const Eigen::MatrixXd& groups, const UmaeParams& params) {
    if (groups.rows() != params.embed.cols() || groups.cols() != params.enc_pos.cols()) {
        throw ContractError("tokenize: group matrix is " + std::to_string(groups.rows()) + "x" +
                            std::to_string(groups.cols()) + ", model expects " + std::to_string(params.embed.cols()) +
                            "x" + std::to_string(params.enc_pos.cols()));
    }
    return params.embed * groups + params.enc_pos;
}

std::uint64_t mask_stream(std::uint32_t seed, std::uint64_t epoch, std::uint64_t pixel) {
    return splitmix64(splitmix64(splitmix64(seed) ^ epoch) ^ pixel);
}

Mask sample_mask(std::size_t bands, double mask_ratio, std::uint64_t stream) {
    const std::size_t k = visible_count(bands, mask_ratio);
    std::vector<std::size_t> order(bands);
    for (std::size_t i = 0; i < bands; ++i) order[i] = i;
    std::mt19937_64 rng(stream);
    for (std::size_t i = 0; i < k && i + 1 < bands; ++i) std::swap(order[i], order[i + uniform_below(rng, bands - i)]);
    Mask m;
    m.visible.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, bands)));
    m.masked.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(k, bands)), order.end());
    std::sort(m.visible.begin(), m.visible.end());
    std::sort(m.masked.begin(), m.masked.end());
    return m;
}

MaskedTokens mask_tokens(const Eigen::MatrixXd& tokens, double mask_ratio, std::uint64_t stream) {
    MaskedTokens out;
    out.mask = sample_mask(static_cast<std::size_t>(tokens.cols()), mask_ratio, stream);
    out.visible_tokens = visible_columns(tokens, out.mask.visible);
    return out;
}

Eigen::MatrixXd encoder_forward(const Eigen::MatrixXd& tokens, const UmaeParams& params) {
    if (tokens.rows() != static_cast<Eigen::Index>(params.latent_dim())) {
        throw ContractError("encoder_forward: token dimension mismatch");
    }
    return run_encoder(tokens, params, nullptr);
}

Eigen::MatrixXd decoder_forward(const Eigen::MatrixXd& latent_tokens, const Mask& mask, const UmaeParams& params) {
    check_mask(mask, params.bands);
    if (latent_tokens.cols() != static_cast<Eigen::Index>(mask.visible.size())) {
        throw ContractError("decoder_forward: latent token count differs from visible set size");
    }
    return run_decoder(latent_tokens, mask, params, nullptr);
}

double mse_masked(const Eigen::MatrixXd& reconstructed, const Eigen::MatrixXd& groups,
                  std::span<const std::size_t> masked) {
    if (masked.empty()) throw ContractError("mse_masked: no masked groups, loss undefined");
    if (reconstructed.cols() != static_cast<Eigen::Index>(masked.size()) || reconstructed.rows() != groups.rows()) {
        throw ContractError("mse_masked: shape mismatch");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < masked.size(); ++k) {
        sum += (reconstructed.col(static_cast<Eigen::Index>(k)) - groups.col(static_cast<Eigen::Index>(masked[k]))).squaredNorm();
    }
    return sum / static_cast<double>(reconstructed.size());
}

LossAndGradient backward(std::span<const TrainingSample> batch, const UmaeParams& params) {
    if (batch.empty()) throw ContractError("backward: empty batch");
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<UmaeParams> grads(batch.size());
    std::vector<double> losses(batch.size());
    parallel_for(0, batch.size(), [&](std::size_t i) {
        grads[i] = params.zeros_like();
        losses[i] = sample_backward(batch[i], params, scale, grads[i]);
    });
    LossAndGradient out;
    out.gradient = params.zeros_like();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.gradient.add_scaled(grads[i], 1.0);
        out.loss += losses[i];
    }
    out.loss *= scale;
    return out;
}

}  // namespace ds2dl::umae
