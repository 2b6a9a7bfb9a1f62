#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ds2dl/io.hpp"

namespace ds2dl::umae {

/// Masked autoencoder hyper-parameters. Integer fields are persisted in
/// checkpoints in declaration order.
struct TrainConfig {
    std::size_t n_train = 512;    // training pixels picked by farthest point sampling
    std::size_t patch = 3;        // spatial patch side p (odd)
    std::size_t group_len = 3;    // bands per spatial-spectral group (odd)
    std::size_t latent_dim = 48;  // D
    std::size_t epochs = 30;
    std::size_t enc_depth = 4;
    std::size_t dec_depth = 2;
    std::size_t n_heads = 4;
    std::size_t mlp_ratio = 2;
    std::size_t batch_size = 64;
    std::uint32_t seed = 0;

    double mask_ratio = 0.5;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Throws ParameterError on inconsistent settings for a cube with `bands` bands.
    void validate(std::size_t bands) const;
};

/// Number of tokens the encoder sees: max(1, round((1 - mask_ratio) * bands)).
std::size_t visible_count(std::size_t bands, double mask_ratio);

/// Pre-norm transformer block weights. Vectors are stored as D x 1 matrices so
/// every tensor can be visited uniformly.
struct BlockParams {
    Eigen::MatrixXd ln1_gamma, ln1_beta;
    Eigen::MatrixXd wq, bq, wk, bk, wv, bv, wo, bo;
    Eigen::MatrixXd ln2_gamma, ln2_beta;
    Eigen::MatrixXd w1, b1, w2, b2;

    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn) {
        fn("ln1_gamma", self.ln1_gamma);
        fn("ln1_beta", self.ln1_beta);
        fn("wq", self.wq);
        fn("bq", self.bq);
        fn("wk", self.wk);
        fn("bk", self.bk);
        fn("wv", self.wv);
        fn("bv", self.bv);
        fn("wo", self.wo);
        fn("bo", self.bo);
        fn("ln2_gamma", self.ln2_gamma);
        fn("ln2_beta", self.ln2_beta);
        fn("w1", self.w1);
        fn("b1", self.b1);
        fn("w2", self.w2);
        fn("b2", self.b2);
    }
};

struct UmaeParams {
    std::size_t bands = 0;
    std::size_t n_heads = 1;

    Eigen::MatrixXd embed;        // D x (group_len * p^2)
    Eigen::MatrixXd enc_pos;      // D x B
    std::vector<BlockParams> encoder;
    Eigen::MatrixXd dec_proj;     // D x D
    Eigen::MatrixXd dec_pos;      // D x B
    Eigen::MatrixXd mask_token;   // D x 1
    Eigen::MatrixXd head;         // (group_len * p^2) x D
    std::vector<BlockParams> decoder;

    std::size_t latent_dim() const { return static_cast<std::size_t>(embed.rows()); }
    std::size_t token_len() const { return static_cast<std::size_t>(embed.cols()); }

    /// Calls fn(name, tensor) for every learnable tensor in declaration order.
    template <typename Fn>
    void visit(Fn&& fn) {
        visit_impl(*this, fn);
    }
    template <typename Fn>
    void visit(Fn&& fn) const {
        visit_impl(*this, fn);
    }

    std::size_t parameter_count() const;
    bool all_finite() const;

    /// Same shapes, all zeros.
    UmaeParams zeros_like() const;
    /// this += scale * other
    void add_scaled(const UmaeParams& other, double scale);

private:
    template <typename Self, typename Fn>
    static void visit_impl(Self& self, Fn& fn) {
        fn(std::string("embed"), self.embed);
        fn(std::string("enc_pos"), self.enc_pos);
        for (std::size_t i = 0; i < self.encoder.size(); ++i) {
            BlockParams::visit(self.encoder[i], [&](const char* n, auto& t) { fn("encoder." + std::to_string(i) + "." + n, t); });
        }
        fn(std::string("dec_proj"), self.dec_proj);
        fn(std::string("dec_pos"), self.dec_pos);
        fn(std::string("mask_token"), self.mask_token);
        fn(std::string("head"), self.head);
        for (std::size_t i = 0; i < self.decoder.size(); ++i) {
            BlockParams::visit(self.decoder[i], [&](const char* n, auto& t) { fn("decoder." + std::to_string(i) + "." + n, t); });
        }
    }
};

/// Seeded initialisation: uniform(+-1/sqrt(fan_in)) projections, zero biases,
/// unit layer-norm scales, zero positional encodings and mask token.
UmaeParams init_params(const TrainConfig& config, std::size_t bands);

/// Greedy farthest point sampling. First pick is farthest from the feature
/// mean; each next pick maximises the minimum distance to those chosen. Ties
/// go to the lowest index.
std::vector<std::size_t> fps_select(const Eigen::MatrixXd& features, std::size_t n_train);

/// p x p x B patch centred on (row, col) of the original image, read from a
/// cube padded with pad_reflect(cube, p).
HsiCube extract_patch(const HsiCube& padded, std::size_t row, std::size_t col, std::size_t p);

/// (group_len * p^2) x B matrix whose column b stacks the flattened band
/// slices b - group_len/2 .. b + group_len/2, wrapping around the spectrum.
Eigen::MatrixXd build_groups(const HsiCube& patch, std::size_t group_len);

/// Positional tokens embed * groups + enc_pos, D x B.
Eigen::MatrixXd tokenize(const Eigen::MatrixXd& groups, const UmaeParams& params);

struct Mask {
    std::vector<std::size_t> visible;  // ascending band indices
    std::vector<std::size_t> masked;   // ascending complement
};

/// Deterministic RNG stream keyed by (seed, epoch, pixel).
std::uint64_t mask_stream(std::uint32_t seed, std::uint64_t epoch, std::uint64_t pixel);

/// Uniformly random subset of visible_count(bands, ratio) bands.
Mask sample_mask(std::size_t bands, double mask_ratio, std::uint64_t stream);

struct MaskedTokens {
    Eigen::MatrixXd visible_tokens;  // D x K_vis, band order
    Mask mask;
};
MaskedTokens mask_tokens(const Eigen::MatrixXd& tokens, double mask_ratio, std::uint64_t stream);

/// Encoder stack over D x K tokens. Throws NumericError naming the block when
/// a non-finite value appears.
Eigen::MatrixXd encoder_forward(const Eigen::MatrixXd& tokens, const UmaeParams& params);

/// Reconstructed groups for the masked bands, (group_len * p^2) x |masked|.
Eigen::MatrixXd decoder_forward(const Eigen::MatrixXd& latent_tokens, const Mask& mask, const UmaeParams& params);

/// Mean squared error over all entries of the masked columns.
double mse_masked(const Eigen::MatrixXd& reconstructed, const Eigen::MatrixXd& groups,
                  std::span<const std::size_t> masked);

struct TrainingSample {
    Eigen::MatrixXd groups;  // full (group_len * p^2) x B group matrix
    Mask mask;
};

struct LossAndGradient {
    double loss = 0.0;  // mean of per-sample masked MSE
    UmaeParams gradient;
};

/// Exact gradient of the batch-mean masked MSE with respect to every tensor.
/// Per-sample gradients are summed in batch order, so the result does not
/// depend on the worker count.
LossAndGradient backward(std::span<const TrainingSample> batch, const UmaeParams& params);

struct TrainResult {
    UmaeParams params;
    std::vector<double> epoch_losses;
    std::vector<std::size_t> training_pixels;
};

/// Picks training pixels by FPS on up to 20 principal components, then runs
/// Adam for config.epochs epochs over seeded shuffled mini-batches with a
/// fresh mask per (epoch, pixel). `cube` must already be band-normalised.
TrainResult train(const HsiCube& cube, const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

/// Per-pixel latent: encoder over all B tokens (no masking), mean over tokens.
HsiCube encode_latent(const HsiCube& cube, const UmaeParams& params, std::size_t patch, std::size_t group_len);

// DSW1 checkpoint: "DSW1", the 11 integer TrainConfig fields as u32, u32 bands,
// then every tensor as little-endian f64 in visit() order.
void save_checkpoint(const UmaeParams& params, const TrainConfig& config, const std::filesystem::path& path);

struct Checkpoint {
    UmaeParams params;
    TrainConfig config;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "epoch,mean_loss" CSV.
void save_loss_log(const std::vector<double>& epoch_losses, const std::filesystem::path& path);

}  // namespace ds2dl::umae
