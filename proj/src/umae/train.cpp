#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "../binary.hpp"
#include "ds2dl/error.hpp"
#include "ds2dl/numerics.hpp"
#include "ds2dl/parallel.hpp"
#include "ds2dl/umae.hpp"

namespace ds2dl::umae {

namespace {

constexpr std::size_t kFpsComponents = 20;

struct Adam {
    UmaeParams m, v;
    std::size_t step = 0;

    explicit Adam(const UmaeParams& like) : m(like.zeros_like()), v(like.zeros_like()) {}

    void update(UmaeParams& params, const UmaeParams& grad, const TrainConfig& cfg) {
        ++step;
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
        std::vector<Eigen::MatrixXd*> ps, ms, vs;
        std::vector<const Eigen::MatrixXd*> gs;
        params.visit([&](const std::string&, Eigen::MatrixXd& t) { ps.push_back(&t); });
        m.visit([&](const std::string&, Eigen::MatrixXd& t) { ms.push_back(&t); });
        v.visit([&](const std::string&, Eigen::MatrixXd& t) { vs.push_back(&t); });
        grad.visit([&](const std::string&, const Eigen::MatrixXd& t) { gs.push_back(&t); });
        for (std::size_t i = 0; i < ps.size(); ++i) {
            *ms[i] = cfg.adam_beta1 * *ms[i] + (1.0 - cfg.adam_beta1) * *gs[i];
            *vs[i] = cfg.adam_beta2 * *vs[i] + (1.0 - cfg.adam_beta2) * gs[i]->cwiseAbs2();
            const Eigen::ArrayXXd mhat = ms[i]->array() / c1;
            const Eigen::ArrayXXd vhat = vs[i]->array() / c2;
            ps[i]->array() -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
        }
    }
};

std::vector<std::uint32_t> config_ints(const TrainConfig& c) {
    auto u32 = [](std::size_t v) {
        if (v > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("config value exceeds 32 bits");
        return static_cast<std::uint32_t>(v);
    };
    return {u32(c.n_train), u32(c.patch),     u32(c.group_len), u32(c.latent_dim), u32(c.epochs),     u32(c.enc_depth),
            u32(c.dec_depth), u32(c.n_heads), u32(c.mlp_ratio), u32(c.batch_size), c.seed};
}

}  // namespace

std::vector<std::size_t> fps_select(const Eigen::MatrixXd& features, std::size_t n_train) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (n_train > n) {
        throw ParameterError("fps_select: requested " + std::to_string(n_train) + " pixels from " + std::to_string(n));
    }
    std::vector<std::size_t> picked;
    if (n_train == 0) return picked;
    picked.reserve(n_train);
    const Eigen::RowVectorXd mean = features.colwise().mean();
    auto argmax = [&](const std::vector<double>& score) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < score.size(); ++i) {
            if (score[i] > score[best]) best = i;
        }
        return best;
    };
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = (features.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
    std::size_t next = argmax(dist);
    std::vector<char> chosen(n, 0);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (;;) {
        picked.push_back(next);
        chosen[next] = 1;
        if (picked.size() == n_train) break;
        const auto row = features.row(static_cast<Eigen::Index>(next));
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) {
                dist[i] = -1.0;
                continue;
            }
            dist[i] = std::min(dist[i], (features.row(static_cast<Eigen::Index>(i)) - row).squaredNorm());
        }
        next = argmax(dist);
    }
    return picked;
}

TrainResult train(const HsiCube& cube, const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch) {
    config.validate(cube.bands());
    if (config.n_train > cube.pixels()) {
        throw ParameterError("n_train " + std::to_string(config.n_train) + " exceeds pixel count " +
                             std::to_string(cube.pixels()));
    }
    TrainResult result;
    result.params = init_params(config, cube.bands());

    const Eigen::MatrixXd flat = flatten(cube);
    const std::size_t comps = std::min({kFpsComponents, cube.bands(), cube.pixels()});
    const Eigen::MatrixXd features = cube.pixels() >= 2 ? pca(flat, comps).scores : flat;
    result.training_pixels = fps_select(features, config.n_train);
    if (config.epochs == 0) return result;

    const HsiCube padded = pad_reflect(cube, config.patch);
    std::vector<Eigen::MatrixXd> groups(result.training_pixels.size());
    parallel_for(0, groups.size(), [&](std::size_t i) {
        const std::size_t px = result.training_pixels[i];
        groups[i] = build_groups(extract_patch(padded, px / cube.width(), px % cube.width(), config.patch),
                                 config.group_len);
    });

    Adam adam(result.params);
    std::vector<std::size_t> order(groups.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937_64 shuffle_rng(mask_stream(config.seed, epoch, std::numeric_limits<std::uint64_t>::max()));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng() % i)]);
        }
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<TrainingSample> batch;
            batch.reserve(end - start);
            for (std::size_t j = start; j < end; ++j) {
                const std::size_t sample = order[j];
                const std::size_t pixel = result.training_pixels[sample];
                batch.push_back({groups[sample], sample_mask(cube.bands(), config.mask_ratio,
                                                             mask_stream(config.seed, epoch, pixel))});
            }
            const LossAndGradient lg = backward(batch, result.params);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
            }
            epoch_sum += lg.loss * static_cast<double>(batch.size());
            adam.update(result.params, lg.gradient, config);
            if (!result.params.all_finite()) {
                throw NumericError("training diverged: non-finite parameters in epoch " + std::to_string(epoch + 1));
            }
        }
        const double mean_loss = epoch_sum / static_cast<double>(order.size());
        result.epoch_losses.push_back(mean_loss);
        if (on_epoch) on_epoch(epoch + 1, mean_loss);
    }
    return result;
}

HsiCube encode_latent(const HsiCube& cube, const UmaeParams& params, std::size_t patch, std::size_t group_len) {
    if (cube.bands() != params.bands) {
        throw ContractError("encode_latent: cube has " + std::to_string(cube.bands()) + " bands, model expects " +
                            std::to_string(params.bands));
    }
    if (group_len * patch * patch != params.token_len()) {
        throw ContractError("encode_latent: patch/group length do not match the model embedding");
    }
    const HsiCube padded = pad_reflect(cube, patch);
    const std::size_t d = params.latent_dim();
    HsiCube latent(cube.height(), cube.width(), d);
    parallel_for(0, cube.pixels(), [&](std::size_t px) {
        const Eigen::MatrixXd groups =
            build_groups(extract_patch(padded, px / cube.width(), px % cube.width(), patch), group_len);
        const Eigen::MatrixXd tokens = encoder_forward(tokenize(groups, params), params);
        const Eigen::VectorXd pooled = tokens.rowwise().mean();
        auto out = latent.pixel(px);
        for (std::size_t k = 0; k < d; ++k) out[k] = pooled(static_cast<Eigen::Index>(k));
    });
    return latent;
}

void save_checkpoint(const UmaeParams& params, const TrainConfig& config, const std::filesystem::path& path) {
    std::string out = "DSW1";
    for (std::uint32_t v : config_ints(config)) binary::put_le(out, v);
    binary::put_le(out, static_cast<std::uint32_t>(params.bands));
    params.visit([&](const std::string&, const Eigen::MatrixXd& t) {
        // Column-major element order.
        for (Eigen::Index i = 0; i < t.size(); ++i) binary::put_le(out, t.data()[i]);
    });
    binary::write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = binary::read_file(path);
    if (bytes.size() < 4 || bytes.compare(0, 4, "DSW1") != 0) {
        throw FormatError(path.string() + ": bad magic at byte offset 0, expected \"DSW1\"");
    }
    constexpr std::size_t n_ints = 12;
    if (bytes.size() < 4 + 4 * n_ints) {
        throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(bytes.size()));
    }
    std::vector<std::uint32_t> ints(n_ints);
    for (std::size_t i = 0; i < n_ints; ++i) ints[i] = binary::get_le<std::uint32_t>(bytes, 4 + 4 * i);
    Checkpoint ck;
    TrainConfig& c = ck.config;
    c.n_train = ints[0];
    c.patch = ints[1];
    c.group_len = ints[2];
    c.latent_dim = ints[3];
    c.epochs = ints[4];
    c.enc_depth = ints[5];
    c.dec_depth = ints[6];
    c.n_heads = ints[7];
    c.mlp_ratio = ints[8];
    c.batch_size = ints[9];
    c.seed = ints[10];
    const std::size_t bands = ints[11];
    // Shapes only; mask_ratio is irrelevant for loading.
    TrainConfig shape = c;
    shape.epochs = 0;
    try {
        ck.params = init_params(shape, bands);
    } catch (const ParameterError& e) {
        throw FormatError(path.string() + ": invalid config header (" + e.what() + ")");
    }
    const std::size_t need = 4 + 4 * n_ints + ck.params.parameter_count() * sizeof(double);
    if (bytes.size() != need) {
        throw FormatError(path.string() + ": expected " + std::to_string(need) + " bytes, found " +
                          std::to_string(bytes.size()) + " (mismatch at byte offset " +
                          std::to_string(std::min(need, bytes.size())) + ")");
    }
    std::size_t offset = 4 + 4 * n_ints;
    ck.params.visit([&](const std::string&, Eigen::MatrixXd& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = binary::get_le<double>(bytes, offset);
            offset += sizeof(double);
        }
    });
    if (!ck.params.all_finite()) throw FormatError(path.string() + ": checkpoint contains non-finite weights");
    return ck;
}

void save_loss_log(const std::vector<double>& epoch_losses, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "epoch,mean_loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < epoch_losses.size(); ++i) out << (i + 1) << ',' << epoch_losses[i] << '\n';
    binary::write_file(path, out.str());
}

}  // namespace ds2dl::umae
