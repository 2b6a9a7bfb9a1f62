#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "ds2dl/error.hpp"
#include "ds2dl/umae.hpp"
#include "umae_oracles.hpp"

using namespace ds2dl;
using namespace ds2dl::umae;

namespace {

HsiCube random_cube(std::size_t h, std::size_t w, std::size_t b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    HsiCube c(h, w, b);
    for (auto& v : c.data()) v = u(rng);
    return c;
}

// Patch whose band b is filled with b + 1 at every pixel.
HsiCube band_indexed_patch(std::size_t p, std::size_t bands) {
    HsiCube c(p, p, bands);
    for (std::size_t i = 0; i < p * p; ++i)
        for (std::size_t b = 0; b < bands; ++b) c.pixel(i)[b] = static_cast<float>(b + 1);
    return c;
}

std::vector<TrainingSample> tiny_batch(const TrainConfig& cfg, std::size_t bands, std::size_t n, std::uint64_t seed) {
    const HsiCube cube = random_cube(5, 5, bands, seed);
    const HsiCube padded = pad_reflect(cube, cfg.patch);
    std::vector<TrainingSample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t px = (7 * i + 3) % cube.pixels();
        batch.push_back({build_groups(extract_patch(padded, px / 5, px % 5, cfg.patch), cfg.group_len),
                         sample_mask(bands, cfg.mask_ratio, mask_stream(cfg.seed, 0, px))});
    }
    return batch;
}

}  // namespace

TEST_CASE("fps picks the farthest point from the mean, then maximises min distance") {
    Eigen::MatrixXd f(3, 1);
    f << 0, 1, 10;
    CHECK(fps_select(f, 2) == std::vector<std::size_t>{2, 0});
    auto all = fps_select(f, 3);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(fps_select(f, 4), ParameterError);
}

TEST_CASE("fps agrees with an exhaustive max-min oracle and skips duplicates") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd f(40, 3);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = nd(rng);
    const auto got = fps_select(f, 10);
    Eigen::RowVectorXd mean = f.colwise().mean();
    std::size_t first = 0;
    for (Eigen::Index i = 1; i < f.rows(); ++i)
        if ((f.row(i) - mean).norm() > (f.row(first) - mean).norm()) first = i;
    CHECK(got[0] == first);
    for (std::size_t k = 1; k < got.size(); ++k) {
        double best = -1;
        std::size_t arg = 0;
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            double m = 1e300;
            for (std::size_t j = 0; j < k; ++j) m = std::min(m, (f.row(i) - f.row(got[j])).norm());
            if (m > best) best = m, arg = i;
        }
        CHECK(got[k] == arg);
    }

    Eigen::MatrixXd dup(6, 1);
    dup << 1, 1, 2, 2, 5, 5;
    const auto d = fps_select(dup, 2);
    CHECK(dup(d[0], 0) != dup(d[1], 0));
}

TEST_CASE("groups wrap around the spectrum") {
    const HsiCube patch = band_indexed_patch(1, 5);
    const Eigen::MatrixXd g = build_groups(patch, 3);
    REQUIRE(g.rows() == 3);
    REQUIRE(g.cols() == 5);
    CHECK(g(0, 0) == 5);
    CHECK(g(1, 0) == 1);
    CHECK(g(2, 0) == 2);
    CHECK(g(0, 4) == 4);
    CHECK(g(2, 4) == 1);
    for (Eigen::Index b = 1; b < 4; ++b) {
        CHECK(g(0, b) == b);
        CHECK(g(1, b) == b + 1);
        CHECK(g(2, b) == b + 2);
    }
    CHECK_THROWS_AS(build_groups(patch, 2), ParameterError);
}

TEST_CASE("group length one is the flattened band") {
    const HsiCube patch = random_cube(3, 3, 4, 1);
    const Eigen::MatrixXd g = build_groups(patch, 1);
    REQUIRE(g.rows() == 9);
    for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t i = 0; i < 9; ++i) CHECK(g(i, b) == doctest::Approx(patch.pixel(i)[b]));
}

TEST_CASE("extract_patch reads the centred window of the padded cube") {
    const HsiCube cube = random_cube(4, 5, 2, 9);
    const HsiCube padded = pad_reflect(cube, 3);
    const HsiCube patch = extract_patch(padded, 2, 3, 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t b = 0; b < 2; ++b) CHECK(patch.at(r, c, b) == cube.at(1 + r, 2 + c, b));
}

TEST_CASE("tokenize equals an explicit triple loop") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 6);
    oracle::randomize(p, 3, 0.5);
    const Eigen::MatrixXd g = build_groups(random_cube(3, 3, 6, 2), 3);
    const Eigen::MatrixXd t = tokenize(g, p);
    for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index b = 0; b < t.cols(); ++b) {
            double s = p.enc_pos(r, b);
            for (Eigen::Index k = 0; k < g.rows(); ++k) s += p.embed(r, k) * g(k, b);
            CHECK(std::abs(t(r, b) - s) <= 1e-12);
        }

    p.embed.setZero();
    p.enc_pos.setZero();
    CHECK(tokenize(g, p).isZero(0.0));
    oracle::randomize(p, 4, 1.0);
    p.enc_pos.setZero();
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(g.rows(), 6);
    e(5, 2) = 1.0;
    CHECK(tokenize(e, p).col(2).isApprox(p.embed.col(5)));
    CHECK_THROWS_AS(tokenize(Eigen::MatrixXd::Zero(3, 6), p), ContractError);
}

TEST_CASE("masks") {
    const Mask none = sample_mask(10, 0.0, 1);
    CHECK(none.visible.size() == 10);
    CHECK(none.masked.empty());
    const Mask half = sample_mask(10, 0.5, 1);
    CHECK(half.visible.size() == 5);
    CHECK(half.masked.size() == 5);
    CHECK(std::is_sorted(half.visible.begin(), half.visible.end()));
    const Mask again = sample_mask(10, 0.5, 1);
    CHECK(again.visible == half.visible);
    CHECK(visible_count(3, 0.9) == 1);
    CHECK(mask_stream(0, 1, 2) == mask_stream(0, 1, 2));
    CHECK(mask_stream(0, 1, 2) != mask_stream(0, 2, 1));

    // every band is equally likely to stay visible
    std::vector<int> hits(8, 0);
    for (std::uint64_t s = 0; s < 4000; ++s)
        for (std::size_t b : sample_mask(8, 0.5, mask_stream(7, 0, s)).visible) ++hits[b];
    for (int h : hits) CHECK(std::abs(h - 2000) < 200);

    Eigen::MatrixXd tokens = Eigen::MatrixXd::Random(4, 10);
    const MaskedTokens mt = mask_tokens(tokens, 0.5, 11);
    REQUIRE(mt.visible_tokens.cols() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(mt.visible_tokens.col(k) == tokens.col(mt.mask.visible[k]));
}

TEST_CASE("encoder with zeroed sublayers is the identity") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 6);
    for (auto& blk : p.encoder)
        BlockParams::visit(blk, [](const char*, Eigen::MatrixXd& t) { t.setZero(); });
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 1);
    CHECK(encoder_forward(x, p).isApprox(x, 1e-15));
}

TEST_CASE("encoder is permutation equivariant") {
    TrainConfig cfg = oracle::tiny_config();
    cfg.enc_depth = 2;
    UmaeParams p = init_params(cfg, 6);
    oracle::randomize(p, 8, 0.4);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
    const std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
    Eigen::MatrixXd xp(4, 5);
    for (Eigen::Index i = 0; i < 5; ++i) xp.col(i) = x.col(perm[i]);
    const Eigen::MatrixXd y = encoder_forward(x, p), yp = encoder_forward(xp, p);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK((yp.col(i) - y.col(perm[i])).norm() < 1e-12);
}

TEST_CASE("encoder matches a straight-line block") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 6);
    oracle::randomize(p, 21, 0.6);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
    const Eigen::MatrixXd ref = oracle::reference_block(x, p.encoder[0], 2);
    CHECK((encoder_forward(x, p) - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encoder reports the failing block") {
    TrainConfig cfg = oracle::tiny_config();
    cfg.enc_depth = 2;
    UmaeParams p = init_params(cfg, 6);
    p.encoder[1].b2(0, 0) = std::numeric_limits<double>::infinity();
    try {
        encoder_forward(Eigen::MatrixXd::Random(4, 3), p);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("block 1") != std::string::npos);
    }
}

TEST_CASE("decoder") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 6);
    oracle::randomize(p, 31, 0.5);
    const Mask mask{{0, 2, 3}, {1, 4, 5}};
    const Eigen::MatrixXd latent = Eigen::MatrixXd::Random(4, 3);
    const Eigen::MatrixXd got = decoder_forward(latent, mask, p);
    REQUIRE(got.rows() == 27);
    REQUIRE(got.cols() == 3);
    CHECK((got - oracle::reference_decoder(latent, mask, p)).cwiseAbs().maxCoeff() < 1e-12);

    const Mask none{{0, 1, 2, 3, 4, 5}, {}};
    CHECK(decoder_forward(Eigen::MatrixXd::Random(4, 6), none, p).cols() == 0);

    UmaeParams zero = p.zeros_like();
    zero.n_heads = p.n_heads;
    zero.bands = p.bands;
    CHECK(decoder_forward(latent, mask, zero).isZero(0.0));

    CHECK_THROWS_AS(decoder_forward(latent, Mask{{0, 2, 3}, {2, 4, 5}}, p), ContractError);
    CHECK_THROWS_AS(decoder_forward(latent, Mask{{0, 2, 3}, {1, 4}}, p), ContractError);
}

TEST_CASE("masked mse") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(2, 4);
    const std::vector<std::size_t> cols{1, 3};
    Eigen::MatrixXd rec(2, 2);
    rec.col(0) = a.col(1);
    rec.col(1) = a.col(3);
    CHECK(mse_masked(rec, a, cols) == 0.0);
    CHECK(mse_masked(rec.array() + 0.5, a, cols) == doctest::Approx(0.25));
    Eigen::MatrixXd one(2, 1);
    one << a(0, 2) + 1, a(1, 2) - 1;
    CHECK(mse_masked(one, a, std::vector<std::size_t>{2}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mse_masked(Eigen::MatrixXd(2, 0), a, {}), ContractError);
}

TEST_CASE("analytic gradients match central differences") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 8);
    CHECK(p.parameter_count() <= 2000);
    oracle::randomize(p, 77, 0.5);
    const auto batch = tiny_batch(cfg, 8, 2, 4);
    for (const auto& e : oracle::gradient_check(batch, p, 1e-5, 1e-6)) {
        INFO(e.tensor);
        CHECK(e.max_rel <= 1e-4);
    }
}

TEST_CASE("positional encodings of masked bands get no gradient") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 8);
    oracle::randomize(p, 5, 0.5);
    const auto batch = tiny_batch(cfg, 8, 1, 9);
    const auto lg = backward(batch, p);
    for (std::size_t b : batch[0].mask.masked) CHECK(lg.gradient.enc_pos.col(b).isZero(0.0));
    for (std::size_t b : batch[0].mask.visible) CHECK(!lg.gradient.enc_pos.col(b).isZero(0.0));
}

TEST_CASE("repeating every sample leaves the batch-mean gradient unchanged") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 8);
    oracle::randomize(p, 6, 0.5);
    const auto batch = tiny_batch(cfg, 8, 2, 1);
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const auto a = backward(batch, p), b = backward(doubled, p);
    CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-14));
    CHECK(b.gradient.dec_proj.isApprox(a.gradient.dec_proj, 1e-12));
    CHECK(b.gradient.embed.isApprox(a.gradient.embed, 1e-12));
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 8);
    oracle::randomize(p, 12, 0.5);
    const auto batch = tiny_batch(cfg, 8, 3, 2);
    const auto all = backward(batch, p);
    UmaeParams mean = p.zeros_like();
    double loss = 0;
    for (const auto& s : batch) {
        const auto one = backward(std::span(&s, 1), p);
        mean.add_scaled(one.gradient, 1.0 / 3.0);
        loss += one.loss / 3.0;
    }
    CHECK(all.loss == doctest::Approx(loss));
    CHECK(all.gradient.embed.isApprox(mean.embed, 1e-12));
    CHECK(all.gradient.head.isApprox(mean.head, 1e-12));
}

TEST_CASE("training with zero epochs returns the initialisation") {
    TrainConfig cfg = oracle::tiny_config();
    cfg.n_train = 10;
    cfg.epochs = 0;
    const HsiCube cube = random_cube(6, 6, 8, 3);
    const TrainResult r = train(cube, cfg);
    const UmaeParams init = init_params(cfg, 8);
    std::vector<const Eigen::MatrixXd*> a;
    r.params.visit([&](const std::string&, const Eigen::MatrixXd& t) { a.push_back(&t); });
    std::size_t i = 0;
    init.visit([&](const std::string&, const Eigen::MatrixXd& t) { CHECK(*a[i++] == t); });
    CHECK(r.epoch_losses.empty());
    CHECK(r.training_pixels.size() == 10);
}

TEST_CASE("training is deterministic and reduces the loss") {
    TrainConfig cfg = oracle::tiny_config();
    cfg.latent_dim = 8;
    cfg.n_train = 40;
    cfg.epochs = 30;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    // smooth spectra so masked groups are predictable from visible ones
    HsiCube cube(8, 8, 12);
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const double phase = 0.3 * static_cast<double>(i % 5) + 0.1 * static_cast<double>(i / 8);
        for (std::size_t b = 0; b < 12; ++b)
            cube.pixel(i)[b] = static_cast<float>(0.5 + 0.4 * std::sin(phase + 0.5 * static_cast<double>(b)));
    }
    std::vector<std::size_t> seen;
    const TrainResult a = train(cube, cfg, [&](std::size_t e, double) { seen.push_back(e); });
    const TrainResult b = train(cube, cfg);
    CHECK(seen.size() == 30);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.params.embed == b.params.embed);
    CHECK(a.epoch_losses.back() <= 0.5 * a.epoch_losses.front());
}

TEST_CASE("encode_latent") {
    TrainConfig cfg = oracle::tiny_config();
    UmaeParams p = init_params(cfg, 6);
    oracle::randomize(p, 2, 0.3);
    p.enc_pos.setZero();
    HsiCube flat(4, 5, 6);
    for (auto& v : flat.data()) v = 0.25f;
    const HsiCube lat = encode_latent(flat, p, 3, 3);
    CHECK(lat.bands() == 4);
    for (std::size_t i = 1; i < lat.pixels(); ++i)
        for (std::size_t k = 0; k < 4; ++k) CHECK(lat.pixel(i)[k] == lat.pixel(0)[k]);
    // identical tokens pass through attention unchanged, so the mean is that token
    const Eigen::MatrixXd g = build_groups(extract_patch(pad_reflect(flat, 3), 0, 0, 3), 3);
    const Eigen::MatrixXd tok = encoder_forward(tokenize(g, p), p);
    for (std::size_t k = 0; k < 4; ++k) CHECK(lat.pixel(0)[k] == doctest::Approx(tok(k, 0)).epsilon(1e-6));

    CHECK_THROWS_AS(encode_latent(random_cube(3, 3, 5, 1), p, 3, 3), ContractError);
}

TEST_CASE("checkpoint round trip") {
    TrainConfig cfg = oracle::tiny_config();
    cfg.seed = 42;
    cfg.n_train = 17;
    UmaeParams p = init_params(cfg, 7);
    oracle::randomize(p, 1, 1.0);
    const auto path = std::filesystem::temp_directory_path() / "ds2dl_test_ckpt.dsw";
    save_checkpoint(p, cfg, path);
    const Checkpoint ck = load_checkpoint(path);
    CHECK(ck.config.seed == 42);
    CHECK(ck.config.n_train == 17);
    CHECK(ck.params.bands == 7);
    std::vector<const Eigen::MatrixXd*> a;
    ck.params.visit([&](const std::string&, const Eigen::MatrixXd& t) { a.push_back(&t); });
    std::size_t i = 0;
    p.visit([&](const std::string&, const Eigen::MatrixXd& t) { CHECK(*a[i++] == t); });

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    {
        std::ofstream(path, std::ios::binary) << "XXXX";
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
