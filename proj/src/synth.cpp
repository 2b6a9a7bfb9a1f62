#include "ds2dl/synth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ds2dl/error.hpp"

namespace ds2dl {

namespace {

constexpr int kPlacementTries = 2000;
constexpr int kBumps = 3;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

// Box-Muller so the stream is identical across standard libraries.
double gaussian(std::mt19937_64& rng) {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform(rng, 0.0, 1.0);
    const double u2 = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

void SynthSpec::validate() const {
    if (height == 0 || width == 0 || bands == 0) throw ParameterError("synthetic dimensions must be positive");
    if (classes == 0 || classes > height * width || classes > 65535) {
        throw ParameterError("class count must be in [1, min(H*W, 65535)], got " + std::to_string(classes));
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ParameterError("noise must be non-negative");
}

SynthScene make_synthetic_scene(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(0x5eedULL ^ (static_cast<std::uint64_t>(spec.seed) << 17));
    SynthScene scene;
    const auto k = static_cast<Eigen::Index>(spec.classes);

    // Sites spread out by rejection so no region is tiny.
    const double spacing = 0.5 * std::sqrt(static_cast<double>(spec.height * spec.width) / static_cast<double>(k));
    scene.centers.resize(k, 2);
    for (Eigen::Index c = 0; c < k; ++c) {
        for (int attempt = 0;; ++attempt) {
            const double r = uniform(rng, 0.0, static_cast<double>(spec.height));
            const double q = uniform(rng, 0.0, static_cast<double>(spec.width));
            bool ok = true;
            for (Eigen::Index o = 0; o < c && attempt < kPlacementTries; ++o)
                if (std::hypot(scene.centers(o, 0) - r, scene.centers(o, 1) - q) < spacing) ok = false;
            if (ok) {
                scene.centers(c, 0) = r;
                scene.centers(c, 1) = q;
                break;
            }
        }
    }

    scene.signatures.resize(k, static_cast<Eigen::Index>(spec.bands));
    for (Eigen::Index c = 0; c < k; ++c) {
        const double base = uniform(rng, 0.1, 0.3);
        double mu[kBumps], width[kBumps], amp[kBumps];
        for (int j = 0; j < kBumps; ++j) {
            mu[j] = uniform(rng, 0.0, 1.0);
            width[j] = uniform(rng, 0.08, 0.25);
            amp[j] = uniform(rng, 0.1, 0.5);
        }
        for (std::size_t b = 0; b < spec.bands; ++b) {
            const double x = spec.bands == 1 ? 0.5 : static_cast<double>(b) / static_cast<double>(spec.bands - 1);
            double v = base;
            for (int j = 0; j < kBumps; ++j) v += amp[j] * std::exp(-0.5 * std::pow((x - mu[j]) / width[j], 2));
            scene.signatures(c, static_cast<Eigen::Index>(b)) = std::min(v, 0.95);
        }
    }

    scene.cube = HsiCube(spec.height, spec.width, spec.bands);
    scene.labels = LabelMask(spec.height, spec.width);
    for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t q = 0; q < spec.width; ++q) {
            const double pr = static_cast<double>(r) + 0.5, pq = static_cast<double>(q) + 0.5;
            Eigen::Index best = 0;
            double best_d = INFINITY;
            for (Eigen::Index c = 0; c < k; ++c) {
                const double d = std::pow(scene.centers(c, 0) - pr, 2) + std::pow(scene.centers(c, 1) - pq, 2);
                if (d < best_d) best_d = d, best = c;
            }
            const std::size_t i = r * spec.width + q;
            scene.labels[i] = static_cast<std::uint16_t>(best + 1);
            auto px = scene.cube.pixel(i);
            for (std::size_t b = 0; b < spec.bands; ++b) {
                double v = scene.signatures(best, static_cast<Eigen::Index>(b));
                if (spec.noise > 0.0) v += spec.noise * gaussian(rng);
                px[b] = static_cast<float>(v);
            }
        }
    }
    return scene;
}

}  // namespace ds2dl
