#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ds2dl/io.hpp"

namespace ds2dl {

struct SynthSpec {
    std::size_t height = 60;
    std::size_t width = 60;
    std::size_t bands = 30;
    std::size_t classes = 4;
    double noise = 0.05;  // standard deviation of additive Gaussian noise
    std::uint32_t seed = 0;

    void validate() const;
};

struct SynthScene {
    HsiCube cube;
    LabelMask labels;
    Eigen::MatrixXd centers;     // class x (row, col) Voronoi sites
    Eigen::MatrixXd signatures;  // class x band noiseless spectra
};

/// Voronoi class regions (each a convex, hence connected, cell) with one
/// smooth spectrum per class plus i.i.d. Gaussian noise. Fully determined by
/// `spec`.
SynthScene make_synthetic_scene(const SynthSpec& spec);

}  // namespace ds2dl
