#include <doctest.h>

#include <set>

#include "ds2dl/error.hpp"
#include "ds2dl/superpixel.hpp"
#include "ds2dl/synth.hpp"
#include "oracles.hpp"

using namespace ds2dl;

TEST_CASE("synthetic scenes are seeded") {
    SynthSpec s;
    s.seed = 7;
    const SynthScene a = make_synthetic_scene(s), b = make_synthetic_scene(s);
    CHECK(a.cube == b.cube);
    CHECK(a.labels == b.labels);
    s.seed = 8;
    CHECK_FALSE(make_synthetic_scene(s).cube == a.cube);
}

TEST_CASE("class regions are contiguous and all present") {
    SynthSpec s;
    s.height = 30;
    s.width = 40;
    s.classes = 5;
    const SynthScene scene = make_synthetic_scene(s);
    CHECK(scene.labels.num_classes() == 5);
    const auto seg = SuperpixelSegmentation::from_label_mask(scene.labels);
    CHECK(seg.count() == 5);
    for (std::size_t id = 1; id <= 5; ++id)
        CHECK(oracle::is_8_connected(segment_members(seg, id), 30, 40));
}

TEST_CASE("noise-free pixels equal their class signature") {
    SynthSpec s;
    s.noise = 0.0;
    s.height = 10;
    s.width = 12;
    const SynthScene scene = make_synthetic_scene(s);
    for (std::size_t i = 0; i < scene.cube.pixels(); ++i) {
        const auto c = static_cast<Eigen::Index>(scene.labels[i] - 1);
        for (std::size_t b = 0; b < s.bands; ++b)
            CHECK(scene.cube.pixel(i)[b] == static_cast<float>(scene.signatures(c, static_cast<Eigen::Index>(b))));
    }
}

TEST_CASE("one class gives a uniform mask") {
    SynthSpec s;
    s.classes = 1;
    s.height = 5;
    s.width = 5;
    const SynthScene scene = make_synthetic_scene(s);
    for (auto l : scene.labels.labels()) CHECK(l == 1);
    s.classes = 0;
    CHECK_THROWS_AS(make_synthetic_scene(s), ParameterError);
    s.classes = 2;
    s.noise = -1;
    CHECK_THROWS_AS(make_synthetic_scene(s), ParameterError);
}
