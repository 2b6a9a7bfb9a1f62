#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ds2dl/io.hpp"

namespace ds2dl {

struct PixelEdge {
    std::size_t a;
    std::size_t b;
    double weight;  // exp(-|f_a - f_b|^2 / (2 sigma^2)), in (0, 1]
};

/// 8-connected lattice over an H x W image. Edges are generated per pixel in
/// raster order towards (r, c+1), (r+1, c-1), (r+1, c), (r+1, c+1); the
/// position in `edges` is the edge index used for tie-breaking.
struct PixelGraph {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<PixelEdge> edges;
};

/// Root-mean-square per-channel difference across all 8-neighbour pairs; 1 for
/// a constant image.
double default_edge_sigma(const HsiCube& pc_image);

PixelGraph build_pixel_graph(const HsiCube& pc_image, double sigma_e);

/// First `components` principal-component scores per pixel as an image.
/// Missing components (fewer bands or pixels) are zero.
HsiCube pca_image(const HsiCube& cube, std::size_t components = 3);

/// Partition of the image into connected segments with ids 1..count.
class SuperpixelSegmentation {
public:
    SuperpixelSegmentation() = default;
    SuperpixelSegmentation(std::size_t height, std::size_t width, std::vector<std::uint32_t> ids);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return ids_.size(); }
    std::size_t count() const noexcept { return count_; }
    std::uint32_t id(std::size_t pixel) const { return ids_[pixel]; }
    const std::vector<std::uint32_t>& ids() const noexcept { return ids_; }

    /// Pixel indices per segment, raster order; index 0 of the outer vector is segment 1.
    const std::vector<std::vector<std::size_t>>& all_members() const noexcept { return members_; }

    LabelMask to_label_mask() const;
    static SuperpixelSegmentation from_label_mask(const LabelMask& mask);

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t count_ = 0;
    std::vector<std::uint32_t> ids_;
    std::vector<std::vector<std::size_t>> members_;
};

/// Pixels of segment `id` (1-based) in raster order.
std::vector<std::size_t> segment_members(const SuperpixelSegmentation& seg, std::size_t id);

/// 0.5 * n_segments * (largest single-edge entropy-rate gain) / (largest
/// single-edge balancing gain), both evaluated on the empty edge set.
double default_balance_weight(const PixelGraph& graph, std::size_t n_segments);

struct ErsStats {
    double lambda_balance = 0.0;
    std::size_t edges_selected = 0;
    std::size_t merges = 0;
    /// Largest observed increase between consecutive selected gains (should be ~0).
    double max_gain_increase = 0.0;
};

/// Entropy-rate superpixels: lazy greedy maximisation of H(A) + lambda * B(A)
/// over edge sets A, stopped as soon as the number of connected components
/// equals n_segments. Omitting lambda_balance uses default_balance_weight.
SuperpixelSegmentation ers_segment(const PixelGraph& graph, std::size_t n_segments,
                                   std::optional<double> lambda_balance = std::nullopt, ErsStats* stats = nullptr);

}  // namespace ds2dl
