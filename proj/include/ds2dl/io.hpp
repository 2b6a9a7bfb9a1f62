#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ds2dl {

/// Dense H x W x B image cube stored pixel-major: the B band values of a pixel
/// are contiguous and pixels follow raster order (row * W + col).
class HsiCube {
public:
    HsiCube() = default;
    HsiCube(std::size_t height, std::size_t width, std::size_t bands);
    HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t pixels() const noexcept { return height_ * width_; }

    double& at(std::size_t row, std::size_t col, std::size_t band) {
        return data_[(row * width_ + col) * bands_ + band];
    }
    double at(std::size_t row, std::size_t col, std::size_t band) const {
        return data_[(row * width_ + col) * bands_ + band];
    }

    std::span<double> pixel(std::size_t index) { return {data_.data() + index * bands_, bands_}; }
    std::span<const double> pixel(std::size_t index) const {
        return {data_.data() + index * bands_, bands_};
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool operator==(const HsiCube&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t bands_ = 0;
    std::vector<double> data_;
};

/// Per-pixel integer labels, 0 = unlabeled. Also used for superpixel ids and
/// cluster maps.
class LabelMask {
public:
    LabelMask() = default;
    LabelMask(std::size_t height, std::size_t width);
    LabelMask(std::size_t height, std::size_t width, std::vector<std::uint16_t> labels);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return height_ * width_; }

    std::uint16_t& operator[](std::size_t index) { return labels_[index]; }
    std::uint16_t operator[](std::size_t index) const { return labels_[index]; }

    const std::vector<std::uint16_t>& labels() const noexcept { return labels_; }

    /// Largest label present, i.e. the class count for a ground-truth mask.
    std::size_t num_classes() const;

    bool operator==(const LabelMask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint16_t> labels_;
};

// DSC1 cube file: "DSC1", u32 H, u32 W, u32 B (little endian), then H*W*B f32.
HsiCube load_cube(const std::filesystem::path& path);
void save_cube(const HsiCube& cube, const std::filesystem::path& path);

// DSL1 label file: "DSL1", u32 H, u32 W, then H*W u16.
LabelMask load_labels(const std::filesystem::path& path);
void save_labels(const LabelMask& mask, const std::filesystem::path& path);

/// Rescales each band to [0,1] over the whole scene. Constant bands map to 0.
HsiCube normalize_bands(const HsiCube& cube);

/// Mirror padding (edge pixel not repeated) of (p-1)/2 on every side.
HsiCube pad_reflect(const HsiCube& cube, std::size_t p);

/// HW x B matrix, row index = row * W + col.
Eigen::MatrixXd flatten(const HsiCube& cube);
HsiCube unflatten(const Eigen::MatrixXd& rows, std::size_t height, std::size_t width);

}  // namespace ds2dl
