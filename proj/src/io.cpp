#include "ds2dl/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary.hpp"
#include "ds2dl/error.hpp"

namespace ds2dl {

namespace {

using binary::get_le;
using binary::put_le;
using binary::read_file;
using binary::write_file;

void expect_magic(const std::string& bytes, const char* magic, const std::filesystem::path& path) {
    if (bytes.size() < 4) {
        throw FormatError(path.string() + ": truncated at byte offset " + std::to_string(bytes.size()) +
                          ", expected 4-byte magic");
    }
    if (bytes.compare(0, 4, magic) != 0) {
        throw FormatError(path.string() + ": bad magic at byte offset 0, expected \"" + magic + "\"");
    }
}

std::uint32_t read_dim(const std::string& bytes, std::size_t offset, const char* name,
                       const std::filesystem::path& path) {
    if (bytes.size() < offset + 4) {
        throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(offset));
    }
    const auto value = get_le<std::uint32_t>(bytes, offset);
    if (value == 0) {
        throw FormatError(path.string() + ": zero " + name + " at byte offset " + std::to_string(offset));
    }
    return value;
}

void expect_payload(const std::string& bytes, std::size_t offset, std::size_t need,
                    const std::filesystem::path& path) {
    if (bytes.size() < offset + need) {
        throw FormatError(path.string() + ": truncated payload at byte offset " +
                          std::to_string(bytes.size()) + ", expected " + std::to_string(offset + need) +
                          " bytes");
    }
    if (bytes.size() > offset + need) {
        throw FormatError(path.string() + ": trailing data at byte offset " + std::to_string(offset + need));
    }
}

std::uint32_t checked_u32(std::size_t value, const char* what) {
    if (value == 0 || value > std::numeric_limits<std::uint32_t>::max()) {
        throw ParameterError(std::string(what) + " out of range for file header");
    }
    return static_cast<std::uint32_t>(value);
}

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

}  // namespace

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands)
    : HsiCube(height, width, bands, std::vector<double>(height * width * bands, 0.0)) {}

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
    if (height == 0 || width == 0 || bands == 0) throw ParameterError("cube dimensions must be positive");
    if (data_.size() != height * width * bands) {
        throw ContractError("cube data length " + std::to_string(data_.size()) + " != H*W*B = " +
                            std::to_string(height * width * bands));
    }
}

LabelMask::LabelMask(std::size_t height, std::size_t width)
    : LabelMask(height, width, std::vector<std::uint16_t>(height * width, 0)) {}

LabelMask::LabelMask(std::size_t height, std::size_t width, std::vector<std::uint16_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (height == 0 || width == 0) throw ParameterError("mask dimensions must be positive");
    if (labels_.size() != height * width) {
        throw ContractError("mask length " + std::to_string(labels_.size()) + " != H*W");
    }
}

std::size_t LabelMask::num_classes() const {
    if (labels_.empty()) return 0;
    return *std::max_element(labels_.begin(), labels_.end());
}

HsiCube load_cube(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    expect_magic(bytes, "DSC1", path);
    const std::size_t h = read_dim(bytes, 4, "height", path);
    const std::size_t w = read_dim(bytes, 8, "width", path);
    const std::size_t b = read_dim(bytes, 12, "bands", path);
    const std::size_t count = h * w * b;
    constexpr std::size_t header = 16;
    expect_payload(bytes, header, count * sizeof(float), path);
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = header + i * sizeof(float);
        const float v = get_le<float>(bytes, offset);
        if (!std::isfinite(v)) {
            throw FormatError(path.string() + ": non-finite value at byte offset " + std::to_string(offset));
        }
        data[i] = v;
    }
    return HsiCube(h, w, b, std::move(data));
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
    std::string out;
    out.reserve(16 + cube.data().size() * sizeof(float));
    out.append("DSC1", 4);
    put_le(out, checked_u32(cube.height(), "height"));
    put_le(out, checked_u32(cube.width(), "width"));
    put_le(out, checked_u32(cube.bands(), "bands"));
    for (double v : cube.data()) put_le(out, static_cast<float>(v));
    write_file(path, out);
}

LabelMask load_labels(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    expect_magic(bytes, "DSL1", path);
    const std::size_t h = read_dim(bytes, 4, "height", path);
    const std::size_t w = read_dim(bytes, 8, "width", path);
    constexpr std::size_t header = 12;
    expect_payload(bytes, header, h * w * sizeof(std::uint16_t), path);
    std::vector<std::uint16_t> labels(h * w);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = get_le<std::uint16_t>(bytes, header + i * sizeof(std::uint16_t));
    }
    return LabelMask(h, w, std::move(labels));
}

void save_labels(const LabelMask& mask, const std::filesystem::path& path) {
    std::string out;
    out.reserve(12 + mask.pixels() * sizeof(std::uint16_t));
    out.append("DSL1", 4);
    put_le(out, checked_u32(mask.height(), "height"));
    put_le(out, checked_u32(mask.width(), "width"));
    for (std::uint16_t v : mask.labels()) put_le(out, v);
    write_file(path, out);
}

HsiCube normalize_bands(const HsiCube& cube) {
    const std::size_t nb = cube.bands();
    std::vector<double> lo(nb, std::numeric_limits<double>::infinity());
    std::vector<double> hi(nb, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const auto px = cube.pixel(i);
        for (std::size_t b = 0; b < nb; ++b) {
            lo[b] = std::min(lo[b], px[b]);
            hi[b] = std::max(hi[b], px[b]);
        }
    }
    HsiCube out = cube;
    for (std::size_t i = 0; i < out.pixels(); ++i) {
        auto px = out.pixel(i);
        for (std::size_t b = 0; b < nb; ++b) {
            const double range = hi[b] - lo[b];
            px[b] = range > 0.0 ? (px[b] - lo[b]) / range : 0.0;
        }
    }
    return out;
}

HsiCube pad_reflect(const HsiCube& cube, std::size_t p) {
    if (p == 0 || p % 2 == 0) throw ParameterError("pad size p must be odd and positive, got " + std::to_string(p));
    const std::size_t r = (p - 1) / 2;
    const std::size_t h = cube.height() + 2 * r;
    const std::size_t w = cube.width() + 2 * r;
    HsiCube out(h, w, cube.bands());
    for (std::size_t row = 0; row < h; ++row) {
        const std::size_t src_row =
            reflect(static_cast<std::ptrdiff_t>(row) - static_cast<std::ptrdiff_t>(r), cube.height());
        for (std::size_t col = 0; col < w; ++col) {
            const std::size_t src_col =
                reflect(static_cast<std::ptrdiff_t>(col) - static_cast<std::ptrdiff_t>(r), cube.width());
            const auto src = cube.pixel(src_row * cube.width() + src_col);
            std::copy(src.begin(), src.end(), out.pixel(row * w + col).begin());
        }
    }
    return out;
}

Eigen::MatrixXd flatten(const HsiCube& cube) {
    Eigen::MatrixXd rows(cube.pixels(), cube.bands());
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const auto px = cube.pixel(i);
        for (std::size_t b = 0; b < cube.bands(); ++b) rows(i, b) = px[b];
    }
    return rows;
}

HsiCube unflatten(const Eigen::MatrixXd& rows, std::size_t height, std::size_t width) {
    if (static_cast<std::size_t>(rows.rows()) != height * width) {
        throw ContractError("unflatten: row count does not equal H*W");
    }
    HsiCube cube(height, width, static_cast<std::size_t>(rows.cols()));
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        auto px = cube.pixel(i);
        for (std::size_t b = 0; b < cube.bands(); ++b) px[b] = rows(i, b);
    }
    return cube;
}

}  // namespace ds2dl
