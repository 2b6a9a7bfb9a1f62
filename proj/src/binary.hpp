#pragma once

// Little-endian byte helpers shared by the binary file formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "ds2dl/error.hpp"

namespace ds2dl::binary {

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return value;
    }
}

template <typename T>
void put_le(std::string& out, T value) {
    const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(to_little(value));
    out.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
    std::array<char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
    return to_little(std::bit_cast<T>(bytes));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace ds2dl::binary
