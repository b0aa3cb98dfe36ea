#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gvs/error.hpp"

namespace gvs::detail {

inline std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

inline std::vector<char> encode_f32le(const double* values, std::size_t n) {
    std::vector<char> bytes(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = static_cast<float>(values[i]);
        const std::uint32_t le = to_little(std::bit_cast<std::uint32_t>(f));
        std::memcpy(bytes.data() + 4 * i, &le, 4);
    }
    return bytes;
}

inline std::vector<double> decode_f32le(const std::vector<char>& bytes) {
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t le = 0;
        std::memcpy(&le, bytes.data() + 4 * i, 4);
        out[i] = static_cast<double>(std::bit_cast<float>(to_little(le)));
    }
    return out;
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

inline void write_file(const std::filesystem::path& path, const char* data, std::size_t n) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(data, static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, text.data(), text.size());
}

}  // namespace gvs::detail
