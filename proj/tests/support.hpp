#pragma once

#include "guesswho/error.hpp"
#include "guesswho/fixture_backend.hpp"
#include "guesswho/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(GUESSWHO_TEST_DATA) / rel; }

/// Kind of the guesswho::Error thrown by `f`, or nullopt if nothing was thrown.
inline std::optional<guesswho::ErrorKind> error_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const guesswho::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("guesswho-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::map<std::string, guesswho::AttributeBits> board_bits() {
    std::ifstream in(data_path("board/fixture_images.csv"));
    return guesswho::FixtureBackend::parse_images(in);
}

/// Fixture backend over the 64-card board with prompts from the default catalog.
inline std::shared_ptr<guesswho::FixtureBackend> board_backend() {
    return std::make_shared<guesswho::FixtureBackend>(
        board_bits(), guesswho::FixtureBackend::prompts_from_catalog(guesswho::Catalog::defaults()));
}

inline std::vector<std::string> board_refs() {
    std::vector<std::string> refs;
    for (const auto& [id, bits] : board_bits()) refs.push_back(id);
    return refs;
}

/// One fixture image per bit pattern, named "img<N>".
inline std::map<std::string, guesswho::AttributeBits> bits_images(const std::vector<guesswho::AttributeBits>& rows) {
    std::map<std::string, guesswho::AttributeBits> images;
    for (std::size_t i = 0; i < rows.size(); ++i) images.emplace("img" + std::to_string(i), rows[i]);
    return images;
}

inline guesswho::AttributeBits random_bits(std::mt19937_64& rng) {
    guesswho::AttributeBits bits{};
    for (auto& b : bits) b = (rng() & 1) ? 1 : -1;
    return bits;
}

inline guesswho::AttributeBits all_bits(std::int8_t v) {
    guesswho::AttributeBits bits{};
    bits.fill(v);
    return bits;
}

} // namespace testing
