#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace guesswho {

/// Interleaved RGB, row-major, channel values in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Per-channel normalization applied after scaling to [0, 1].
struct Normalization {
    std::array<float, 3> mean;
    std::array<float, 3> std;

    /// Constants published with the reference CLIP image encoder.
    static constexpr Normalization clip() {
        return {{0.48145466f, 0.4578275f, 0.40821073f}, {0.26862954f, 0.26130258f, 0.27577711f}};
    }
};

/// Planar float tensor, channels x size x size.
struct ImageTensor {
    int size = 0;
    std::vector<float> data;

    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * size + y) * size + x];
    }
};

/// Decodes JPEG/PNG/BMP bytes. Throws Decode naming `ref` on empty,
/// truncated or otherwise unreadable input.
RgbImage decode_image(std::span<const std::uint8_t> bytes, std::string_view ref);

RgbImage load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Resizes the shorter side to `size` (bicubic), center-crops size x size
/// and normalizes each channel. Throws Decode on a zero-sized image.
ImageTensor preprocess_image(const RgbImage& image, const Normalization& norm = Normalization::clip(),
                             int size = 224);

} // namespace guesswho
