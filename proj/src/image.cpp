#include "guesswho/image.hpp"

#include "guesswho/error.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace guesswho {

namespace {

bool is_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// libjpeg recovers from a missing end-of-image marker by padding with gray;
// reject those files instead of classifying a half-decoded face.
bool jpeg_has_end_marker(std::span<const std::uint8_t> bytes) {
    std::size_t end = bytes.size();
    while (end > 0 && bytes[end - 1] == 0x00) --end;
    const std::size_t window = std::min<std::size_t>(end, 64);
    for (std::size_t i = end - window; i + 1 < end; ++i)
        if (bytes[i] == 0xFF && bytes[i + 1] == 0xD9) return true;
    return false;
}

} // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes, std::string_view ref) {
    const std::string where(ref);
    if (bytes.empty()) throw Error(ErrorKind::Decode, "image is empty", where);
    if (is_jpeg(bytes) && !jpeg_has_end_marker(bytes))
        throw Error(ErrorKind::Decode, "truncated JPEG image", where);

    cv::Mat encoded(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr;
    try {
        bgr = cv::imdecode(encoded, cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Decode, std::string("cannot decode image: ") + e.what(), where);
    }
    if (bgr.empty() || bgr.cols == 0 || bgr.rows == 0) throw Error(ErrorKind::Decode, "cannot decode image", where);

    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    cv::Mat scaled;
    rgb.convertTo(scaled, CV_32FC3, 1.0 / 255.0);

    RgbImage out;
    out.width = scaled.cols;
    out.height = scaled.rows;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    for (int y = 0; y < out.height; ++y) {
        const float* row = scaled.ptr<float>(y);
        std::copy(row, row + out.width * 3, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * out.width * 3);
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Decode, "cannot open image file", path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_image(bytes, path.string());
}

ImageTensor preprocess_image(const RgbImage& image, const Normalization& norm, int size) {
    if (image.width <= 0 || image.height <= 0)
        throw Error(ErrorKind::Decode, "image has a zero dimension");
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw Error(ErrorKind::Decode, "image buffer does not match its dimensions");

    cv::Mat src(image.height, image.width, CV_32FC3, const_cast<float*>(image.pixels.data()));
    // Long side truncated and crop offset rounded half-to-even, as in the
    // reference torchvision pipeline.
    const int shorter = std::min(image.width, image.height);
    const auto scaled_long = [&](int side) {
        return side == shorter ? size : static_cast<int>(static_cast<long long>(size) * side / shorter);
    };
    const int new_w = std::max(size, scaled_long(image.width));
    const int new_h = std::max(size, scaled_long(image.height));

    cv::Mat resized;
    if (new_w == image.width && new_h == image.height) resized = src;
    else cv::resize(src, resized, cv::Size(new_w, new_h), 0, 0, cv::INTER_CUBIC);

    const int top = static_cast<int>(std::nearbyint((new_h - size) / 2.0));
    const int left = static_cast<int>(std::nearbyint((new_w - size) / 2.0));
    cv::Mat crop = resized(cv::Rect(left, top, size, size));

    ImageTensor out;
    out.size = size;
    out.data.resize(static_cast<std::size_t>(3) * size * size);
    for (int y = 0; y < size; ++y) {
        const float* row = crop.ptr<float>(y);
        for (int x = 0; x < size; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(row[x * 3 + c], 0.0f, 1.0f);
                out.data[(static_cast<std::size_t>(c) * size + y) * size + x] = (v - norm.mean[c]) / norm.std[c];
            }
        }
    }
    return out;
}

} // namespace guesswho
