#pragma once

#include "guesswho/classifier.hpp"
#include "guesswho/image.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace guesswho {

/// Files and knobs for the pretrained dual encoder.
struct OnnxModelConfig {
    std::filesystem::path image_model; ///< pixel tensor [N,3,224,224] -> [N,D]
    std::filesystem::path text_model;  ///< token ids [N,77] (+ optional mask) -> [N,D]
    std::filesystem::path vocab;       ///< vocab.json
    std::filesystem::path merges;      ///< merges.txt
    /// Shared library exporting OrtGetApiBase. Empty: $GUESSWHO_ONNXRUNTIME_LIB,
    /// then the path found at build time, then "libonnxruntime.so".
    std::filesystem::path runtime_library;
    std::string image_output; ///< output name; empty selects the first output
    std::string text_output;
    double logit_scale = 100.0;
    int intra_op_threads = 0;
    std::size_t image_size = 224;
    Normalization normalization = Normalization::clip();

    /// Conventional layout: image_encoder.onnx, text_encoder.onnx, vocab.json
    /// and merges.txt inside `dir`.
    static OnnxModelConfig from_directory(const std::filesystem::path& dir);
};

/// Receives non-fatal warnings such as prompt truncation.
using WarningSink = std::function<void(const std::string&)>;

/// CLIP-style dual encoder executed with ONNX Runtime, loaded at run time.
/// Outputs are L2-normalized. Scoring calls may run concurrently.
class OnnxClipBackend final : public EncoderBackend {
public:
    /// Throws Backend when the runtime or either model cannot be loaded.
    explicit OnnxClipBackend(OnnxModelConfig config, WarningSink warn = {});
    ~OnnxClipBackend() override;

    OnnxClipBackend(const OnnxClipBackend&) = delete;
    OnnxClipBackend& operator=(const OnnxClipBackend&) = delete;

    std::string name() const override;
    std::size_t embedding_dim() const override;
    double logit_scale() const override;

    Embedding embed_text(const std::string& text) override;
    Embedding embed_image(const std::string& image_ref) override;
    std::vector<ImageEmbedding> embed_images(std::span<const std::string> image_refs) override;

    /// Runs the image encoder on an already preprocessed tensor.
    Embedding embed_tensor(const ImageTensor& tensor);

    /// Version string reported by the loaded runtime.
    std::string runtime_version() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Build-time guess for the runtime library location (may be empty).
std::filesystem::path default_onnxruntime_library();

} // namespace guesswho
