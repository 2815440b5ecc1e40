#pragma once

#include "guesswho/prompts.hpp"

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace guesswho {

/// Fixed-dimension vector produced by an encoder backend.
struct Embedding {
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const noexcept;
    bool is_zero() const noexcept;

    friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Dot product accumulated in double. Throws Backend on dimension mismatch.
double dot(const Embedding& a, const Embedding& b);

/// Scales to unit L2 norm; the zero vector is returned unchanged.
Embedding normalized(Embedding e);

enum class Decision { Positive, Negative };

std::string_view to_string(Decision decision) noexcept;

struct ScorePair {
    double target = 0.0;
    double counter = 0.0;
};

struct BinaryPrediction {
    Decision decision = Decision::Negative;
    double score_target = 0.0;
    double score_counter = 0.0;
    /// Softmax probability of the decided side, always >= 0.5.
    double confidence = 0.5;

    bool positive() const noexcept { return decision == Decision::Positive; }

    friend bool operator==(const BinaryPrediction&, const BinaryPrediction&) = default;
};

/// Positive iff target strictly beats counter; ties go to the counter side.
/// `logit_scale` only shapes the reported confidence.
BinaryPrediction decide(ScorePair scores, double logit_scale);

/// Softmax of the two scaled scores: {p_target, p_counter}.
std::pair<double, double> softmax2(ScorePair scores, double logit_scale);

/// Result of embedding one image inside a batch; failures stay per-item.
struct ImageEmbedding {
    std::optional<Embedding> embedding;
    std::string error;

    bool ok() const noexcept { return embedding.has_value(); }
};

/// Dual encoder mapping images and captions into one embedding space.
/// Implementations must be deterministic per text and per image bytes.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t embedding_dim() const = 0;
    virtual double logit_scale() const = 0;

    /// When true, callers must not score concurrently (see SerializedBackend).
    virtual bool serialize_required() const { return false; }

    virtual Embedding embed_text(const std::string& text) = 0;

    /// Throws Decode for unreadable images.
    virtual Embedding embed_image(const std::string& image_ref) = 0;

    /// Default implementation loops over embed_image, capturing errors.
    virtual std::vector<ImageEmbedding> embed_images(std::span<const std::string> image_refs);
};

ScorePair score_pair(EncoderBackend& backend, const std::string& image_ref, const PromptPair& pair);

BinaryPrediction predict(EncoderBackend& backend, const std::string& image_ref, const PromptPair& pair);

struct BatchPrediction {
    std::optional<BinaryPrediction> prediction;
    std::string error;

    bool ok() const noexcept { return prediction.has_value(); }
};

/// Embeds both captions once, then images in chunks of `chunk_size`.
/// Output order follows `image_refs`; a failing image does not abort the rest.
std::vector<BatchPrediction> predict_batch(EncoderBackend& backend,
                                           std::span<const std::string> image_refs,
                                           const PromptPair& pair,
                                           std::size_t chunk_size = 32);

/// Wraps a backend behind a mutex.
class SerializedBackend final : public EncoderBackend {
public:
    explicit SerializedBackend(std::shared_ptr<EncoderBackend> inner);

    std::string name() const override;
    std::size_t embedding_dim() const override;
    double logit_scale() const override;
    bool serialize_required() const override { return false; }
    Embedding embed_text(const std::string& text) override;
    Embedding embed_image(const std::string& image_ref) override;
    std::vector<ImageEmbedding> embed_images(std::span<const std::string> image_refs) override;

private:
    std::shared_ptr<EncoderBackend> inner_;
    mutable std::mutex mutex_;
};

/// Memoizes text and image embeddings. Safe for concurrent use when the
/// wrapped backend is.
class CachingBackend final : public EncoderBackend {
public:
    explicit CachingBackend(std::shared_ptr<EncoderBackend> inner);

    std::string name() const override;
    std::size_t embedding_dim() const override;
    double logit_scale() const override;
    bool serialize_required() const override;
    Embedding embed_text(const std::string& text) override;
    Embedding embed_image(const std::string& image_ref) override;
    std::vector<ImageEmbedding> embed_images(std::span<const std::string> image_refs) override;

    std::size_t cached_images() const;

private:
    std::shared_ptr<EncoderBackend> inner_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Embedding> text_cache_;
    std::unordered_map<std::string, Embedding> image_cache_;
};

/// Wraps `backend` in a SerializedBackend when it declares itself
/// serialize-required; otherwise returns it unchanged.
std::shared_ptr<EncoderBackend> make_shareable(std::shared_ptr<EncoderBackend> backend);

} // namespace guesswho
