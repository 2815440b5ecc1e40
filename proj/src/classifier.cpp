#include "guesswho/classifier.hpp"

#include "guesswho/error.hpp"

#include <algorithm>
#include <cmath>

namespace guesswho {

double Embedding::norm() const noexcept {
    double sum = 0.0;
    for (float v : values) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

bool Embedding::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

double dot(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw Error(ErrorKind::Backend, "embedding dimension mismatch",
                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) sum += static_cast<double>(a.values[i]) * b.values[i];
    return sum;
}

Embedding normalized(Embedding e) {
    const double n = e.norm();
    if (n == 0.0) return e;
    for (float& v : e.values) v = static_cast<float>(v / n);
    return e;
}

std::string_view to_string(Decision decision) noexcept {
    return decision == Decision::Positive ? "positive" : "negative";
}

std::pair<double, double> softmax2(ScorePair scores, double logit_scale) {
    // Logistic form of the two-way softmax; stable for large scaled gaps.
    const double p_target = 1.0 / (1.0 + std::exp(logit_scale * (scores.counter - scores.target)));
    return {p_target, 1.0 - p_target};
}

BinaryPrediction decide(ScorePair scores, double logit_scale) {
    BinaryPrediction out;
    out.score_target = scores.target;
    out.score_counter = scores.counter;
    out.decision = scores.target > scores.counter ? Decision::Positive : Decision::Negative;
    const auto [p_target, p_counter] = softmax2(scores, logit_scale);
    out.confidence = out.positive() ? p_target : p_counter;
    return out;
}

std::vector<ImageEmbedding> EncoderBackend::embed_images(std::span<const std::string> image_refs) {
    std::vector<ImageEmbedding> out;
    out.reserve(image_refs.size());
    for (const auto& ref : image_refs) {
        ImageEmbedding item;
        try {
            item.embedding = embed_image(ref);
        } catch (const std::exception& e) {
            item.error = e.what();
        }
        out.push_back(std::move(item));
    }
    return out;
}

ScorePair score_pair(EncoderBackend& backend, const std::string& image_ref, const PromptPair& pair) {
    const Embedding image = backend.embed_image(image_ref);
    return {dot(image, backend.embed_text(pair.target_text)),
            dot(image, backend.embed_text(pair.counter_text))};
}

BinaryPrediction predict(EncoderBackend& backend, const std::string& image_ref, const PromptPair& pair) {
    return decide(score_pair(backend, image_ref, pair), backend.logit_scale());
}

std::vector<BatchPrediction> predict_batch(EncoderBackend& backend,
                                           std::span<const std::string> image_refs,
                                           const PromptPair& pair,
                                           std::size_t chunk_size) {
    if (image_refs.empty()) throw Error(ErrorKind::Validation, "predict_batch needs at least one image");
    chunk_size = std::max<std::size_t>(chunk_size, 1);
    const Embedding target = backend.embed_text(pair.target_text);
    const Embedding counter = backend.embed_text(pair.counter_text);
    const double scale = backend.logit_scale();

    std::vector<BatchPrediction> out;
    out.reserve(image_refs.size());
    for (std::size_t start = 0; start < image_refs.size(); start += chunk_size) {
        const auto chunk = image_refs.subspan(start, std::min(chunk_size, image_refs.size() - start));
        auto embedded = backend.embed_images(chunk);
        if (embedded.size() != chunk.size())
            throw Error(ErrorKind::Backend, "backend returned a wrong number of image embeddings");
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            BatchPrediction item;
            if (!embedded[i].ok()) {
                item.error = embedded[i].error.empty() ? "embedding failed" : embedded[i].error;
            } else {
                try {
                    const auto& image = *embedded[i].embedding;
                    item.prediction = decide({dot(image, target), dot(image, counter)}, scale);
                } catch (const std::exception& e) {
                    item.error = e.what();
                }
            }
            out.push_back(std::move(item));
        }
    }
    return out;
}

SerializedBackend::SerializedBackend(std::shared_ptr<EncoderBackend> inner) : inner_(std::move(inner)) {}

std::string SerializedBackend::name() const { return inner_->name(); }
std::size_t SerializedBackend::embedding_dim() const { return inner_->embedding_dim(); }
double SerializedBackend::logit_scale() const { return inner_->logit_scale(); }

Embedding SerializedBackend::embed_text(const std::string& text) {
    std::lock_guard lock(mutex_);
    return inner_->embed_text(text);
}

Embedding SerializedBackend::embed_image(const std::string& image_ref) {
    std::lock_guard lock(mutex_);
    return inner_->embed_image(image_ref);
}

std::vector<ImageEmbedding> SerializedBackend::embed_images(std::span<const std::string> image_refs) {
    std::lock_guard lock(mutex_);
    return inner_->embed_images(image_refs);
}

CachingBackend::CachingBackend(std::shared_ptr<EncoderBackend> inner) : inner_(std::move(inner)) {}

std::string CachingBackend::name() const { return inner_->name(); }
std::size_t CachingBackend::embedding_dim() const { return inner_->embedding_dim(); }
double CachingBackend::logit_scale() const { return inner_->logit_scale(); }
bool CachingBackend::serialize_required() const { return inner_->serialize_required(); }

Embedding CachingBackend::embed_text(const std::string& text) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = text_cache_.find(text); it != text_cache_.end()) return it->second;
    }
    Embedding e = inner_->embed_text(text);
    std::lock_guard lock(mutex_);
    return text_cache_.emplace(text, std::move(e)).first->second;
}

Embedding CachingBackend::embed_image(const std::string& image_ref) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = image_cache_.find(image_ref); it != image_cache_.end()) return it->second;
    }
    Embedding e = inner_->embed_image(image_ref);
    std::lock_guard lock(mutex_);
    return image_cache_.emplace(image_ref, std::move(e)).first->second;
}

std::vector<ImageEmbedding> CachingBackend::embed_images(std::span<const std::string> image_refs) {
    std::vector<ImageEmbedding> out(image_refs.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_index;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < image_refs.size(); ++i) {
            if (auto it = image_cache_.find(image_refs[i]); it != image_cache_.end()) {
                out[i].embedding = it->second;
            } else {
                missing.push_back(image_refs[i]);
                missing_index.push_back(i);
            }
        }
    }
    if (missing.empty()) return out;
    auto fresh = inner_->embed_images(missing);
    if (fresh.size() != missing.size())
        throw Error(ErrorKind::Backend, "backend returned a wrong number of image embeddings");
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < missing.size(); ++k) {
        if (fresh[k].ok()) image_cache_.emplace(missing[k], *fresh[k].embedding);
        out[missing_index[k]] = std::move(fresh[k]);
    }
    return out;
}

std::size_t CachingBackend::cached_images() const {
    std::lock_guard lock(mutex_);
    return image_cache_.size();
}

std::shared_ptr<EncoderBackend> make_shareable(std::shared_ptr<EncoderBackend> backend) {
    if (backend && backend->serialize_required())
        return std::make_shared<SerializedBackend>(std::move(backend));
    return backend;
}

} // namespace guesswho
