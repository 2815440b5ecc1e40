#pragma once

#include "guesswho/classifier.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace guesswho {

struct AttributeTable;

using AttributeBits = std::array<std::int8_t, 40>;

/// Where a caption points in the fixture embedding space.
struct PromptIndex {
    std::size_t bit = 0; ///< 0-based attribute index
    int polarity = 1;    ///< +1 or -1
};

/// Deterministic stand-in encoder over 41 dimensions.
///
/// An image embeds as its +-1 attribute bits divided by sqrt(40), padded
/// with a trailing zero. A mapped caption embeds as `polarity * e_bit`, the
/// neutral caption as the zero vector. Predicting a neutral pair for bit i
/// therefore reproduces the sign of the image's bit i.
///
/// Images are resolved by exact reference, then by file name, then by stem.
/// Unknown images raise Decode; unmapped captions raise Backend.
class FixtureBackend final : public EncoderBackend {
public:
    static constexpr std::size_t kBits = 40;
    static constexpr std::size_t kDim = 41;

    FixtureBackend(std::map<std::string, AttributeBits> images,
                   std::map<std::string, PromptIndex> prompts,
                   double logit_scale = 100.0);

    /// Images from a CSV with header `image_id,bit1,...,bit40`; prompts from
    /// a CSV with header `prompt,bit,polarity` (bit is 1-based).
    static FixtureBackend load(const std::filesystem::path& images_csv,
                               const std::filesystem::path& prompts_csv);

    static std::map<std::string, AttributeBits> parse_images(std::istream& in);
    static std::map<std::string, PromptIndex> parse_prompts(std::istream& in);

    /// Every neutral target maps to +e_i and every contrary counter to
    /// -e_i, where i is the attribute's position in the CelebA header.
    static std::map<std::string, PromptIndex> prompts_from_catalog(const Catalog& catalog);

    /// Images keyed by annotation file name.
    static std::map<std::string, AttributeBits> images_from_table(const AttributeTable& table);

    static std::string emit_images(const std::map<std::string, AttributeBits>& images);
    static std::string emit_prompts(const std::map<std::string, PromptIndex>& prompts);

    std::string name() const override { return "fixture"; }
    std::size_t embedding_dim() const override { return kDim; }
    double logit_scale() const override { return logit_scale_; }

    Embedding embed_text(const std::string& text) override;
    Embedding embed_image(const std::string& image_ref) override;

    const AttributeBits& bits_for(const std::string& image_ref) const;
    std::size_t image_count() const noexcept { return images_.size(); }

private:
    std::map<std::string, AttributeBits> images_;
    std::map<std::string, PromptIndex> prompts_;
    double logit_scale_;
};

} // namespace guesswho
