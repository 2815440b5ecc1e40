#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace guesswho {

/// Generic caption every one-prompt question is confronted with.
inline constexpr std::string_view kNeutralPrompt = "A picture of a person";

enum class PromptMethod { Neutral, Contrary };

enum class Provenance { CuratedNeutral, CuratedContrary, Template };

std::string_view to_string(PromptMethod method) noexcept;
std::string_view to_string(Provenance provenance) noexcept;
PromptMethod parse_prompt_method(std::string_view text);
Provenance parse_provenance(std::string_view text);

/// Two captions confronted against one image; the higher-scoring one wins.
struct PromptPair {
    std::string target_text;
    std::string counter_text;
    PromptMethod method = PromptMethod::Neutral;

    friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

/// Target text against the neutral caption. Throws Validation on blank text.
PromptPair neutral_pair(std::string_view user_text);

/// Two captions of opposite meaning. Throws Validation when either is blank
/// or both are the same after trimming.
PromptPair contrary_pair(std::string_view text_a, std::string_view text_b);

/// "Wearing_Hat", "wearing hat" and " WEARING  hat " all map to "wearing hat".
std::string normalize_attribute(std::string_view name);

/// "A picture of a person with {label}" for labels without a curated prompt.
std::string template_prompt(std::string_view label);

/// True when the label contains the word "no" (e.g. "no beard").
bool has_negation(std::string_view attribute);

/// The 40 CelebA annotation labels, in annotation-file order.
const std::array<std::string_view, 40>& celeba_attributes();

struct CatalogEntry {
    std::string attribute; ///< normalized label, e.g. "wearing hat"
    std::string target_text;
    std::string counter_text;
    PromptMethod method = PromptMethod::Neutral;
    Provenance provenance = Provenance::Template;

    PromptPair pair() const { return {target_text, counter_text, method}; }
    bool negation_warning() const { return has_negation(attribute); }

    friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

/// Attribute-to-prompt catalog. Holds one row per (attribute, method): every
/// CelebA label has exactly one neutral row and may additionally carry a
/// contrary row. Immutable once constructed.
class Catalog {
public:
    static constexpr std::size_t kAttributeCount = 40;

    /// Validates the rows; throws Format on duplicates, unknown labels,
    /// missing neutral rows or a label count other than 40.
    explicit Catalog(std::vector<CatalogEntry> entries);

    /// Curated prompts plus template rows for the remaining labels.
    static Catalog defaults();

    static Catalog parse(std::istream& in);
    static Catalog load(const std::filesystem::path& path);

    /// CSV with header `attribute,target,counter,method,provenance`.
    std::string emit() const;
    void save(const std::filesystem::path& path) const;

    /// Contrary rows take precedence over neutral rows. Throws CatalogMiss
    /// with the closest known names in the detail.
    PromptPair lookup(std::string_view name) const;
    const CatalogEntry& lookup_entry(std::string_view name) const;

    std::optional<PromptPair> pair_for(std::string_view name, PromptMethod method) const;

    bool contains(std::string_view name) const;

    /// One name per label, in first-appearance order.
    std::vector<std::string> list_attributes() const;

    std::span<const CatalogEntry> entries() const { return entries_; }

    /// Up to `limit` known names ranked by edit distance to `name`.
    std::vector<std::string> nearest(std::string_view name, std::size_t limit = 3) const;

    friend bool operator==(const Catalog& a, const Catalog& b) { return a.entries_ == b.entries_; }

private:
    const CatalogEntry* find(std::string_view normalized, PromptMethod method) const;

    std::vector<CatalogEntry> entries_;
};

} // namespace guesswho
