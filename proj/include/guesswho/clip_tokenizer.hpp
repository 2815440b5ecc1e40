#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace guesswho {

struct TokenizedText {
    std::vector<std::int64_t> ids;            ///< padded to the context length
    std::vector<std::int64_t> attention_mask; ///< 1 for real tokens, 0 for padding
    bool truncated = false;
};

/// Byte-level BPE tokenizer compatible with the CLIP text encoder.
///
/// Text is whitespace-collapsed and lowercased, split into words, numbers and
/// punctuation runs, mapped through the GPT-2 byte-to-unicode table and merged
/// with the ranked merge list. Every word ends with the `</w>` marker.
class ClipTokenizer {
public:
    static constexpr std::size_t kContextLength = 77;

    ClipTokenizer(std::unordered_map<std::string, std::int64_t> vocab,
                  std::vector<std::pair<std::string, std::string>> merges);

    /// `vocab.json` (token -> id) and `merges.txt` as shipped with CLIP
    /// checkpoints. A leading `#version` line in the merges file is skipped.
    static ClipTokenizer load(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt);

    /// Token ids without start/end markers.
    std::vector<std::int64_t> encode(std::string_view text) const;

    /// Start marker, ids, end marker, zero padding. Over-long input is cut so
    /// that the end marker is always the last real token.
    TokenizedText tokenize(std::string_view text, std::size_t context_length = kContextLength) const;

    /// Pre-tokenizer output, exposed for tests.
    static std::vector<std::string> split_words(std::string_view text);

    std::int64_t start_id() const noexcept { return start_id_; }
    std::int64_t end_id() const noexcept { return end_id_; }
    std::size_t vocab_size() const noexcept { return vocab_.size(); }

private:
    std::vector<std::string> bpe(const std::string& word) const;

    std::unordered_map<std::string, std::int64_t> vocab_;
    std::unordered_map<std::string, std::size_t> merge_ranks_;
    std::int64_t start_id_ = 0;
    std::int64_t end_id_ = 0;
};

} // namespace guesswho
