#include "guesswho/clip_tokenizer.hpp"

#include "guesswho/csv.hpp"
#include "guesswho/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>

namespace guesswho {

namespace {

constexpr std::string_view kStartToken = "<|startoftext|>";
constexpr std::string_view kEndToken = "<|endoftext|>";
constexpr std::string_view kWordEnd = "</w>";

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// GPT-2 reversible byte -> printable unicode mapping.
const std::array<std::string, 256>& byte_encoder() {
    static const std::array<std::string, 256> table = [] {
        std::array<char32_t, 256> cps{};
        std::array<bool, 256> direct{};
        auto mark = [&](int lo, int hi) {
            for (int b = lo; b <= hi; ++b) {
                direct[b] = true;
                cps[b] = static_cast<char32_t>(b);
            }
        };
        mark('!', '~');
        mark(0xA1, 0xAC);
        mark(0xAE, 0xFF);
        char32_t next = 256;
        for (int b = 0; b < 256; ++b)
            if (!direct[b]) cps[b] = next++;
        std::array<std::string, 256> out;
        for (int b = 0; b < 256; ++b) append_utf8(out[b], cps[b]);
        return out;
    }();
    return table;
}

// Decodes one UTF-8 code point at `pos`, advancing it. Invalid bytes decode
// as themselves.
char32_t next_codepoint(std::string_view s, std::size_t& pos) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 1;
    if (pos + len > s.size()) len = 1;
    char32_t cp = len == 1 ? lead : len == 2 ? (lead & 0x1F) : len == 3 ? (lead & 0x0F) : (lead & 0x07);
    for (std::size_t i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[pos + i]) & 0x3F);
    pos += len;
    return cp;
}

enum class CharClass { Space, Letter, Digit, Other };

// ASCII is classified exactly; other code points are treated as letters
// except common punctuation/space blocks.
CharClass classify(char32_t cp) {
    if (cp < 0x80) {
        if (cp == ' ' || (cp >= '\t' && cp <= '\r')) return CharClass::Space;
        if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return CharClass::Letter;
        if (cp >= '0' && cp <= '9') return CharClass::Digit;
        return CharClass::Other;
    }
    if (cp == 0xA0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029)
        return CharClass::Space;
    if ((cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 || (cp >= 0x2010 && cp <= 0x206F))
        return CharClass::Other;
    return CharClass::Letter;
}

std::string clean(std::string_view text) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = next_codepoint(text, pos);
        if (classify(cp) == CharClass::Space) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        if (cp < 0x80) out.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
        else out.append(text.substr(start, pos - start));
    }
    return out;
}

} // namespace

ClipTokenizer::ClipTokenizer(std::unordered_map<std::string, std::int64_t> vocab,
                             std::vector<std::pair<std::string, std::string>> merges)
    : vocab_(std::move(vocab)) {
    for (std::size_t i = 0; i < merges.size(); ++i) {
        std::string key = merges[i].first;
        key.push_back(' ');
        key += merges[i].second;
        merge_ranks_.emplace(std::move(key), i);
    }
    auto special = [&](std::string_view token) {
        auto it = vocab_.find(std::string(token));
        if (it == vocab_.end())
            throw Error(ErrorKind::Format, "tokenizer vocabulary lacks " + std::string(token));
        return it->second;
    };
    start_id_ = special(kStartToken);
    end_id_ = special(kEndToken);
}

ClipTokenizer ClipTokenizer::load(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt) {
    std::ifstream vin(vocab_json, std::ios::binary);
    if (!vin) throw Error(ErrorKind::Format, "cannot open tokenizer vocabulary", vocab_json.string());
    std::unordered_map<std::string, std::int64_t> vocab;
    try {
        const auto doc = nlohmann::json::parse(vin);
        for (const auto& [token, id] : doc.items()) vocab.emplace(token, id.get<std::int64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("malformed tokenizer vocabulary: ") + e.what(), vocab_json.string());
    }

    std::ifstream min(merges_txt, std::ios::binary);
    if (!min) throw Error(ErrorKind::Format, "cannot open tokenizer merges", merges_txt.string());
    std::vector<std::pair<std::string, std::string>> merges;
    std::string line;
    bool first = true;
    while (std::getline(min, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first && line.find("#version") != std::string::npos) {
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos)
            throw Error(ErrorKind::Format, "malformed merge rule '" + line + "'", merges_txt.string());
        merges.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
    return ClipTokenizer(std::move(vocab), std::move(merges));
}

std::vector<std::string> ClipTokenizer::split_words(std::string_view raw) {
    static constexpr std::array<std::string_view, 7> kContractions = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
    const std::string text = clean(raw);
    std::vector<std::string> words;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::string_view rest = std::string_view(text).substr(pos);
        if (rest.starts_with(kStartToken) || rest.starts_with(kEndToken)) {
            const auto len = rest.starts_with(kStartToken) ? kStartToken.size() : kEndToken.size();
            words.emplace_back(rest.substr(0, len));
            pos += len;
            continue;
        }
        if (auto it = std::find_if(kContractions.begin(), kContractions.end(),
                                   [&](auto c) { return rest.starts_with(c); });
            it != kContractions.end()) {
            words.emplace_back(*it);
            pos += it->size();
            continue;
        }
        std::size_t probe = pos;
        const CharClass cls = classify(next_codepoint(text, probe));
        if (cls == CharClass::Space) {
            pos = probe;
            continue;
        }
        if (cls == CharClass::Digit) {
            words.emplace_back(text.substr(pos, probe - pos));
            pos = probe;
            continue;
        }
        // Letters run together; anything else runs until a space, letter or digit.
        std::size_t end = probe;
        while (end < text.size()) {
            std::size_t next = end;
            const CharClass c = classify(next_codepoint(text, next));
            if (cls == CharClass::Letter ? c != CharClass::Letter : c != CharClass::Other) break;
            end = next;
        }
        words.push_back(text.substr(pos, end - pos));
        pos = end;
    }
    return words;
}

std::vector<std::string> ClipTokenizer::bpe(const std::string& token) const {
    if (token == kStartToken || token == kEndToken) return {token};

    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < token.size()) {
        const std::size_t start = pos;
        next_codepoint(token, pos);
        parts.push_back(token.substr(start, pos - start));
    }
    parts.back() += kWordEnd;

    while (parts.size() > 1) {
        std::size_t best_rank = std::numeric_limits<std::size_t>::max();
        std::string best_key;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            std::string key = parts[i] + " " + parts[i + 1];
            auto it = merge_ranks_.find(key);
            if (it != merge_ranks_.end() && it->second < best_rank) {
                best_rank = it->second;
                best_key = std::move(key);
            }
        }
        if (best_key.empty()) break;
        const auto space = best_key.find(' ');
        const std::string left = best_key.substr(0, space);
        const std::string right = best_key.substr(space + 1);
        std::vector<std::string> merged;
        for (std::size_t i = 0; i < parts.size();) {
            if (i + 1 < parts.size() && parts[i] == left && parts[i + 1] == right) {
                merged.push_back(left + right);
                i += 2;
            } else {
                merged.push_back(parts[i]);
                ++i;
            }
        }
        parts = std::move(merged);
    }
    return parts;
}

std::vector<std::int64_t> ClipTokenizer::encode(std::string_view text) const {
    const auto& encoder = byte_encoder();
    std::vector<std::int64_t> ids;
    for (const auto& word : split_words(text)) {
        std::string mapped;
        if (word == kStartToken || word == kEndToken) {
            mapped = word;
        } else {
            for (unsigned char b : word) mapped += encoder[b];
        }
        for (const auto& piece : bpe(mapped)) {
            auto it = vocab_.find(piece);
            if (it == vocab_.end()) throw Error(ErrorKind::Format, "token '" + piece + "' missing from vocabulary");
            ids.push_back(it->second);
        }
    }
    return ids;
}

TokenizedText ClipTokenizer::tokenize(std::string_view text, std::size_t context_length) const {
    if (context_length < 2) throw Error(ErrorKind::Validation, "context length must be at least 2");
    TokenizedText out;
    std::vector<std::int64_t> body = encode(text);
    if (body.size() + 2 > context_length) {
        body.resize(context_length - 2);
        out.truncated = true;
    }
    out.ids.reserve(context_length);
    out.ids.push_back(start_id_);
    out.ids.insert(out.ids.end(), body.begin(), body.end());
    out.ids.push_back(end_id_);
    out.attention_mask.assign(out.ids.size(), 1);
    out.ids.resize(context_length, 0);
    out.attention_mask.resize(context_length, 0);
    return out;
}

} // namespace guesswho
