#include "guesswho/fixture_backend.hpp"

#include "guesswho/benchmark.hpp"
#include "guesswho/csv.hpp"
#include "guesswho/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace guesswho {

namespace {

int parse_sign(const std::string& field, std::size_t line) {
    const std::string v = text::trim(field);
    if (v == "1" || v == "+1") return 1;
    if (v == "-1") return -1;
    throw Error(ErrorKind::Format, "fixture value must be 1 or -1, got '" + v + "'",
                "line " + std::to_string(line));
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Format, "cannot open fixture file", path.string());
    return in;
}

} // namespace

FixtureBackend::FixtureBackend(std::map<std::string, AttributeBits> images,
                               std::map<std::string, PromptIndex> prompts,
                               double logit_scale)
    : images_(std::move(images)), prompts_(std::move(prompts)), logit_scale_(logit_scale) {
    for (const auto& [text, index] : prompts_) {
        if (index.bit >= kBits || (index.polarity != 1 && index.polarity != -1))
            throw Error(ErrorKind::Format, "invalid prompt index for '" + text + "'");
    }
    if (!(logit_scale_ > 0.0)) throw Error(ErrorKind::Validation, "logit scale must be positive");
}

FixtureBackend FixtureBackend::load(const std::filesystem::path& images_csv,
                                    const std::filesystem::path& prompts_csv) {
    auto images_in = open(images_csv);
    auto prompts_in = open(prompts_csv);
    return FixtureBackend(parse_images(images_in), parse_prompts(prompts_in));
}

std::map<std::string, AttributeBits> FixtureBackend::parse_images(std::istream& in) {
    csv::Row row;
    std::size_t line = 1;
    if (!csv::read_row(in, row, line) || row.size() != kBits + 1 || text::trim(row[0]) != "image_id")
        throw Error(ErrorKind::Format, "fixture image header must be image_id,bit1..bit40", "line 1");
    for (std::size_t i = 1; i <= kBits; ++i)
        if (text::trim(row[i]) != "bit" + std::to_string(i))
            throw Error(ErrorKind::Format, "fixture image header must be image_id,bit1..bit40", "line 1");

    std::map<std::string, AttributeBits> images;
    std::size_t row_line = line;
    while (csv::read_row(in, row, line)) {
        if (row.size() == 1 && text::trim(row[0]).empty()) {
            row_line = line;
            continue;
        }
        if (row.size() != kBits + 1)
            throw Error(ErrorKind::Format, "fixture image row must have 41 fields",
                        "line " + std::to_string(row_line));
        AttributeBits bits{};
        for (std::size_t i = 0; i < kBits; ++i) bits[i] = static_cast<std::int8_t>(parse_sign(row[i + 1], row_line));
        if (!images.emplace(text::trim(row[0]), bits).second)
            throw Error(ErrorKind::Format, "duplicate fixture image '" + row[0] + "'",
                        "line " + std::to_string(row_line));
        row_line = line;
    }
    return images;
}

std::map<std::string, PromptIndex> FixtureBackend::parse_prompts(std::istream& in) {
    csv::Row row;
    std::size_t line = 1;
    if (!csv::read_row(in, row, line) || row.size() != 3 || text::trim(row[0]) != "prompt" ||
        text::trim(row[1]) != "bit" || text::trim(row[2]) != "polarity")
        throw Error(ErrorKind::Format, "fixture prompt header must be prompt,bit,polarity", "line 1");

    std::map<std::string, PromptIndex> prompts;
    std::size_t row_line = line;
    while (csv::read_row(in, row, line)) {
        if (row.size() == 1 && text::trim(row[0]).empty()) {
            row_line = line;
            continue;
        }
        if (row.size() != 3)
            throw Error(ErrorKind::Format, "fixture prompt row must have 3 fields",
                        "line " + std::to_string(row_line));
        std::size_t bit = 0;
        try {
            bit = std::stoul(text::trim(row[1]));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Format, "fixture prompt bit is not a number", "line " + std::to_string(row_line));
        }
        if (bit < 1 || bit > kBits)
            throw Error(ErrorKind::Format, "fixture prompt bit out of range", "line " + std::to_string(row_line));
        prompts[row[0]] = {bit - 1, parse_sign(row[2], row_line)};
        row_line = line;
    }
    return prompts;
}

std::map<std::string, PromptIndex> FixtureBackend::prompts_from_catalog(const Catalog& catalog) {
    const auto& labels = celeba_attributes();
    auto bit_of = [&](const std::string& attribute) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (normalize_attribute(labels[i]) == attribute) return i;
        throw Error(ErrorKind::CatalogMiss, "attribute '" + attribute + "' is not a CelebA label");
    };
    std::map<std::string, PromptIndex> prompts;
    // A caption that is both a target and a counter keeps its target meaning.
    for (const auto& e : catalog.entries()) prompts.emplace(e.target_text, PromptIndex{bit_of(e.attribute), 1});
    for (const auto& e : catalog.entries())
        if (e.method == PromptMethod::Contrary)
            prompts.emplace(e.counter_text, PromptIndex{bit_of(e.attribute), -1});
    return prompts;
}

std::map<std::string, AttributeBits> FixtureBackend::images_from_table(const AttributeTable& table) {
    std::map<std::string, AttributeBits> images;
    for (std::size_t r = 0; r < table.filenames.size(); ++r) images.emplace(table.filenames[r], table.rows[r]);
    return images;
}

std::string FixtureBackend::emit_images(const std::map<std::string, AttributeBits>& images) {
    csv::Row header{"image_id"};
    for (std::size_t i = 1; i <= kBits; ++i) header.push_back("bit" + std::to_string(i));
    std::string out = csv::format_row(header);
    for (const auto& [id, bits] : images) {
        csv::Row row{id};
        for (auto b : bits) row.push_back(std::to_string(b));
        out += csv::format_row(row);
    }
    return out;
}

std::string FixtureBackend::emit_prompts(const std::map<std::string, PromptIndex>& prompts) {
    std::string out = csv::format_row({"prompt", "bit", "polarity"});
    for (const auto& [text, index] : prompts)
        out += csv::format_row({text, std::to_string(index.bit + 1), std::to_string(index.polarity)});
    return out;
}

Embedding FixtureBackend::embed_text(const std::string& text) {
    Embedding e{std::vector<float>(kDim, 0.0f)};
    if (text == kNeutralPrompt) return e;
    auto it = prompts_.find(text);
    if (it == prompts_.end()) throw Error(ErrorKind::Backend, "fixture backend has no embedding for prompt", text);
    e.values[it->second.bit] = static_cast<float>(it->second.polarity);
    return e;
}

const AttributeBits& FixtureBackend::bits_for(const std::string& image_ref) const {
    if (auto it = images_.find(image_ref); it != images_.end()) return it->second;
    const std::filesystem::path path(image_ref);
    if (auto it = images_.find(path.filename().string()); it != images_.end()) return it->second;
    if (auto it = images_.find(path.stem().string()); it != images_.end()) return it->second;
    throw Error(ErrorKind::Decode, "fixture backend does not know image", image_ref);
}

Embedding FixtureBackend::embed_image(const std::string& image_ref) {
    const auto& bits = bits_for(image_ref);
    const double inv = 1.0 / std::sqrt(static_cast<double>(kBits));
    Embedding e{std::vector<float>(kDim, 0.0f)};
    for (std::size_t i = 0; i < kBits; ++i) e.values[i] = static_cast<float>(bits[i] * inv);
    return e;
}

} // namespace guesswho
