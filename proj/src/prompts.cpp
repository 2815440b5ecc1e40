#include "guesswho/prompts.hpp"

#include "guesswho/csv.hpp"
#include "guesswho/error.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace guesswho {

namespace {

constexpr std::array<std::string_view, 40> kCelebaAttributes = {
    "5_o_Clock_Shadow", "Arched_Eyebrows",  "Attractive",         "Bags_Under_Eyes",
    "Bald",             "Bangs",            "Big_Lips",           "Big_Nose",
    "Black_Hair",       "Blond_Hair",       "Blurry",             "Brown_Hair",
    "Bushy_Eyebrows",   "Chubby",           "Double_Chin",        "Eyeglasses",
    "Goatee",           "Gray_Hair",        "Heavy_Makeup",       "High_Cheekbones",
    "Male",             "Mouth_Slightly_Open", "Mustache",        "Narrow_Eyes",
    "No_Beard",         "Oval_Face",        "Pale_Skin",          "Pointy_Nose",
    "Receding_Hairline", "Rosy_Cheeks",     "Sideburns",          "Smiling",
    "Straight_Hair",    "Wavy_Hair",        "Wearing_Earrings",   "Wearing_Hat",
    "Wearing_Lipstick", "Wearing_Necklace", "Wearing_Necktie",    "Young",
};

struct CuratedPrompt {
    std::string_view attribute;
    std::string_view target;
    std::string_view counter;
};

// Curated target-vs-neutral prompts.
constexpr std::array<CuratedPrompt, 20> kNeutralPrompts = {{
    {"male", "A picture of a male person", kNeutralPrompt},
    {"wearing hat", "A picture of a person with hat", kNeutralPrompt},
    {"goatee", "A picture of a person with goatee", kNeutralPrompt},
    {"blond hair", "A picture of a person with blond hair", kNeutralPrompt},
    {"bangs", "A picture of a person with bangs", kNeutralPrompt},
    {"eyeglasses", "A picture of a person with eyeglasses", kNeutralPrompt},
    {"smiling", "A picture of a person who is smiling", kNeutralPrompt},
    {"bald", "A picture of a bald person", kNeutralPrompt},
    {"wearing necktie", "A picture of a person with necktie", kNeutralPrompt},
    {"gray hair", "A picture of a person with gray hair", kNeutralPrompt},
    {"big lips", "A picture of a person with big lips", kNeutralPrompt},
    {"wearing lipstick", "A picture of a person with lipstick", kNeutralPrompt},
    {"pointy nose", "A picture of a person with pointy nose", kNeutralPrompt},
    {"big nose", "A picture of a person with big nose", kNeutralPrompt},
    {"attractive", "A picture of an attractive person", kNeutralPrompt},
    {"rosy cheeks", "A picture of a person with rosy cheeks", kNeutralPrompt},
    {"high cheekbones", "A picture of a person with high cheekbones", kNeutralPrompt},
    {"bags under eyes", "A picture of a person with bags under eyes", kNeutralPrompt},
    {"narrow eyes", "A picture of a person with narrow eyes", kNeutralPrompt},
    {"no beard", "A picture of a person with no beard", kNeutralPrompt},
}};

// Curated target-vs-contrary prompts.
constexpr std::array<CuratedPrompt, 7> kContraryPrompts = {{
    {"male", "A picture of a man", "A picture of a woman"},
    {"bald", "A picture of a bald person", "A picture of a haired person"},
    {"smiling", "A picture of a person who is smiling", "A picture of a person who is serious"},
    {"pale skin", "A picture of a person with pale skin", "A picture of a person with tanned skin"},
    {"young", "A picture of a young person", "A picture of an aged person"},
    {"straight hair", "A picture of a person with straight hair", "A picture of a person with wavy hair"},
    {"attractive", "A picture of an attractive person", "A picture of an unattractive person"},
}};

const std::string kHeader = "attribute,target,counter,method,provenance";

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

const std::set<std::string>& celeba_normalized() {
    static const std::set<std::string> names = [] {
        std::set<std::string> out;
        for (auto name : kCelebaAttributes) out.insert(normalize_attribute(name));
        return out;
    }();
    return names;
}

} // namespace

std::string_view to_string(PromptMethod method) noexcept {
    return method == PromptMethod::Neutral ? "neutral" : "contrary";
}

std::string_view to_string(Provenance provenance) noexcept {
    switch (provenance) {
    case Provenance::CuratedNeutral: return "curated_neutral";
    case Provenance::CuratedContrary: return "curated_contrary";
    case Provenance::Template: return "template";
    }
    return "template";
}

PromptMethod parse_prompt_method(std::string_view text) {
    if (text == "neutral") return PromptMethod::Neutral;
    if (text == "contrary") return PromptMethod::Contrary;
    throw Error(ErrorKind::Format, "unknown prompt method '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
    if (text == "curated_neutral") return Provenance::CuratedNeutral;
    if (text == "curated_contrary") return Provenance::CuratedContrary;
    if (text == "template") return Provenance::Template;
    throw Error(ErrorKind::Format, "unknown provenance '" + std::string(text) + "'");
}

PromptPair neutral_pair(std::string_view user_text) {
    std::string target = text::trim(user_text);
    if (target.empty()) throw Error(ErrorKind::Validation, "prompt text is empty");
    if (target == kNeutralPrompt)
        throw Error(ErrorKind::Validation, "prompt text equals the neutral prompt");
    return {std::move(target), std::string(kNeutralPrompt), PromptMethod::Neutral};
}

PromptPair contrary_pair(std::string_view text_a, std::string_view text_b) {
    std::string a = text::trim(text_a);
    std::string b = text::trim(text_b);
    if (a.empty() || b.empty()) throw Error(ErrorKind::Validation, "both prompts must be non-empty");
    if (a == b) throw Error(ErrorKind::Validation, "the two prompts must differ");
    return {std::move(a), std::move(b), PromptMethod::Contrary};
}

std::string normalize_attribute(std::string_view name) {
    std::string spaced(name);
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    std::string out;
    for (const auto& word : text::split_whitespace(spaced)) {
        if (!out.empty()) out.push_back(' ');
        out += text::to_lower(word);
    }
    return out;
}

std::string template_prompt(std::string_view label) {
    return "A picture of a person with " + normalize_attribute(label);
}

bool has_negation(std::string_view attribute) {
    for (const auto& word : text::split_whitespace(normalize_attribute(attribute)))
        if (word == "no") return true;
    return false;
}

const std::array<std::string_view, 40>& celeba_attributes() { return kCelebaAttributes; }

Catalog::Catalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
    std::set<std::pair<std::string, PromptMethod>> seen;
    std::set<std::string> labels;
    std::set<std::string> with_neutral;
    for (auto& e : entries_) {
        e.attribute = normalize_attribute(e.attribute);
        if (e.attribute.empty()) throw Error(ErrorKind::Format, "catalog row with empty attribute");
        if (!celeba_normalized().count(e.attribute))
            throw Error(ErrorKind::Format, "catalog attribute '" + e.attribute + "' is not a CelebA label");
        if (e.target_text.empty() || e.counter_text.empty())
            throw Error(ErrorKind::Format, "catalog row '" + e.attribute + "' has an empty prompt");
        if (e.target_text == e.counter_text)
            throw Error(ErrorKind::Format, "catalog row '" + e.attribute + "' has identical prompts");
        if (!seen.emplace(e.attribute, e.method).second)
            throw Error(ErrorKind::Format, "duplicate catalog attribute '" + e.attribute + "' (" +
                                               std::string(to_string(e.method)) + ")");
        labels.insert(e.attribute);
        if (e.method == PromptMethod::Neutral) with_neutral.insert(e.attribute);
    }
    if (labels.size() != kAttributeCount)
        throw Error(ErrorKind::Format, "catalog must cover exactly 40 attributes, found " +
                                           std::to_string(labels.size()));
    for (const auto& label : labels)
        if (!with_neutral.count(label))
            throw Error(ErrorKind::Format, "catalog attribute '" + label + "' has no neutral row");
}

Catalog Catalog::defaults() {
    std::vector<CatalogEntry> rows;
    for (auto raw : kCelebaAttributes) {
        const std::string name = normalize_attribute(raw);
        auto curated = std::find_if(kNeutralPrompts.begin(), kNeutralPrompts.end(),
                                    [&](const auto& p) { return p.attribute == name; });
        if (curated != kNeutralPrompts.end()) {
            rows.push_back({name, std::string(curated->target), std::string(curated->counter),
                            PromptMethod::Neutral, Provenance::CuratedNeutral});
        } else {
            rows.push_back({name, template_prompt(name), std::string(kNeutralPrompt),
                            PromptMethod::Neutral, Provenance::Template});
        }
        auto contrary = std::find_if(kContraryPrompts.begin(), kContraryPrompts.end(),
                                     [&](const auto& p) { return p.attribute == name; });
        if (contrary != kContraryPrompts.end()) {
            rows.push_back({name, std::string(contrary->target), std::string(contrary->counter),
                            PromptMethod::Contrary, Provenance::CuratedContrary});
        }
    }
    return Catalog(std::move(rows));
}

Catalog Catalog::parse(std::istream& in) {
    csv::Row row;
    std::size_t line = 1;
    if (!csv::read_row(in, row, line))
        throw Error(ErrorKind::Format, "catalog file is empty");
    std::string header;
    for (std::size_t i = 0; i < row.size(); ++i) header += (i ? "," : "") + text::trim(row[i]);
    if (!header.empty() && header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
    if (header != kHeader)
        throw Error(ErrorKind::Format, "catalog header must be '" + kHeader + "'", "line 1");

    std::vector<CatalogEntry> entries;
    std::size_t row_line = line;
    while (csv::read_row(in, row, line)) {
        if (row.size() == 1 && text::trim(row[0]).empty()) {
            row_line = line;
            continue;
        }
        if (row.size() != 5)
            throw Error(ErrorKind::Format, "catalog row must have 5 fields",
                        "line " + std::to_string(row_line));
        try {
            entries.push_back({row[0], row[1], row[2], parse_prompt_method(text::trim(row[3])),
                               parse_provenance(text::trim(row[4]))});
        } catch (const Error& e) {
            throw Error(ErrorKind::Format, e.what(), "line " + std::to_string(row_line));
        }
        row_line = line;
    }
    return Catalog(std::move(entries));
}

Catalog Catalog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Format, "cannot open catalog file", path.string());
    return parse(in);
}

std::string Catalog::emit() const {
    std::string out = kHeader + "\n";
    for (const auto& e : entries_)
        out += csv::format_row({e.attribute, e.target_text, e.counter_text,
                                std::string(to_string(e.method)), std::string(to_string(e.provenance))});
    return out;
}

void Catalog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Format, "cannot write catalog file", path.string());
    out << emit();
}

const CatalogEntry* Catalog::find(std::string_view normalized, PromptMethod method) const {
    for (const auto& e : entries_)
        if (e.attribute == normalized && e.method == method) return &e;
    return nullptr;
}

const CatalogEntry& Catalog::lookup_entry(std::string_view name) const {
    const std::string key = normalize_attribute(name);
    if (const auto* e = find(key, PromptMethod::Contrary)) return *e;
    if (const auto* e = find(key, PromptMethod::Neutral)) return *e;
    std::string detail = "did you mean: ";
    auto close = nearest(name);
    for (std::size_t i = 0; i < close.size(); ++i) detail += (i ? ", " : "") + close[i];
    throw Error(ErrorKind::CatalogMiss, "unknown attribute '" + std::string(name) + "'", detail);
}

PromptPair Catalog::lookup(std::string_view name) const { return lookup_entry(name).pair(); }

std::optional<PromptPair> Catalog::pair_for(std::string_view name, PromptMethod method) const {
    if (const auto* e = find(normalize_attribute(name), method)) return e->pair();
    return std::nullopt;
}

bool Catalog::contains(std::string_view name) const {
    return find(normalize_attribute(name), PromptMethod::Neutral) != nullptr;
}

std::vector<std::string> Catalog::list_attributes() const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (std::find(out.begin(), out.end(), e.attribute) == out.end()) out.push_back(e.attribute);
    return out;
}

std::vector<std::string> Catalog::nearest(std::string_view name, std::size_t limit) const {
    const std::string key = normalize_attribute(name);
    auto names = list_attributes();
    std::stable_sort(names.begin(), names.end(), [&](const auto& a, const auto& b) {
        return edit_distance(key, a) < edit_distance(key, b);
    });
    if (names.size() > limit) names.resize(limit);
    return names;
}

} // namespace guesswho
