#pragma once

#include "guesswho/classifier.hpp"
#include "guesswho/prompts.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace guesswho {

/// Parsed `list_attr_celeba.txt`: 40 label names and one +-1 row per image,
/// in file order.
struct AttributeTable {
    std::vector<std::string> attribute_names;
    std::vector<std::string> filenames;
    std::vector<std::array<std::int8_t, 40>> rows;

    std::size_t size() const noexcept { return rows.size(); }

    /// Accepts raw ("Wearing_Hat") or normalized ("wearing hat") names.
    /// Throws CatalogMiss for unknown names.
    std::size_t index_of(std::string_view attribute) const;
};

/// Line 1 is the row count, line 2 the 40 names, then
/// `<filename> <v1> ... <v40>`. Throws Format with the offending line.
AttributeTable parse_attr_file(std::istream& in);
AttributeTable load_attr_file(const std::filesystem::path& path);

struct EvalSubset {
    std::vector<std::string> positives;
    std::vector<std::string> negatives;
};

/// First `cap` positive and first `cap` negative rows in file order.
EvalSubset select_eval_subset(const AttributeTable& table, std::string_view attribute,
                              std::size_t cap = 4000);

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Rates are percentages rounded half-up to two decimals.
struct EvalResult {
    std::string attribute;
    PromptPair pair;
    ConfusionCounts counts;
    double tpr = 0.0;
    double tnr = 0.0;
    double acc = 0.0;
};

/// Rounds `value` (a percentage) half-up to two decimals.
double round_percent(double value);

/// Exact half-up rounding of 100 * num / den to hundredths.
double percent_of(std::int64_t num, std::int64_t den);

/// Computes tpr/tnr/acc from counts; acc is the mean of the unrounded rates.
/// Throws InsufficientData when either side has no samples.
EvalResult make_eval_result(std::string attribute, PromptPair pair, ConfusionCounts counts);

struct EvalOptions {
    /// Prepended to subset file names to form image references.
    std::filesystem::path image_root;
    std::size_t chunk_size = 32;
    /// Worker threads; 0 picks hardware concurrency. Backends that require
    /// serialization always run on one thread.
    std::size_t threads = 1;
};

/// Classifies both subset halves with `pair` and tallies the confusion
/// matrix. Throws InsufficientData naming an empty side, Backend when any
/// image fails.
EvalResult evaluate_prompt_pair(EncoderBackend& backend, const EvalSubset& subset,
                                const PromptPair& pair, std::string attribute,
                                const EvalOptions& options = {});

struct ComparisonRow {
    std::string attribute;
    double neutral_acc = 0.0;
    double contrary_acc = 0.0;
    double gain = 0.0; ///< contrary_acc - neutral_acc, percentage points
    /// Contrary-method details for the report, when available.
    std::optional<EvalResult> contrary;
};

/// Pairs results by attribute (neutral list order). Throws Pairing when an
/// attribute is present in only one list.
std::vector<ComparisonRow> compare_methods(const std::vector<EvalResult>& neutral,
                                           const std::vector<EvalResult>& contrary);

enum class ReportFormat { Csv, Markdown };

ReportFormat parse_report_format(std::string_view text);

/// Columns: label, target prompt, TPR, TNR, Acc. Sorted by Acc descending,
/// ties by label.
std::string emit_report(const std::vector<EvalResult>& results, ReportFormat format);

/// Columns: label, target prompt, counter prompt, TPR, TNR, Acc, Gain.
std::string emit_report(const std::vector<ComparisonRow>& rows, ReportFormat format);

/// Header plus cell text, as read back from either report format.
struct ReportTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

ReportTable parse_report(std::string_view document, ReportFormat format);

} // namespace guesswho
