#include "guesswho/benchmark.hpp"

#include "guesswho/csv.hpp"
#include "guesswho/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <istream>
#include <set>
#include <sstream>
#include <thread>

namespace guesswho {

namespace {

const std::vector<std::string> kResultHeader = {"Label", "Target prompt", "TPR", "TNR", "Acc"};
const std::vector<std::string> kComparisonHeader = {"Label", "Target prompt", "Counter prompt",
                                                    "TPR",   "TNR",           "Acc", "Gain"};

std::string fixed2(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

std::string signed2(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.2f", value);
    return buf;
}

std::int64_t hundredths(double percent) { return std::llround(percent * 100.0); }

std::string md_escape(const std::string& cell) {
    std::string out;
    for (char c : cell) {
        if (c == '|' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows,
                   std::size_t text_columns, ReportFormat format) {
    std::string out;
    if (format == ReportFormat::Csv) {
        out += csv::format_row(header);
        for (const auto& row : rows) out += csv::format_row(row);
        return out;
    }
    auto line = [&](const std::vector<std::string>& cells) {
        out += "|";
        for (const auto& c : cells) out += " " + md_escape(c) + " |";
        out += "\n";
    };
    line(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i < text_columns ? " --- |" : " ---: |";
    out += "\n";
    for (const auto& row : rows) line(row);
    return out;
}

ConfusionCounts tally(EncoderBackend& backend, std::span<const std::string> refs, const PromptPair& pair,
                      bool truth_positive, const EvalOptions& options, std::size_t threads) {
    auto run = [&](std::span<const std::string> slice) {
        ConfusionCounts counts;
        if (slice.empty()) return counts;
        auto predictions = predict_batch(backend, slice, pair, options.chunk_size);
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            if (!predictions[i].ok())
                throw Error(ErrorKind::Backend, "image failed during evaluation: " + predictions[i].error,
                            slice[i]);
            const bool predicted = predictions[i].prediction->positive();
            if (truth_positive) (predicted ? counts.tp : counts.fn)++;
            else (predicted ? counts.fp : counts.tn)++;
        }
        return counts;
    };

    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(refs.size(), 1));
    if (threads == 1) return run(refs);

    std::vector<std::future<ConfusionCounts>> parts;
    const std::size_t per = (refs.size() + threads - 1) / threads;
    for (std::size_t start = 0; start < refs.size(); start += per)
        parts.push_back(std::async(std::launch::async, run, refs.subspan(start, std::min(per, refs.size() - start))));
    ConfusionCounts total;
    for (auto& part : parts) {
        const auto c = part.get();
        total.tp += c.tp;
        total.fn += c.fn;
        total.tn += c.tn;
        total.fp += c.fp;
    }
    return total;
}

} // namespace

std::size_t AttributeTable::index_of(std::string_view attribute) const {
    const std::string key = normalize_attribute(attribute);
    for (std::size_t i = 0; i < attribute_names.size(); ++i)
        if (normalize_attribute(attribute_names[i]) == key) return i;
    throw Error(ErrorKind::CatalogMiss, "unknown attribute '" + std::string(attribute) + "'");
}

AttributeTable parse_attr_file(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "attribute file is empty", "line 1");
    std::size_t declared = 0;
    try {
        std::size_t used = 0;
        const std::string count = text::trim(line);
        declared = std::stoul(count, &used);
        if (used != count.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
        throw Error(ErrorKind::Format, "first line must be the row count", "line 1");
    }

    AttributeTable table;
    ++line_no;
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "missing attribute name line", "line 2");
    table.attribute_names = text::split_whitespace(line);
    if (table.attribute_names.size() != 40)
        throw Error(ErrorKind::Format,
                    "expected 40 attribute names, found " + std::to_string(table.attribute_names.size()),
                    "line 2");

    table.filenames.reserve(declared);
    table.rows.reserve(declared);
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = text::split_whitespace(line);
        if (fields.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 41)
            throw Error(ErrorKind::Format, "row must hold a file name and 40 values, found " +
                                               std::to_string(fields.size()) + " fields", where);
        std::array<std::int8_t, 40> values{};
        for (std::size_t i = 0; i < 40; ++i) {
            const auto& v = fields[i + 1];
            if (v == "1") values[i] = 1;
            else if (v == "-1") values[i] = -1;
            else throw Error(ErrorKind::Format, "attribute value must be 1 or -1, got '" + v + "'", where);
        }
        if (!seen.insert(fields[0]).second)
            throw Error(ErrorKind::Format, "duplicate file name '" + fields[0] + "'", where);
        table.filenames.push_back(std::move(fields[0]));
        table.rows.push_back(values);
    }
    if (table.rows.size() != declared)
        throw Error(ErrorKind::Format, "declared " + std::to_string(declared) + " rows but found " +
                                           std::to_string(table.rows.size()), "line 1");
    return table;
}

AttributeTable load_attr_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Format, "cannot open attribute file", path.string());
    return parse_attr_file(in);
}

EvalSubset select_eval_subset(const AttributeTable& table, std::string_view attribute, std::size_t cap) {
    const std::size_t column = table.index_of(attribute);
    EvalSubset subset;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (subset.positives.size() >= cap && subset.negatives.size() >= cap) break;
        auto& side = table.rows[r][column] > 0 ? subset.positives : subset.negatives;
        if (side.size() < cap) side.push_back(table.filenames[r]);
    }
    return subset;
}

double round_percent(double value) { return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0; }

double percent_of(std::int64_t num, std::int64_t den) {
    if (den <= 0) throw Error(ErrorKind::InsufficientData, "rate with an empty denominator");
    return static_cast<double>((20000 * num + den) / (2 * den)) / 100.0;
}

EvalResult make_eval_result(std::string attribute, PromptPair pair, ConfusionCounts counts) {
    const std::int64_t pos = counts.tp + counts.fn;
    const std::int64_t neg = counts.tn + counts.fp;
    if (pos <= 0) throw Error(ErrorKind::InsufficientData, "no positive samples for '" + attribute + "'", "positives");
    if (neg <= 0) throw Error(ErrorKind::InsufficientData, "no negative samples for '" + attribute + "'", "negatives");
    EvalResult r;
    r.attribute = std::move(attribute);
    r.pair = std::move(pair);
    r.counts = counts;
    r.tpr = percent_of(counts.tp, pos);
    r.tnr = percent_of(counts.tn, neg);
    // Mean of the unrounded rates: 100 * (tp/pos + tn/neg) / 2.
    const std::int64_t num = counts.tp * neg + counts.tn * pos;
    const std::int64_t den = pos * neg;
    r.acc = static_cast<double>((10000 * num + den) / (2 * den)) / 100.0;
    return r;
}

EvalResult evaluate_prompt_pair(EncoderBackend& backend, const EvalSubset& subset, const PromptPair& pair,
                                std::string attribute, const EvalOptions& options) {
    if (subset.positives.empty())
        throw Error(ErrorKind::InsufficientData, "no positive samples for '" + attribute + "'", "positives");
    if (subset.negatives.empty())
        throw Error(ErrorKind::InsufficientData, "no negative samples for '" + attribute + "'", "negatives");

    auto to_refs = [&](const std::vector<std::string>& names) {
        std::vector<std::string> refs;
        refs.reserve(names.size());
        for (const auto& n : names)
            refs.push_back(options.image_root.empty() ? n : (options.image_root / n).string());
        return refs;
    };
    const auto positives = to_refs(subset.positives);
    const auto negatives = to_refs(subset.negatives);

    std::size_t threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    if (backend.serialize_required()) threads = 1;

    const auto pos = tally(backend, positives, pair, true, options, threads);
    const auto neg = tally(backend, negatives, pair, false, options, threads);
    return make_eval_result(std::move(attribute), pair, {pos.tp, pos.fn, neg.tn, neg.fp});
}

std::vector<ComparisonRow> compare_methods(const std::vector<EvalResult>& neutral,
                                           const std::vector<EvalResult>& contrary) {
    auto find = [](const std::vector<EvalResult>& list, const std::string& attribute) -> const EvalResult* {
        for (const auto& r : list)
            if (normalize_attribute(r.attribute) == attribute) return &r;
        return nullptr;
    };
    for (const auto& c : contrary)
        if (!find(neutral, normalize_attribute(c.attribute)))
            throw Error(ErrorKind::Pairing, "attribute '" + c.attribute + "' has no neutral result");

    std::vector<ComparisonRow> rows;
    for (const auto& n : neutral) {
        const auto* c = find(contrary, normalize_attribute(n.attribute));
        if (!c) throw Error(ErrorKind::Pairing, "attribute '" + n.attribute + "' has no contrary result");
        ComparisonRow row;
        row.attribute = n.attribute;
        row.neutral_acc = n.acc;
        row.contrary_acc = c->acc;
        row.gain = static_cast<double>(hundredths(c->acc) - hundredths(n.acc)) / 100.0;
        row.contrary = *c;
        rows.push_back(std::move(row));
    }
    return rows;
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "csv") return ReportFormat::Csv;
    if (text == "markdown" || text == "md") return ReportFormat::Markdown;
    throw Error(ErrorKind::Validation, "unknown report format '" + std::string(text) + "'");
}

std::string emit_report(const std::vector<EvalResult>& results, ReportFormat format) {
    std::vector<const EvalResult*> order;
    for (const auto& r : results) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const EvalResult* a, const EvalResult* b) {
        if (hundredths(a->acc) != hundredths(b->acc)) return hundredths(a->acc) > hundredths(b->acc);
        return a->attribute < b->attribute;
    });
    std::vector<std::vector<std::string>> rows;
    for (const auto* r : order)
        rows.push_back({r->attribute, r->pair.target_text, fixed2(r->tpr), fixed2(r->tnr), fixed2(r->acc)});
    return render(kResultHeader, rows, 2, format);
}

std::string emit_report(const std::vector<ComparisonRow>& comparisons, ReportFormat format) {
    std::vector<const ComparisonRow*> order;
    for (const auto& r : comparisons) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const ComparisonRow* a, const ComparisonRow* b) {
        if (hundredths(a->contrary_acc) != hundredths(b->contrary_acc))
            return hundredths(a->contrary_acc) > hundredths(b->contrary_acc);
        return a->attribute < b->attribute;
    });
    std::vector<std::vector<std::string>> rows;
    for (const auto* r : order) {
        std::string target, counter, tpr, tnr;
        if (r->contrary) {
            target = r->contrary->pair.target_text;
            counter = r->contrary->pair.counter_text;
            tpr = fixed2(r->contrary->tpr);
            tnr = fixed2(r->contrary->tnr);
        }
        rows.push_back({r->attribute, target, counter, tpr, tnr, fixed2(r->contrary_acc), signed2(r->gain)});
    }
    return render(kComparisonHeader, rows, 3, format);
}

ReportTable parse_report(std::string_view document, ReportFormat format) {
    ReportTable table;
    if (format == ReportFormat::Csv) {
        std::istringstream in{std::string(document)};
        csv::Row row;
        std::size_t line = 1;
        bool first = true;
        while (csv::read_row(in, row, line)) {
            if (row.size() == 1 && row[0].empty()) continue;
            if (first) table.header = row;
            else table.rows.push_back(row);
            first = false;
        }
        return table;
    }

    std::istringstream in{std::string(document)};
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        const std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() != '|' || trimmed.back() != '|')
            throw Error(ErrorKind::Format, "markdown row must start and end with '|'");
        std::vector<std::string> cells;
        std::string cell;
        for (std::size_t i = 1; i + 1 < trimmed.size(); ++i) {
            const char c = trimmed[i];
            if (c == '\\' && i + 2 < trimmed.size()) {
                cell.push_back(trimmed[++i]);
            } else if (c == '|') {
                cells.push_back(text::trim(cell));
                cell.clear();
            } else {
                cell.push_back(c);
            }
        }
        cells.push_back(text::trim(cell));
        if (index == 0) table.header = std::move(cells);
        else if (index > 1) table.rows.push_back(std::move(cells));
        ++index;
    }
    return table;
}

} // namespace guesswho
