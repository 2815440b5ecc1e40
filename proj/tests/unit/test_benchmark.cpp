#include "guesswho/benchmark.hpp"
#include "guesswho/fixture_backend.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace guesswho;

namespace {

std::string names_line() {
    std::string line;
    for (const auto& n : celeba_attributes()) line += std::string(n) + " ";
    return line;
}

std::string row_line(const std::string& name, const AttributeBits& bits) {
    std::string line = name;
    for (auto b : bits) line += b > 0 ? "  1" : " -1";
    return line;
}

AttributeTable parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_attr_file(in);
}

/// Ten rows; "male" (column 20) is positive on rows 2 and 7.
AttributeTable ten_rows() {
    std::string text = "10\n" + names_line() + "\n";
    for (int i = 0; i < 10; ++i) {
        auto bits = testing::all_bits(-1);
        if (i == 2 || i == 7) bits[20] = 1;
        text += row_line("r" + std::to_string(i) + ".jpg", bits) + "\n";
    }
    return parse_text(text);
}

EvalResult result(const std::string& attribute, double acc) {
    EvalResult r;
    r.attribute = attribute;
    r.pair = neutral_pair("A picture of a person with " + attribute);
    r.acc = acc;
    r.tpr = acc;
    r.tnr = acc;
    return r;
}

/// Ten positive and ten negative fixture images for `bit`; images listed in
/// `wrong` carry the opposite bit of their subset side.
struct TenTen {
    std::shared_ptr<FixtureBackend> backend;
    EvalSubset subset;
};

TenTen ten_ten(std::size_t bit, const std::set<int>& wrong, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<std::string, AttributeBits> images;
    TenTen out;
    for (int i = 0; i < 20; ++i) {
        auto bits = testing::random_bits(rng);
        const bool truth = i < 10;
        const bool shown = wrong.count(i) ? !truth : truth;
        bits[bit] = shown ? 1 : -1;
        const std::string name = "p" + std::to_string(i) + ".jpg";
        images.emplace(name, bits);
        (truth ? out.subset.positives : out.subset.negatives).push_back(name);
    }
    out.backend = std::make_shared<FixtureBackend>(images, FixtureBackend::prompts_from_catalog(Catalog::defaults()));
    return out;
}

} // namespace

TEST_SUITE("benchmark") {

TEST_CASE("parse a small annotation file") {
    auto a = testing::all_bits(1);
    auto b = testing::all_bits(-1);
    const auto t = parse_text("2\n" + names_line() + "\n" + row_line("000001.jpg", a) + "\n" +
                              row_line("000002.jpg", b) + "\n");
    CHECK(t.size() == 2);
    CHECK(t.attribute_names.size() == 40);
    CHECK(t.filenames == std::vector<std::string>{"000001.jpg", "000002.jpg"});
    CHECK(t.rows[0] == a);
    CHECK(t.rows[1] == b);
    CHECK(t.index_of("Male") == 20);
    CHECK(t.index_of("wearing hat") == 35);
    CHECK(testing::error_kind([&] { t.index_of("tail"); }) == ErrorKind::CatalogMiss);
}

TEST_CASE("shipped fixture annotation file uses the CelebA layout") {
    const auto t = load_attr_file(testing::data_path("board/list_attr_celeba.txt"));
    CHECK(t.size() == 64);
    CHECK(t.attribute_names.front() == "5_o_Clock_Shadow");
    CHECK(t.attribute_names.back() == "Young");
    CHECK(t.filenames.front() == "face_01.png");
}

TEST_CASE("annotation format errors carry the line") {
    auto bits = testing::all_bits(1);
    std::string bad = row_line("x.jpg", bits);
    bad.replace(bad.size() - 3, 3, "  0");
    try {
        parse_text("2\n" + names_line() + "\n" + row_line("a.jpg", bits) + "\n" + bad + "\n");
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
        CHECK(e.detail() == "line 4");
    }
    CHECK(testing::error_kind([&] { parse_text("3\n" + names_line() + "\n" + row_line("a.jpg", bits) + "\n"); }) ==
          ErrorKind::Format);
    CHECK(testing::error_kind([&] { parse_text("1\n" + names_line() + "\na.jpg 1 -1\n"); }) == ErrorKind::Format);
    CHECK(testing::error_kind([] { parse_text("x\n"); }) == ErrorKind::Format);
    CHECK(testing::error_kind([] { parse_text("1\nA B C\n"); }) == ErrorKind::Format);
    CHECK(testing::error_kind([] { parse_text(""); }) == ErrorKind::Format);
    CHECK(testing::error_kind([&] {
        parse_text("2\n" + names_line() + "\n" + row_line("a.jpg", bits) + "\n" + row_line("a.jpg", bits) + "\n");
    }) == ErrorKind::Format);
}

TEST_CASE("subset selection follows file order and caps") {
    const auto t = ten_rows();
    auto s = select_eval_subset(t, "male", 3);
    CHECK(s.positives == std::vector<std::string>{"r2.jpg", "r7.jpg"});
    CHECK(s.negatives == std::vector<std::string>{"r0.jpg", "r1.jpg", "r3.jpg"});
    s = select_eval_subset(t, "male", 0);
    CHECK(s.positives.empty());
    CHECK(s.negatives.empty());
    s = select_eval_subset(t, "Male");
    CHECK(s.positives.size() == 2);
    CHECK(s.negatives.size() == 8);
    CHECK(testing::error_kind([&] { select_eval_subset(t, "tail"); }) == ErrorKind::CatalogMiss);
}

TEST_CASE("rates from counts") {
    const auto r = make_eval_result("x", neutral_pair("t"), {3, 1, 2, 2});
    CHECK(r.tpr == 75.0);
    CHECK(r.tnr == 50.0);
    CHECK(r.acc == 62.5);
    const auto p = make_eval_result("x", neutral_pair("t"), {5, 0, 7, 0});
    CHECK(p.tpr == 100.0);
    CHECK(p.tnr == 100.0);
    CHECK(p.acc == 100.0);
    CHECK(testing::error_kind([] { make_eval_result("x", neutral_pair("t"), {0, 0, 1, 1}); }) ==
          ErrorKind::InsufficientData);
}

TEST_CASE("half-up rounding to hundredths") {
    CHECK(percent_of(1, 3) == 33.33);
    CHECK(percent_of(2, 3) == 66.67);
    CHECK(percent_of(1, 8) == 12.5);
    CHECK(percent_of(1, 16) == 6.25);
    CHECK(percent_of(1, 32) == 3.13);
    CHECK(percent_of(1, 80000) == 0.0);
    CHECK(percent_of(1, 40000) == 0.0);
    CHECK(percent_of(1, 20000) == 0.01);
    CHECK(round_percent(12.345) == 12.35);
    CHECK(round_percent(12.344) == 12.34);
    CHECK(testing::error_kind([] { percent_of(1, 0); }) == ErrorKind::InsufficientData);
}

TEST_CASE("accuracy is the mean of the rates for many count combinations") {
    for (std::int64_t pos = 1; pos <= 12; ++pos)
        for (std::int64_t neg = 1; neg <= 12; ++neg)
            for (std::int64_t tp = 0; tp <= pos; ++tp)
                for (std::int64_t tn = 0; tn <= neg; ++tn) {
                    const auto r = make_eval_result("x", neutral_pair("t"), {tp, pos - tp, tn, neg - tn});
                    CHECK(std::abs(r.acc - (r.tpr + r.tnr) / 2) <= 0.005 + 1e-9);
                }
}

TEST_CASE("evaluation matches a brute-force confusion matrix") {
    const std::size_t male = 20;
    const auto fx = ten_ten(male, {1, 4, 12, 15, 18}, 3);
    const auto pair = *Catalog::defaults().pair_for("male", PromptMethod::Neutral);
    const auto r = evaluate_prompt_pair(*fx.backend, fx.subset, pair, "male");

    ConfusionCounts brute;
    for (const auto& name : fx.subset.positives) (fx.backend->bits_for(name)[male] > 0 ? brute.tp : brute.fn)++;
    for (const auto& name : fx.subset.negatives) (fx.backend->bits_for(name)[male] > 0 ? brute.fp : brute.tn)++;
    CHECK(r.counts == brute);
    CHECK(r.counts == ConfusionCounts{8, 2, 7, 3});
    CHECK(r.tpr == 80.0);
    CHECK(r.tnr == 70.0);
    CHECK(r.acc == 75.0);
}

TEST_CASE("inverted polarity mirrors the rates") {
    const std::size_t bit = 15;
    const auto fx = ten_ten(bit, {0, 3, 11}, 8);
    const auto forward = PromptPair{"up", "down", PromptMethod::Contrary};
    const auto inverted = PromptPair{"down", "up", PromptMethod::Contrary};
    std::map<std::string, AttributeBits> images;
    for (const auto& n : fx.subset.positives) images.emplace(n, fx.backend->bits_for(n));
    for (const auto& n : fx.subset.negatives) images.emplace(n, fx.backend->bits_for(n));
    FixtureBackend b(images, {{"up", {bit, 1}}, {"down", {bit, -1}}});
    const auto f = evaluate_prompt_pair(b, fx.subset, forward, "eyeglasses");
    const auto i = evaluate_prompt_pair(b, fx.subset, inverted, "eyeglasses");
    CHECK(f.tpr + f.tnr + i.tpr + i.tnr == doctest::Approx(200.0));
    CHECK(f.counts.tp == i.counts.fn);
    CHECK(f.counts.tn == i.counts.fp);
}

TEST_CASE("perfect classifier on the board fixture") {
    auto backend = testing::board_backend();
    const auto table = load_attr_file(testing::data_path("board/list_attr_celeba.txt"));
    const Catalog catalog = Catalog::defaults();
    for (const auto& attribute : {"male", "eyeglasses", "young", "smiling"}) {
        const auto subset = select_eval_subset(table, attribute);
        if (subset.positives.empty() || subset.negatives.empty()) continue;
        const auto r = evaluate_prompt_pair(*backend, subset, *catalog.pair_for(attribute, PromptMethod::Neutral),
                                            attribute, {testing::data_path("board"), 5, 1});
        CHECK(r.acc == 100.0);
        CHECK(r.counts.tp + r.counts.fn == static_cast<std::int64_t>(subset.positives.size()));
        CHECK(r.counts.tn + r.counts.fp == static_cast<std::int64_t>(subset.negatives.size()));
    }
}

TEST_CASE("evaluation is independent of threads, chunking and order") {
    const auto fx = ten_ten(2, {2, 5, 9, 13}, 21);
    const auto pair = *Catalog::defaults().pair_for("attractive", PromptMethod::Neutral);
    const auto base = evaluate_prompt_pair(*fx.backend, fx.subset, pair, "attractive");
    for (std::size_t threads : {0u, 2u, 3u, 8u, 64u})
        for (std::size_t chunk : {1u, 4u, 32u}) {
            const auto r = evaluate_prompt_pair(*fx.backend, fx.subset, pair, "attractive", {{}, chunk, threads});
            CHECK(r.counts == base.counts);
        }
    auto shuffled = fx.subset;
    std::mt19937_64 rng(4);
    std::shuffle(shuffled.positives.begin(), shuffled.positives.end(), rng);
    std::shuffle(shuffled.negatives.begin(), shuffled.negatives.end(), rng);
    CHECK(evaluate_prompt_pair(*fx.backend, shuffled, pair, "attractive").counts == base.counts);
}

TEST_CASE("evaluation errors") {
    const auto fx = ten_ten(2, {}, 1);
    const auto pair = *Catalog::defaults().pair_for("attractive", PromptMethod::Neutral);
    auto empty_pos = fx.subset;
    empty_pos.positives.clear();
    try {
        evaluate_prompt_pair(*fx.backend, empty_pos, pair, "attractive");
        FAIL("expected insufficient data");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
        CHECK(e.detail() == "positives");
    }
    auto empty_neg = fx.subset;
    empty_neg.negatives.clear();
    CHECK(testing::error_kind([&] { evaluate_prompt_pair(*fx.backend, empty_neg, pair, "attractive"); }) ==
          ErrorKind::InsufficientData);
    auto missing = fx.subset;
    missing.negatives.push_back("ghost.jpg");
    CHECK(testing::error_kind([&] { evaluate_prompt_pair(*fx.backend, missing, pair, "attractive"); }) ==
          ErrorKind::Backend);
}

TEST_CASE("compare_methods computes gain in hundredths") {
    const std::vector<EvalResult> neutral{result("male", 97.11), result("bald", 81.58), result("attractive", 51.46)};
    const std::vector<EvalResult> contrary{result("attractive", 50.20), result("male", 98.54), result("bald", 86.65)};
    const auto rows = compare_methods(neutral, contrary);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].attribute == "male");
    CHECK(rows[0].gain == 1.43);
    CHECK(rows[1].gain == 5.07);
    CHECK(rows[2].gain == -1.26);
    CHECK(rows[2].contrary->acc == 50.20);

    CHECK(testing::error_kind([&] {
        compare_methods(neutral, {result("male", 98.54), result("bald", 86.65)});
    }) == ErrorKind::Pairing);
    CHECK(testing::error_kind([&] {
        compare_methods({result("male", 97.11)}, {result("male", 98.54), result("bald", 86.65)});
    }) == ErrorKind::Pairing);
}

TEST_CASE("reports sort by accuracy then label") {
    const std::vector<EvalResult> results{result("bald", 80.0), result("male", 97.5), result("bangs", 80.0)};
    const auto table = parse_report(emit_report(results, ReportFormat::Csv), ReportFormat::Csv);
    CHECK(table.header == std::vector<std::string>{"Label", "Target prompt", "TPR", "TNR", "Acc"});
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][0] == "male");
    CHECK(table.rows[1][0] == "bald");
    CHECK(table.rows[2][0] == "bangs");
    CHECK(table.rows[0][4] == "97.50");
    CHECK(emit_report(results, ReportFormat::Csv) == emit_report(results, ReportFormat::Csv));
}

TEST_CASE("markdown and csv reports carry the same cells") {
    std::vector<EvalResult> results{result("male", 97.11), result("a|b", 60.0)};
    results[1].pair = neutral_pair("A picture with a | pipe, and comma");
    const auto md = emit_report(results, ReportFormat::Markdown);
    CHECK(md.rfind("| Label | Target prompt | TPR | TNR | Acc |\n| --- | --- | ---: | ---: | ---: |\n", 0) == 0);
    CHECK(parse_report(md, ReportFormat::Markdown) ==
          parse_report(emit_report(results, ReportFormat::Csv), ReportFormat::Csv));

    const auto rows = compare_methods({result("male", 97.11), result("bald", 81.58)},
                                      {result("male", 98.54), result("bald", 86.65)});
    const auto cmd = emit_report(rows, ReportFormat::Markdown);
    const auto ccsv = emit_report(rows, ReportFormat::Csv);
    const auto parsed = parse_report(cmd, ReportFormat::Markdown);
    CHECK(parsed == parse_report(ccsv, ReportFormat::Csv));
    CHECK(parsed.header.back() == "Gain");
    CHECK(parsed.rows[0][0] == "male");
    CHECK(parsed.rows[0][6] == "+1.43");
    CHECK(parsed.rows[1][6] == "+5.07");
    CHECK(testing::error_kind([] { parse_report("not a table", ReportFormat::Markdown); }) == ErrorKind::Format);
}

TEST_CASE("report format names") {
    CHECK(parse_report_format("csv") == ReportFormat::Csv);
    CHECK(parse_report_format("md") == ReportFormat::Markdown);
    CHECK(parse_report_format("markdown") == ReportFormat::Markdown);
    CHECK(testing::error_kind([] { parse_report_format("xlsx"); }) == ErrorKind::Validation);
}

}
