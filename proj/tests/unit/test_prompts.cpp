#include "guesswho/error.hpp"
#include "guesswho/prompts.hpp"

#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace guesswho;

namespace {

Catalog parse_text(const std::string& text) {
    std::istringstream in(text);
    return Catalog::parse(in);
}

} // namespace

TEST_SUITE("prompts") {

TEST_CASE("neutral pair confronts the neutral caption") {
    auto p = neutral_pair("A picture of a person with eyeglasses");
    CHECK(p.target_text == "A picture of a person with eyeglasses");
    CHECK(p.counter_text == "A picture of a person");
    CHECK(p.method == PromptMethod::Neutral);

    CHECK(neutral_pair("A picture of a bald person").counter_text == "A picture of a person");
    CHECK(neutral_pair("  padded text ").target_text == "padded text");
    CHECK(testing::error_kind([] { neutral_pair("   "); }) == ErrorKind::Validation);
    CHECK(testing::error_kind([] { neutral_pair("A picture of a person"); }) == ErrorKind::Validation);
}

TEST_CASE("contrary pair keeps order and rejects equal texts") {
    auto p = contrary_pair("A picture of a man", "A picture of a woman");
    CHECK(p == PromptPair{"A picture of a man", "A picture of a woman", PromptMethod::Contrary});
    auto y = contrary_pair("A picture of a young person", "A picture of an aged person");
    CHECK(y.target_text == "A picture of a young person");
    CHECK(y.counter_text == "A picture of an aged person");
    CHECK(testing::error_kind([] { contrary_pair("x", "x"); }) == ErrorKind::Validation);
    CHECK(testing::error_kind([] { contrary_pair(" x", "x "); }) == ErrorKind::Validation);
    CHECK(testing::error_kind([] { contrary_pair("", "x"); }) == ErrorKind::Validation);
}

TEST_CASE("attribute names normalize") {
    CHECK(normalize_attribute("Wearing_Hat") == "wearing hat");
    CHECK(normalize_attribute(" WEARING  hat ") == "wearing hat");
    CHECK(normalize_attribute("5_o_Clock_Shadow") == "5 o clock shadow");
    CHECK(has_negation("No_Beard"));
    CHECK(has_negation("no beard"));
    CHECK_FALSE(has_negation("narrow eyes"));
    CHECK_FALSE(has_negation("big nose"));
}

TEST_CASE("lookup prefers contrary rows") {
    const Catalog c = Catalog::defaults();
    CHECK(c.lookup("male") == PromptPair{"A picture of a man", "A picture of a woman", PromptMethod::Contrary});
    CHECK(c.lookup("Male") == c.lookup("male"));
    CHECK(c.lookup("wearing hat") ==
          PromptPair{"A picture of a person with hat", "A picture of a person", PromptMethod::Neutral});
    CHECK(c.lookup("Wearing_Hat") == c.lookup("wearing hat"));
    CHECK(c.lookup("big lips") ==
          PromptPair{"A picture of a person with big lips", "A picture of a person", PromptMethod::Neutral});
    CHECK(c.pair_for("male", PromptMethod::Neutral)->target_text == "A picture of a male person");
    CHECK_FALSE(c.pair_for("wearing hat", PromptMethod::Contrary).has_value());
}

TEST_CASE("curated contrary rows") {
    const Catalog c = Catalog::defaults();
    const std::vector<std::tuple<std::string, std::string, std::string>> expected = {
        {"male", "A picture of a man", "A picture of a woman"},
        {"bald", "A picture of a bald person", "A picture of a haired person"},
        {"smiling", "A picture of a person who is smiling", "A picture of a person who is serious"},
        {"pale skin", "A picture of a person with pale skin", "A picture of a person with tanned skin"},
        {"young", "A picture of a young person", "A picture of an aged person"},
        {"straight hair", "A picture of a person with straight hair", "A picture of a person with wavy hair"},
        {"attractive", "A picture of an attractive person", "A picture of an unattractive person"},
    };
    std::size_t contrary_rows = 0;
    for (const auto& e : c.entries()) contrary_rows += e.method == PromptMethod::Contrary;
    CHECK(contrary_rows == expected.size());
    for (const auto& [attr, target, counter] : expected) {
        CAPTURE(attr);
        auto p = c.pair_for(attr, PromptMethod::Contrary);
        REQUIRE(p);
        CHECK(p->target_text == target);
        CHECK(p->counter_text == counter);
    }
}

TEST_CASE("curated neutral rows and template rows") {
    const Catalog c = Catalog::defaults();
    const std::map<std::string, std::string> curated = {
        {"male", "A picture of a male person"},
        {"wearing hat", "A picture of a person with hat"},
        {"goatee", "A picture of a person with goatee"},
        {"blond hair", "A picture of a person with blond hair"},
        {"bangs", "A picture of a person with bangs"},
        {"eyeglasses", "A picture of a person with eyeglasses"},
        {"smiling", "A picture of a person who is smiling"},
        {"bald", "A picture of a bald person"},
        {"wearing necktie", "A picture of a person with necktie"},
        {"gray hair", "A picture of a person with gray hair"},
        {"big lips", "A picture of a person with big lips"},
        {"wearing lipstick", "A picture of a person with lipstick"},
        {"pointy nose", "A picture of a person with pointy nose"},
        {"big nose", "A picture of a person with big nose"},
        {"attractive", "A picture of an attractive person"},
        {"rosy cheeks", "A picture of a person with rosy cheeks"},
        {"high cheekbones", "A picture of a person with high cheekbones"},
        {"bags under eyes", "A picture of a person with bags under eyes"},
        {"narrow eyes", "A picture of a person with narrow eyes"},
        {"no beard", "A picture of a person with no beard"},
    };
    for (const auto& e : c.entries()) {
        if (e.method != PromptMethod::Neutral) continue;
        CAPTURE(e.attribute);
        CHECK(e.counter_text == "A picture of a person");
        if (auto it = curated.find(e.attribute); it != curated.end()) {
            CHECK(e.target_text == it->second);
            CHECK(e.provenance == Provenance::CuratedNeutral);
        } else {
            CHECK(e.target_text == template_prompt(e.attribute));
            CHECK(e.provenance == Provenance::Template);
        }
    }
    CHECK(c.lookup("mouth slightly open").target_text == "A picture of a person with mouth slightly open");
}

TEST_CASE("forty attributes in annotation order") {
    const Catalog c = Catalog::defaults();
    const auto names = c.list_attributes();
    REQUIRE(names.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) CHECK(names[i] == normalize_attribute(celeba_attributes()[i]));
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == 40);
}

TEST_CASE("no beard carries a negation warning") {
    const Catalog c = Catalog::defaults();
    const auto& e = c.lookup_entry("no beard");
    CHECK(e.negation_warning());
    CHECK(e.method == PromptMethod::Neutral);
    std::size_t warned = 0;
    for (const auto& entry : c.entries()) warned += entry.negation_warning();
    CHECK(warned == 1);
}

TEST_CASE("unknown attribute suggests nearest names") {
    const Catalog c = Catalog::defaults();
    try {
        c.lookup("eyeglases");
        FAIL("expected a catalog miss");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CatalogMiss);
        CHECK(e.detail().find("eyeglasses") != std::string::npos);
    }
    CHECK(c.nearest("mael").front() == "male");
    CHECK_FALSE(c.contains("tail"));
    CHECK(c.contains("Wearing_Hat"));
}

TEST_CASE("emit and parse round-trip") {
    const Catalog c = Catalog::defaults();
    const Catalog back = parse_text(c.emit());
    CHECK(back == c);
    CHECK(back.emit() == c.emit());
}

TEST_CASE("shipped catalog file equals the built-in defaults") {
    const Catalog shipped = Catalog::load(std::filesystem::path(GUESSWHO_SOURCE_DIR) / "data" / "catalog.csv");
    CHECK(shipped == Catalog::defaults());
}

TEST_CASE("malformed catalogs are format errors") {
    const std::string full = Catalog::defaults().emit();
    std::vector<std::string> lines;
    std::istringstream in(full);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    auto join = [](const std::vector<std::string>& ls) {
        std::string s;
        for (const auto& l : ls) s += l + "\n";
        return s;
    };

    SUBCASE("39 attributes") {
        std::vector<std::string> cut;
        for (const auto& l : lines)
            if (l.rfind("\"young\"", 0) != 0) cut.push_back(l);
        CHECK(testing::error_kind([&] { parse_text(join(cut)); }) == ErrorKind::Format);
    }
    SUBCASE("duplicate row") {
        auto dup = lines;
        dup.push_back(lines[1]);
        CHECK(testing::error_kind([&] { parse_text(join(dup)); }) == ErrorKind::Format);
    }
    SUBCASE("unknown label") {
        auto bad = lines;
        bad.push_back("\"tail\",\"A picture of a tail\",\"A picture of a person\",\"neutral\",\"template\"");
        CHECK(testing::error_kind([&] { parse_text(join(bad)); }) == ErrorKind::Format);
    }
    SUBCASE("contrary without neutral") {
        std::vector<std::string> cut;
        for (const auto& l : lines)
            if (!(l.rfind("\"male\"", 0) == 0 && l.find("\"neutral\"") != std::string::npos)) cut.push_back(l);
        CHECK(testing::error_kind([&] { parse_text(join(cut)); }) == ErrorKind::Format);
    }
    SUBCASE("wrong header") {
        auto bad = lines;
        bad[0] = "name,target,counter,method,provenance";
        CHECK(testing::error_kind([&] { parse_text(join(bad)); }) == ErrorKind::Format);
    }
    SUBCASE("short row reports its line") {
        auto bad = lines;
        bad[3] = "\"male\",\"x\"";
        try {
            parse_text(join(bad));
            FAIL("expected a format error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Format);
            CHECK(e.detail() == "line 4");
        }
    }
    SUBCASE("bad method") {
        auto bad = lines;
        bad[1].replace(bad[1].find("\"neutral\""), 9, "\"sideways\"");
        CHECK(testing::error_kind([&] { parse_text(join(bad)); }) == ErrorKind::Format);
    }
    SUBCASE("empty file") { CHECK(testing::error_kind([&] { parse_text(""); }) == ErrorKind::Format); }
}

TEST_CASE("custom prompts load from file") {
    std::string text = Catalog::defaults().emit();
    const std::string from = "\"A picture of a person with hat\"";
    text.replace(text.find(from), from.size(), "\"A picture of someone in a hat\"");
    testing::TempDir dir;
    testing::write_text(dir / "c.csv", "\xEF\xBB\xBF" + text);
    const Catalog c = Catalog::load(dir / "c.csv");
    CHECK(c.lookup("wearing hat").target_text == "A picture of someone in a hat");
    c.save(dir / "out.csv");
    CHECK(Catalog::load(dir / "out.csv") == c);
}

}
