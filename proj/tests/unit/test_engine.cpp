#include "guesswho/engine.hpp"
#include "guesswho/fixture_backend.hpp"
#include "guesswho/service.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace guesswho;

namespace {

std::size_t bit_of(std::string_view attribute) {
    const auto& labels = celeba_attributes();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (normalize_attribute(labels[i]) == attribute) return i;
    return labels.size();
}

/// Session over `refs` whose winner is `winner_id`.
GameSession session_with_winner(const std::vector<std::string>& refs, const std::string& winner_id,
                                int initial_score = 100) {
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        auto s = GameSession::create(refs, seed, initial_score);
        if (s.winner_id() == winner_id) return s;
    }
    throw std::runtime_error("no seed yields winner " + winner_id);
}

/// Fixture images whose "male" bit follows `signs` and whose other bits are all -1.
std::shared_ptr<FixtureBackend> male_board(const std::vector<int>& signs, std::vector<std::string>& refs) {
    std::vector<AttributeBits> rows;
    for (int s : signs) {
        auto bits = testing::all_bits(-1);
        bits[bit_of("male")] = static_cast<std::int8_t>(s);
        rows.push_back(bits);
    }
    auto images = testing::bits_images(rows);
    refs.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) refs.push_back("img" + std::to_string(i));
    return std::make_shared<FixtureBackend>(images, FixtureBackend::prompts_from_catalog(Catalog::defaults()));
}

BinaryPrediction pos() { return {Decision::Positive, 0.3, 0.1, 0.9}; }
BinaryPrediction neg() { return {Decision::Negative, 0.1, 0.3, 0.9}; }

class FailingBackend : public EncoderBackend {
public:
    std::string name() const override { return "failing"; }
    std::size_t embedding_dim() const override { return 1; }
    double logit_scale() const override { return 1.0; }
    Embedding embed_text(const std::string&) override { return Embedding{{1.0f}}; }
    Embedding embed_image(const std::string& ref) override { throw Error(ErrorKind::Decode, "broken", ref); }
};

} // namespace

TEST_SUITE("engine") {

TEST_CASE("create validates the board") {
    CHECK(testing::error_kind([] { GameSession::create({}, 1); }) == ErrorKind::InvalidBoard);
    CHECK(testing::error_kind([] { GameSession::create({"a"}, 1); }) == ErrorKind::InvalidBoard);
    CHECK(testing::error_kind([] { GameSession::create({"a", "b", "a"}, 1); }) == ErrorKind::Duplicate);
    CHECK(testing::error_kind([] { GameSession::create({"a", "b"}, 1, -1); }) == ErrorKind::Validation);
    auto s = GameSession::create({"a", "b"}, 0);
    CHECK(s.active_count() == 2);
    CHECK(s.score() == 100);
    CHECK(s.status() == SessionStatus::InProgress);
    CHECK(s.cards()[0].id == "1");
    CHECK(s.cards()[1].id == "2");
    CHECK(s.cards()[1].image_ref == "b");
}

TEST_CASE("same refs and seed give the same winner") {
    const auto refs = testing::board_refs();
    for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xFFFFFFFFFFFFull}) {
        CHECK(GameSession::create(refs, seed).winner_id() == GameSession::create(refs, seed).winner_id());
    }
    std::set<std::string> winners;
    for (std::uint64_t seed = 0; seed < 400; ++seed) winners.insert(GameSession::create(refs, seed).winner_id());
    CHECK(winners.size() > 50);
}

TEST_CASE("uniform_index and sampling") {
    std::mt19937_64 rng(7);
    std::vector<int> hist(6, 0);
    for (int i = 0; i < 60000; ++i) ++hist[uniform_index(rng, 6)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 600);
    CHECK(testing::error_kind([&] { uniform_index(rng, 0); }) == ErrorKind::Validation);

    const std::vector<std::string> items{"a", "b", "c", "d", "e"};
    const auto s = sample_without_replacement(items, 3, 9);
    CHECK(s.size() == 3);
    CHECK(std::set<std::string>(s.begin(), s.end()).size() == 3);
    CHECK(s == sample_without_replacement(items, 3, 9));
    CHECK(sample_without_replacement(items, 0, 9).empty());
    auto all = sample_without_replacement(items, 5, 1);
    std::sort(all.begin(), all.end());
    CHECK(all == items);
    CHECK(testing::error_kind([&] { sample_without_replacement(items, 6, 1); }) == ErrorKind::Conflict);
}

TEST_CASE("four-card male question discards the two mismatching cards") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, -1, -1, +1}, refs);
    auto s = session_with_winner(refs, "1");
    const auto& r = s.ask_question(FromList{"male"}, Catalog::defaults(), *backend);
    CHECK(r.discarded_ids == std::vector<std::string>{"2", "3"});
    CHECK(r.kept_ids == std::vector<std::string>{"1", "4"});
    CHECK(r.score_before == 100);
    CHECK(r.score_after == 98);
    CHECK(r.penalty == Penalty::None);
    CHECK(r.prompt_pair->target_text == "A picture of a man");
    CHECK(r.winner_prediction->positive());
    CHECK(s.active_count() == 2);
    CHECK(s.find_card("2")->status == CardStatus::Discarded);
    CHECK(s.status() == SessionStatus::InProgress);
}

TEST_CASE("question that discards nothing costs two extra points") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, +1, +1}, refs);
    auto s = GameSession::create(refs, 5);
    const auto& r = s.ask_question(FromList{"male"}, Catalog::defaults(), *backend);
    CHECK(r.discarded_ids.empty());
    CHECK(r.score_after == 100 - 3 - 2);
    CHECK(r.penalty == Penalty::NoDiscard);
}

TEST_CASE("question separating two cards wins by elimination") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, -1}, refs);
    for (const std::string winner : {"1", "2"}) {
        auto s = session_with_winner(refs, winner);
        const auto& r = s.ask_question(OnePrompt{"A picture of a male person"}, Catalog::defaults(), *backend);
        CHECK(r.kept_ids == std::vector<std::string>{winner});
        CHECK(r.score_after == 99);
        CHECK(s.status() == SessionStatus::WonByElimination);
        CHECK(s.snapshot().winner_id == winner);
        CHECK(testing::error_kind([&] { s.guess(winner); }) == ErrorKind::GameOver);
    }
}

TEST_CASE("two-prompt questions use the player's order") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, -1, +1}, refs);
    auto s = session_with_winner(refs, "2");
    const auto& r = s.ask_question(TwoPrompts{"A picture of a man", "A picture of a woman"}, Catalog::defaults(), *backend);
    CHECK(r.prompt_pair->method == PromptMethod::Contrary);
    CHECK_FALSE(r.winner_prediction->positive());
    CHECK(r.kept_ids == std::vector<std::string>{"2"});
    CHECK(testing::error_kind([&] {
        auto t = GameSession::create(refs, 1);
        t.ask_question(TwoPrompts{"same", " same "}, Catalog::defaults(), *backend);
    }) == ErrorKind::Validation);
}

TEST_CASE("correct guess with 2 of 24 remaining costs 12") {
    std::vector<std::string> refs;
    std::vector<int> signs(24, -1);
    signs[0] = +1;
    signs[1] = +1;
    auto backend = male_board(signs, refs);
    auto s = session_with_winner(refs, "2");
    const auto& q = s.ask_question(FromList{"male"}, Catalog::defaults(), *backend);
    CHECK(q.score_after == 98);
    const auto& g = s.guess("2");
    CHECK(g.score_before == 98);
    CHECK(g.score_after == 86);
    CHECK(g.penalty == Penalty::Guess);
    CHECK(*g.guess_correct);
    CHECK(s.status() == SessionStatus::WonByGuess);
}

TEST_CASE("guess on a full board costs 1") {
    std::vector<std::string> refs;
    for (int i = 0; i < 24; ++i) refs.push_back("r" + std::to_string(i));
    auto s = GameSession::create(refs, 3);
    const auto& g = s.guess(s.winner_id());
    CHECK(g.score_after == 99);
    CHECK(s.status() == SessionStatus::WonByGuess);
}

TEST_CASE("wrong guess marks the card and the game continues") {
    std::vector<std::string> refs{"a", "b", "c", "d"};
    auto s = session_with_winner(refs, "4");
    const auto& g = s.guess("1");
    CHECK_FALSE(*g.guess_correct);
    CHECK(g.score_after == 99);
    CHECK(g.kept_ids == std::vector<std::string>{"2", "3", "4"});
    CHECK(s.find_card("1")->status == CardStatus::GuessedWrong);
    CHECK(s.status() == SessionStatus::InProgress);
    CHECK(testing::error_kind([&] { s.guess("1"); }) == ErrorKind::InvalidTarget);
    CHECK(testing::error_kind([&] { s.guess("99"); }) == ErrorKind::InvalidTarget);
    s.guess("2");
    CHECK(s.score() == 99 - 2);
    s.guess("3");
    CHECK(s.score() == 97 - 2);
    CHECK(s.status() == SessionStatus::WonByElimination);
}

TEST_CASE("turns on a finished game fail") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, -1}, refs);
    auto s = GameSession::create(refs, 1);
    s.guess(s.winner_id());
    CHECK(testing::error_kind([&] { s.ask_question(FromList{"male"}, Catalog::defaults(), *backend); }) ==
          ErrorKind::GameOver);
}

TEST_CASE("failures leave the session unchanged") {
    auto s = GameSession::create({"a", "b", "c"}, 1);
    FailingBackend failing;
    const auto before = to_json(s.snapshot()).dump();
    CHECK(testing::error_kind([&] { s.ask_question(FromList{"male"}, Catalog::defaults(), failing); }) ==
          ErrorKind::Backend);
    CHECK(testing::error_kind([&] { s.ask_question(FromList{"tail"}, Catalog::defaults(), failing); }) ==
          ErrorKind::CatalogMiss);
    CHECK(testing::error_kind([&] { s.ask_question(OnePrompt{"  "}, Catalog::defaults(), failing); }) ==
          ErrorKind::Validation);
    CHECK(to_json(s.snapshot()).dump() == before);
}

TEST_CASE("snapshot hides the winner until the end") {
    std::vector<std::string> refs;
    auto backend = male_board({+1, -1, -1, +1}, refs);
    auto s = session_with_winner(refs, "1");
    auto v = s.snapshot();
    CHECK_FALSE(v.winner_id.has_value());
    CHECK(v.history.empty());
    CHECK(std::all_of(v.cards.begin(), v.cards.end(), [](const auto& c) { return c.status == CardStatus::Active; }));
    const auto& r = s.ask_question(FromList{"male"}, Catalog::defaults(), *backend);
    v = s.snapshot();
    CHECK_FALSE(v.winner_id.has_value());
    for (const auto& id : r.discarded_ids)
        CHECK(std::find_if(v.cards.begin(), v.cards.end(), [&](const auto& c) { return c.id == id; })->status ==
              CardStatus::Discarded);
    s.guess("1");
    CHECK(s.snapshot().winner_id == "1");
}

TEST_CASE("compute_elimination examples") {
    std::vector<CardPrediction> p{{"1", pos()}, {"2", neg()}, {"3", pos()}};
    auto e = compute_elimination(p, pos());
    CHECK(e.kept == std::vector<std::string>{"1", "3"});
    CHECK(e.discarded == std::vector<std::string>{"2"});

    std::vector<CardPrediction> same{{"1", neg()}, {"2", neg()}};
    CHECK(compute_elimination(same, neg()).discarded.empty());

    std::vector<CardPrediction> alone{{"1", neg()}, {"2", pos()}, {"3", pos()}};
    e = compute_elimination(alone, neg());
    CHECK(e.kept == std::vector<std::string>{"1"});
    CHECK(e.discarded == std::vector<std::string>{"2", "3"});
}

TEST_CASE("apply_scoring examples") {
    CHECK(apply_scoring(100, 14, 10, Action::Question, 24) == 86);
    CHECK(apply_scoring(86, 14, 0, Action::Question, 24) == 70);
    CHECK(apply_scoring(70, 2, 0, Action::Guess, 24) == 58);
    CHECK(apply_scoring(70, 24, 0, Action::Guess, 24) == 69);
    CHECK(apply_scoring(70, 5, 0, Action::Guess, 24) == 65);
    CHECK(apply_scoring(3, 10, 1, Action::Question, 24) == 0);
    CHECK(apply_scoring(0, 1, 0, Action::Guess, 24) == 0);
    CHECK(testing::error_kind([] { apply_scoring(10, 0, 0, Action::Question, 24); }) == ErrorKind::Validation);
    for (int remaining = 1; remaining < 24; ++remaining)
        CHECK(guess_penalty(24, remaining) >= guess_penalty(24, remaining + 1));
    CHECK(guess_penalty(24, 1) == 24);
}

TEST_CASE("randomized games keep the engine invariants") {
    auto backend = testing::board_backend();
    const Catalog catalog = Catalog::defaults();
    const auto all_refs = testing::board_refs();
    const auto attributes = catalog.list_attributes();

    auto play = [&](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const std::size_t size = 2 + uniform_index(rng, 23);
        auto s = GameSession::create(sample_without_replacement(all_refs, size, rng()), rng(),
                                     static_cast<int>(uniform_index(rng, 120)));
        std::string log;
        int turns = 0;
        while (!s.finished() && turns++ < 60) {
            std::set<std::string> active_before;
            for (const auto& c : s.cards())
                if (c.status == CardStatus::Active) active_before.insert(c.id);
            const int score_before = s.score();

            const auto choice = uniform_index(rng, 10);
            const TurnRecord* r = nullptr;
            if (choice == 0) {
                std::vector<std::string> active(active_before.begin(), active_before.end());
                r = &s.guess(active[uniform_index(rng, active.size())]);
            } else if (choice == 1) {
                const auto& a = attributes[uniform_index(rng, attributes.size())];
                r = &s.ask_question(OnePrompt{catalog.pair_for(a, PromptMethod::Neutral)->target_text}, catalog,
                                    *backend);
            } else {
                r = &s.ask_question(FromList{attributes[uniform_index(rng, attributes.size())]}, catalog, *backend);
            }

            CHECK(r->score_after <= score_before);
            CHECK(r->score_after >= 0);
            CHECK(s.score() == r->score_after);
            if (!r->guess_correct.value_or(false)) {
                const auto* winner = s.find_card(s.winner_id());
                CHECK(winner->status == CardStatus::Active);
            }
            if (r->prompt_pair) {
                std::set<std::string> kept(r->kept_ids.begin(), r->kept_ids.end());
                std::set<std::string> discarded(r->discarded_ids.begin(), r->discarded_ids.end());
                std::set<std::string> both;
                std::set_union(kept.begin(), kept.end(), discarded.begin(), discarded.end(),
                               std::inserter(both, both.end()));
                CHECK(both == active_before);
                CHECK(kept.size() + discarded.size() == active_before.size());
                CHECK(kept.count(s.winner_id()) == 1);
                CHECK((r->penalty == Penalty::NoDiscard) == discarded.empty());
                CHECK((s.status() == SessionStatus::WonByElimination) == (kept.size() == 1));
            }
            log += to_json(*r).dump() + "\n";
        }
        log += to_json(s.snapshot()).dump();
        return log;
    };

    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        CAPTURE(seed);
        const auto first = play(seed);
        CHECK(play(seed) == first);
    }
}

TEST_CASE("questioning with separating attributes terminates") {
    auto backend = testing::board_backend();
    const Catalog catalog = Catalog::defaults();
    const auto attributes = catalog.list_attributes();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = GameSession::create(testing::board_refs(), seed);
        for (const auto& a : attributes) {
            if (s.finished()) break;
            s.ask_question(OnePrompt{catalog.pair_for(a, PromptMethod::Neutral)->target_text}, catalog, *backend);
        }
        CHECK(s.status() == SessionStatus::WonByElimination);
        CHECK(s.active_count() == 1);
    }
}

}
