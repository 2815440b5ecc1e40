#include "guesswho/engine.hpp"

#include "guesswho/error.hpp"

#include <algorithm>
#include <set>

namespace guesswho {

std::string_view to_string(CardStatus status) noexcept {
    switch (status) {
    case CardStatus::Active: return "active";
    case CardStatus::Discarded: return "discarded";
    case CardStatus::GuessedWrong: return "guessed_wrong";
    }
    return "active";
}

std::string_view to_string(SessionStatus status) noexcept {
    switch (status) {
    case SessionStatus::InProgress: return "in_progress";
    case SessionStatus::WonByElimination: return "won_by_elimination";
    case SessionStatus::WonByGuess: return "won_by_guess";
    }
    return "in_progress";
}

std::string_view to_string(Penalty penalty) noexcept {
    switch (penalty) {
    case Penalty::None: return "none";
    case Penalty::NoDiscard: return "no_discard";
    case Penalty::Guess: return "guess";
    }
    return "none";
}

PromptPair to_prompt_pair(const Question& question, const Catalog& catalog) {
    struct Visitor {
        const Catalog& catalog;
        PromptPair operator()(const FromList& q) const { return catalog.lookup(q.attribute); }
        PromptPair operator()(const OnePrompt& q) const { return neutral_pair(q.text); }
        PromptPair operator()(const TwoPrompts& q) const { return contrary_pair(q.text_a, q.text_b); }
    };
    return std::visit(Visitor{catalog}, question);
}

Elimination compute_elimination(std::span<const CardPrediction> predictions,
                                const BinaryPrediction& winner_prediction) {
    Elimination out;
    for (const auto& p : predictions) {
        auto& side = p.prediction.decision == winner_prediction.decision ? out.kept : out.discarded;
        side.push_back(p.card_id);
    }
    return out;
}

int guess_penalty(int initial_board_size, int remaining) {
    if (remaining < 1) throw Error(ErrorKind::Validation, "remaining card count must be at least 1");
    return (initial_board_size + remaining - 1) / remaining;
}

int apply_scoring(int score, int remaining, int discarded_count, Action action, int initial_board_size) {
    if (remaining < 1) throw Error(ErrorKind::Validation, "remaining card count must be at least 1");
    int next = score;
    if (action == Action::Question) {
        next -= remaining;
        if (discarded_count == 0) next -= GameSession::kNoDiscardPenalty;
    } else {
        next -= guess_penalty(initial_board_size, remaining);
    }
    return std::max(next, 0);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::Validation, "cannot draw from an empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound + 1) % bound;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw > limit);
    return static_cast<std::size_t>(draw % bound);
}

std::vector<std::string> sample_without_replacement(std::vector<std::string> items, std::size_t count,
                                                    std::uint64_t seed) {
    if (count > items.size()) throw Error(ErrorKind::Conflict, "not enough items to sample from");
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, items.size() - i);
        std::swap(items[i], items[j]);
    }
    items.resize(count);
    return items;
}

GameSession GameSession::create(std::vector<std::string> image_refs, std::uint64_t rng_seed,
                                int initial_score, std::string session_id) {
    if (image_refs.size() < 2)
        throw Error(ErrorKind::InvalidBoard, "a board needs at least 2 images, got " +
                                                 std::to_string(image_refs.size()));
    if (initial_score < 0) throw Error(ErrorKind::Validation, "initial score must be non-negative");
    std::set<std::string> seen;
    for (const auto& ref : image_refs)
        if (!seen.insert(ref).second) throw Error(ErrorKind::Duplicate, "duplicate image on board", ref);

    GameSession s;
    s.session_id_ = std::move(session_id);
    s.cards_.reserve(image_refs.size());
    for (std::size_t i = 0; i < image_refs.size(); ++i)
        s.cards_.push_back({std::to_string(i + 1), std::move(image_refs[i]), CardStatus::Active});
    std::mt19937_64 rng(rng_seed);
    s.winner_id_ = s.cards_[uniform_index(rng, s.cards_.size())].id;
    s.score_ = initial_score;
    s.initial_score_ = initial_score;
    return s;
}

void GameSession::require_in_progress() const {
    if (finished()) throw Error(ErrorKind::GameOver, "the game is already over");
}

std::size_t GameSession::active_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(cards_.begin(), cards_.end(),
                                                  [](const auto& c) { return c.status == CardStatus::Active; }));
}

const ImageCard* GameSession::find_card(std::string_view card_id) const noexcept {
    for (const auto& c : cards_)
        if (c.id == card_id) return &c;
    return nullptr;
}

ImageCard* GameSession::find_card_mut(std::string_view card_id) noexcept {
    return const_cast<ImageCard*>(std::as_const(*this).find_card(card_id));
}

const TurnRecord& GameSession::ask_question(const Question& question, const Catalog& catalog,
                                            EncoderBackend& backend) {
    require_in_progress();
    PromptPair pair = to_prompt_pair(question, catalog);

    std::vector<const ImageCard*> active;
    std::vector<std::string> refs;
    for (const auto& c : cards_) {
        if (c.status != CardStatus::Active) continue;
        active.push_back(&c);
        refs.push_back(c.image_ref);
    }

    auto batch = predict_batch(backend, refs, pair, refs.size());
    std::vector<CardPrediction> predictions;
    std::optional<BinaryPrediction> winner_prediction;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].ok())
            throw Error(ErrorKind::Backend, "classification failed: " + batch[i].error, active[i]->image_ref);
        predictions.push_back({active[i]->id, *batch[i].prediction});
        if (active[i]->id == winner_id_) winner_prediction = *batch[i].prediction;
    }
    if (!winner_prediction) throw Error(ErrorKind::Backend, "winner card missing from the active set");

    const Elimination split = compute_elimination(predictions, *winner_prediction);
    const int kept = static_cast<int>(split.kept.size());
    const int discarded = static_cast<int>(split.discarded.size());

    TurnRecord record;
    record.action = std::visit([](const auto& q) -> TurnAction { return q; }, question);
    record.prompt_pair = std::move(pair);
    record.winner_prediction = winner_prediction;
    record.kept_ids = split.kept;
    record.discarded_ids = split.discarded;
    record.score_before = score_;
    record.score_after = apply_scoring(score_, kept, discarded, Action::Question, initial_board_size());
    record.penalty = discarded == 0 ? Penalty::NoDiscard : Penalty::None;

    for (const auto& id : split.discarded) find_card_mut(id)->status = CardStatus::Discarded;
    score_ = record.score_after;
    if (kept == 1) status_ = SessionStatus::WonByElimination;
    history_.push_back(std::move(record));
    return history_.back();
}

const TurnRecord& GameSession::guess(std::string_view card_id) {
    require_in_progress();
    ImageCard* card = find_card_mut(card_id);
    if (!card) throw Error(ErrorKind::InvalidTarget, "unknown card '" + std::string(card_id) + "'");
    if (card->status != CardStatus::Active)
        throw Error(ErrorKind::InvalidTarget, "card '" + std::string(card_id) + "' is not active");

    const int remaining = static_cast<int>(active_count());
    TurnRecord record;
    record.action = Guess{std::string(card_id)};
    record.score_before = score_;
    record.score_after = apply_scoring(score_, remaining, 0, Action::Guess, initial_board_size());
    record.penalty = Penalty::Guess;
    record.guess_correct = card->id == winner_id_;

    if (*record.guess_correct) {
        status_ = SessionStatus::WonByGuess;
    } else {
        card->status = CardStatus::GuessedWrong;
        // Only the winner left on the board.
        if (active_count() == 1) status_ = SessionStatus::WonByElimination;
    }
    for (const auto& c : cards_)
        if (c.status == CardStatus::Active) record.kept_ids.push_back(c.id);
    score_ = record.score_after;
    history_.push_back(std::move(record));
    return history_.back();
}

PlayerView GameSession::snapshot() const {
    PlayerView view;
    view.session_id = session_id_;
    for (const auto& c : cards_) view.cards.push_back({c.id, c.status});
    view.score = score_;
    view.initial_score = initial_score_;
    view.initial_board_size = initial_board_size();
    view.status = status_;
    view.history = history_;
    if (finished()) view.winner_id = winner_id_;
    return view;
}

} // namespace guesswho
