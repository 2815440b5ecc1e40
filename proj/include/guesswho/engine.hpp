#pragma once

#include "guesswho/classifier.hpp"
#include "guesswho/prompts.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace guesswho {

enum class CardStatus { Active, Discarded, GuessedWrong };
enum class SessionStatus { InProgress, WonByElimination, WonByGuess };
enum class Penalty { None, NoDiscard, Guess };
enum class Action { Question, Guess };

std::string_view to_string(CardStatus status) noexcept;
std::string_view to_string(SessionStatus status) noexcept;
std::string_view to_string(Penalty penalty) noexcept;

struct ImageCard {
    std::string id;
    std::string image_ref;
    CardStatus status = CardStatus::Active;
};

/// Pre-set question from the attribute catalog.
struct FromList {
    std::string attribute;
};

/// Player caption confronted with the neutral caption.
struct OnePrompt {
    std::string text;
};

/// Two player captions of opposite meaning.
struct TwoPrompts {
    std::string text_a;
    std::string text_b;
};

using Question = std::variant<FromList, OnePrompt, TwoPrompts>;

/// Direct pick of the winner.
struct Guess {
    std::string card_id;
};

using TurnAction = std::variant<FromList, OnePrompt, TwoPrompts, Guess>;

/// Builds the prompt pair a question stands for. Throws Validation or CatalogMiss.
PromptPair to_prompt_pair(const Question& question, const Catalog& catalog);

struct TurnRecord {
    TurnAction action;
    std::optional<PromptPair> prompt_pair;              ///< absent for guesses
    std::optional<BinaryPrediction> winner_prediction;  ///< absent for guesses
    std::vector<std::string> kept_ids;
    std::vector<std::string> discarded_ids;
    int score_before = 0;
    int score_after = 0;
    Penalty penalty = Penalty::None;
    std::optional<bool> guess_correct;                  ///< guesses only
};

struct CardPrediction {
    std::string card_id;
    BinaryPrediction prediction;
};

struct Elimination {
    std::vector<std::string> kept;
    std::vector<std::string> discarded;
};

/// Keeps the cards whose decision matches the winner's, preserving input order.
Elimination compute_elimination(std::span<const CardPrediction> predictions,
                                const BinaryPrediction& winner_prediction);

/// Score after one turn, clamped at zero.
///
/// Questions subtract the number of cards still active after elimination and
/// two more points when nothing was discarded. Guesses subtract
/// ceil(initial_board_size / remaining), where `remaining` is the active count
/// at the moment of the guess.
int apply_scoring(int score, int remaining, int discarded_count, Action action, int initial_board_size);

/// Guess penalty alone: ceil(initial_board_size / remaining).
int guess_penalty(int initial_board_size, int remaining);

struct CardView {
    std::string id;
    CardStatus status = CardStatus::Active;
};

/// Everything a player may see. `winner_id` is only filled once the game ends.
struct PlayerView {
    std::string session_id;
    std::vector<CardView> cards;
    int score = 0;
    int initial_score = 0;
    int initial_board_size = 0;
    SessionStatus status = SessionStatus::InProgress;
    std::vector<TurnRecord> history;
    std::optional<std::string> winner_id;
};

/// One game: a board of cards, a hidden winner and a score ledger.
/// Not thread-safe; callers serialize turns per session.
class GameSession {
public:
    static constexpr int kDefaultInitialScore = 100;
    static constexpr int kNoDiscardPenalty = 2;

    /// Throws InvalidBoard for fewer than two refs, Duplicate for repeats.
    /// The winner is drawn uniformly from the board with `rng_seed`.
    static GameSession create(std::vector<std::string> image_refs, std::uint64_t rng_seed,
                              int initial_score = kDefaultInitialScore, std::string session_id = {});

    /// Classifies every active card (winner included) in one batch and
    /// discards those whose answer differs from the winner's. On a backend
    /// failure the session is left untouched.
    const TurnRecord& ask_question(const Question& question, const Catalog& catalog, EncoderBackend& backend);

    /// Correct guesses end the game; wrong guesses mark the card and continue.
    const TurnRecord& guess(std::string_view card_id);

    PlayerView snapshot() const;

    const std::string& session_id() const noexcept { return session_id_; }
    const std::vector<ImageCard>& cards() const noexcept { return cards_; }
    const std::vector<TurnRecord>& history() const noexcept { return history_; }
    int score() const noexcept { return score_; }
    int initial_score() const noexcept { return initial_score_; }
    int initial_board_size() const noexcept { return static_cast<int>(cards_.size()); }
    SessionStatus status() const noexcept { return status_; }
    bool finished() const noexcept { return status_ != SessionStatus::InProgress; }
    std::size_t active_count() const noexcept;
    const ImageCard* find_card(std::string_view card_id) const noexcept;

    /// Hidden from players; exposed for tests, tooling and the service's
    /// end-of-game reveal.
    const std::string& winner_id() const noexcept { return winner_id_; }

private:
    GameSession() = default;

    void require_in_progress() const;
    ImageCard* find_card_mut(std::string_view card_id) noexcept;

    std::string session_id_;
    std::vector<ImageCard> cards_;
    std::string winner_id_;
    int score_ = kDefaultInitialScore;
    int initial_score_ = kDefaultInitialScore;
    SessionStatus status_ = SessionStatus::InProgress;
    std::vector<TurnRecord> history_;
};

/// Uniform index in [0, n) by rejection sampling; portable across standard
/// libraries, unlike std::uniform_int_distribution.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

/// `count` distinct items drawn uniformly with a seeded partial shuffle.
std::vector<std::string> sample_without_replacement(std::vector<std::string> items, std::size_t count,
                                                    std::uint64_t seed);

} // namespace guesswho
