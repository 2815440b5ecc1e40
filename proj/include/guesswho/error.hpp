#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guesswho {

/// Failure categories shared by every module. The service maps them onto
/// HTTP status codes; the Python bindings expose them as `GuessWhoError.kind`.
enum class ErrorKind {
    Validation,       ///< malformed user input (empty prompt, equal prompts, bad body)
    InvalidBoard,     ///< fewer than two images on a board
    Duplicate,        ///< repeated image reference on a board
    GameOver,         ///< turn submitted to a finished session
    CatalogMiss,      ///< unknown attribute name
    InvalidTarget,    ///< guess on a card that is not active
    Backend,          ///< encoder backend failure
    Decode,           ///< unreadable or corrupt image
    Format,           ///< malformed data file
    InsufficientData, ///< empty evaluation subset
    Pairing,          ///< mismatched attribute sets when comparing methods
    NotFound,         ///< unknown or expired session / card
    Conflict,         ///< request cannot be satisfied in the current state
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string detail = {})
        : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace guesswho
