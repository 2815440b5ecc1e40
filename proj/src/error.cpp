#include "guesswho/error.hpp"

namespace guesswho {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::InvalidBoard: return "invalid_board";
    case ErrorKind::Duplicate: return "duplicate";
    case ErrorKind::GameOver: return "game_over";
    case ErrorKind::CatalogMiss: return "catalog_miss";
    case ErrorKind::InvalidTarget: return "invalid_target";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Decode: return "decode";
    case ErrorKind::Format: return "format";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Pairing: return "pairing";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Conflict: return "conflict";
    }
    return "unknown";
}

} // namespace guesswho
