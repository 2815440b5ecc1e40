#pragma once

#include "guesswho/classifier.hpp"
#include "guesswho/engine.hpp"
#include "guesswho/error.hpp"
#include "guesswho/onnx_backend.hpp"
#include "guesswho/prompts.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace guesswho {

enum class BackendKind { Fixture, Model };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path image_directory;
    BackendKind backend = BackendKind::Fixture;
    std::filesystem::path fixture_images;  ///< image_id,bit1..bit40 CSV
    std::filesystem::path fixture_prompts; ///< optional; derived from the catalog when empty
    OnnxModelConfig model;
    std::filesystem::path catalog;         ///< optional; built-in catalog when empty
    std::filesystem::path static_dir;      ///< optional web client assets served at /
    int board_size = 24;
    int initial_score = GameSession::kDefaultInitialScore;
    std::chrono::seconds session_ttl{2 * 60 * 60};

    /// Throws Validation for bad values and missing paths.
    void validate() const;
};

/// Reads the JSON config file (all keys optional).
ServiceConfig load_service_config(const std::filesystem::path& path);
ServiceConfig service_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Applies GUESSWHO_* overrides; `getenv` is injectable for tests.
void apply_env_overrides(ServiceConfig& config,
                         const std::function<const char*(const char*)>& getenv = [](const char* k) {
                             return std::getenv(k);
                         });

/// Builds the configured backend, wrapped for caching and shared use.
std::shared_ptr<EncoderBackend> make_backend(const ServiceConfig& config, const Catalog& catalog);

/// Image files (jpg, jpeg, png, bmp) in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// JSON views. Session-level views never carry the winner while in progress.
nlohmann::json to_json(const Question& question);
nlohmann::json to_json(const TurnRecord& record);
nlohmann::json to_json(const PlayerView& view);
nlohmann::json to_json(const PromptPair& pair);
nlohmann::json to_json(const BinaryPrediction& prediction);

using Clock = std::function<std::chrono::steady_clock::time_point()>;

/// In-memory sessions with TTL eviction. Each entry carries its own mutex
/// so turns are serialized per session while sessions proceed in parallel.
class SessionStore {
public:
    struct Entry {
        std::mutex mutex;
        GameSession session;
        std::chrono::steady_clock::time_point created_at;

        Entry(GameSession s, std::chrono::steady_clock::time_point t) : session(std::move(s)), created_at(t) {}
    };

    explicit SessionStore(std::chrono::seconds ttl, Clock clock = std::chrono::steady_clock::now);

    /// Random 32-hex-digit id not currently in use.
    std::string new_id();

    /// Throws Conflict when the session id is empty or taken.
    std::shared_ptr<Entry> insert(GameSession session);

    /// Null for unknown or expired ids.
    std::shared_ptr<Entry> find(const std::string& id);

    std::size_t evict_expired();
    std::size_t size() const;

private:
    bool expired(const Entry& e, std::chrono::steady_clock::time_point now) const;

    std::chrono::seconds ttl_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mt19937_64 id_rng_;
};

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Game API over the session store. `handle` is the transport-independent
/// entry point; `serve` binds it to an HTTP listener.
///
///   POST /sessions                         {board_size?, seed?}
///   GET  /sessions/{id}
///   POST /sessions/{id}/questions          {mode, attribute?, text?, text_a?, text_b?}
///   POST /sessions/{id}/guess              {card_id}
///   GET  /attributes
///   GET  /cards/{session_id}/{card_id}/image
class GameService {
public:
    GameService(ServiceConfig config, Catalog catalog, std::shared_ptr<EncoderBackend> backend,
                Clock clock = std::chrono::steady_clock::now);

    HttpResponse handle(const HttpRequest& request);

    /// Blocks serving HTTP until `stop` is called. Throws Conflict when the
    /// address cannot be bound.
    void serve();
    /// Binds to `port` (0 picks a free one) and returns the bound port;
    /// call `listen_after_bind` to start serving.
    int bind(const std::string& host, int port);
    void listen_after_bind();
    void stop();

    SessionStore& sessions() noexcept { return store_; }
    const ServiceConfig& config() const noexcept { return config_; }

private:
    HttpResponse create_session(const nlohmann::json& body);
    HttpResponse get_session(const std::string& id);
    HttpResponse post_question(const std::string& id, const nlohmann::json& body);
    HttpResponse post_guess(const std::string& id, const nlohmann::json& body);
    HttpResponse get_attributes() const;
    HttpResponse get_card_image(const std::string& session_id, const std::string& card_id);

    std::shared_ptr<SessionStore::Entry> require_session(const std::string& id);

    ServiceConfig config_;
    Catalog catalog_;
    std::shared_ptr<EncoderBackend> backend_;
    std::vector<std::string> images_;
    SessionStore store_;
    std::mutex seed_mutex_;
    std::mt19937_64 seed_rng_;

    struct Server;
    std::shared_ptr<Server> server_;
};

/// HTTP status for an error kind.
int http_status(ErrorKind kind) noexcept;

/// {code, message, detail} error body.
HttpResponse error_response(int status, std::string_view code, const std::string& message,
                            const std::string& detail = {});

} // namespace guesswho
