#include "guesswho/service.hpp"

#include "guesswho/csv.hpp"
#include "guesswho/error.hpp"
#include "guesswho/fixture_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace guesswho {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

BackendKind parse_backend_kind(std::string_view text) {
    const std::string lower = text::to_lower(text::trim(text));
    if (lower == "fixture") return BackendKind::Fixture;
    if (lower == "model") return BackendKind::Model;
    throw Error(ErrorKind::Validation, "unknown backend '" + std::string(text) + "'", "expected fixture or model");
}

int parse_int(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(std::string(value), &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Validation, std::string(key) + " must be an integer", std::string(value));
    }
}

void require_exists(const fs::path& p, std::string_view what, bool directory) {
    std::error_code ec;
    const bool ok = directory ? fs::is_directory(p, ec) : fs::is_regular_file(p, ec);
    if (p.empty() || !ok) throw Error(ErrorKind::Validation, std::string(what) + " not found", p.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// splitmix64 step; decorrelates the board seed from the winner seed.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::string> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto next = path.find('/', pos);
        const auto end = next == std::string_view::npos ? path.size() : next;
        if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

std::string content_type_for(const fs::path& p) {
    std::string ext = text::to_lower(p.extension().string());
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".png") return "image/png";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".ico") return "image/x-icon";
    return "application/octet-stream";
}

HttpResponse json_response(int status, const json& body) {
    HttpResponse r;
    r.status = status;
    r.body = body.dump();
    return r;
}

std::string string_field(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null())
        throw Error(ErrorKind::Validation, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw Error(ErrorKind::Validation, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

json action_json(const TurnAction& action) {
    return std::visit(
        [](const auto& a) -> json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, FromList>) return {{"mode", "from_list"}, {"attribute", a.attribute}};
            else if constexpr (std::is_same_v<T, OnePrompt>) return {{"mode", "one_prompt"}, {"text", a.text}};
            else if constexpr (std::is_same_v<T, TwoPrompts>)
                return {{"mode", "two_prompts"}, {"text_a", a.text_a}, {"text_b", a.text_b}};
            else return {{"mode", "guess"}, {"card_id", a.card_id}};
        },
        action);
}

Question parse_question(const json& body) {
    const std::string mode = string_field(body, "mode");
    if (mode == "from_list") return FromList{string_field(body, "attribute")};
    if (mode == "one_prompt") return OnePrompt{string_field(body, "text")};
    if (mode == "two_prompts") return TwoPrompts{string_field(body, "text_a"), string_field(body, "text_b")};
    throw Error(ErrorKind::Validation, "unknown question mode '" + mode + "'",
                "expected from_list, one_prompt or two_prompts");
}

json parse_body(const std::string& body) {
    if (text::trim(body).empty()) return json::object();
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::Validation, "request body is not valid JSON");
    if (!doc.is_object()) throw Error(ErrorKind::Validation, "request body must be a JSON object");
    return doc;
}

} // namespace

void ServiceConfig::validate() const {
    if (board_size < 2) throw Error(ErrorKind::Validation, "board_size must be at least 2", std::to_string(board_size));
    if (initial_score < 0) throw Error(ErrorKind::Validation, "initial_score must be non-negative");
    if (port < 0 || port > 65535) throw Error(ErrorKind::Validation, "port out of range", std::to_string(port));
    if (session_ttl.count() <= 0) throw Error(ErrorKind::Validation, "session_ttl must be positive");
    require_exists(image_directory, "image_directory", true);
    if (backend == BackendKind::Fixture) {
        require_exists(fixture_images, "fixture_images", false);
        if (!fixture_prompts.empty()) require_exists(fixture_prompts, "fixture_prompts", false);
    } else {
        require_exists(model.image_model, "image_model", false);
        require_exists(model.text_model, "text_model", false);
        require_exists(model.vocab, "vocab", false);
        require_exists(model.merges, "merges", false);
    }
    if (!catalog.empty()) require_exists(catalog, "catalog", false);
    if (!static_dir.empty()) require_exists(static_dir, "static_dir", true);
}

ServiceConfig service_config_from_json(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw Error(ErrorKind::Validation, "config must be a JSON object");
    ServiceConfig c;
    try {
        auto str = [&](const char* key) { return doc.at(key).get<std::string>(); };
        if (doc.contains("host")) c.host = str("host");
        if (doc.contains("port")) c.port = doc.at("port").get<int>();
        if (doc.contains("image_directory")) c.image_directory = resolve(base_dir, str("image_directory"));
        if (doc.contains("backend")) c.backend = parse_backend_kind(str("backend"));
        if (doc.contains("fixture_images")) c.fixture_images = resolve(base_dir, str("fixture_images"));
        if (doc.contains("fixture_prompts")) c.fixture_prompts = resolve(base_dir, str("fixture_prompts"));
        if (doc.contains("model_dir")) c.model = OnnxModelConfig::from_directory(resolve(base_dir, str("model_dir")));
        if (doc.contains("image_model")) c.model.image_model = resolve(base_dir, str("image_model"));
        if (doc.contains("text_model")) c.model.text_model = resolve(base_dir, str("text_model"));
        if (doc.contains("vocab")) c.model.vocab = resolve(base_dir, str("vocab"));
        if (doc.contains("merges")) c.model.merges = resolve(base_dir, str("merges"));
        if (doc.contains("onnxruntime_library"))
            c.model.runtime_library = resolve(base_dir, str("onnxruntime_library"));
        if (doc.contains("logit_scale")) c.model.logit_scale = doc.at("logit_scale").get<double>();
        if (doc.contains("intra_op_threads")) c.model.intra_op_threads = doc.at("intra_op_threads").get<int>();
        if (doc.contains("catalog")) c.catalog = resolve(base_dir, str("catalog"));
        if (doc.contains("static_dir")) c.static_dir = resolve(base_dir, str("static_dir"));
        if (doc.contains("board_size")) c.board_size = doc.at("board_size").get<int>();
        if (doc.contains("initial_score")) c.initial_score = doc.at("initial_score").get<int>();
        if (doc.contains("session_ttl_seconds"))
            c.session_ttl = std::chrono::seconds(doc.at("session_ttl_seconds").get<std::int64_t>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("bad config value: ") + e.what());
    }
    return c;
}

ServiceConfig load_service_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot open config file", path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::Validation, "config file is not valid JSON", path.string());
    return service_config_from_json(doc, path.parent_path());
}

void apply_env_overrides(ServiceConfig& c, const std::function<const char*(const char*)>& getenv) {
    auto get = [&](const char* key) -> std::optional<std::string> {
        const char* v = getenv(key);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    };
    if (auto v = get("GUESSWHO_HOST")) c.host = *v;
    if (auto v = get("GUESSWHO_PORT")) c.port = parse_int("GUESSWHO_PORT", *v);
    if (auto v = get("GUESSWHO_IMAGE_DIR")) c.image_directory = *v;
    if (auto v = get("GUESSWHO_BACKEND")) c.backend = parse_backend_kind(*v);
    if (auto v = get("GUESSWHO_FIXTURE_IMAGES")) c.fixture_images = *v;
    if (auto v = get("GUESSWHO_FIXTURE_PROMPTS")) c.fixture_prompts = *v;
    if (auto v = get("GUESSWHO_MODEL_DIR")) {
        const auto runtime = c.model.runtime_library;
        const auto scale = c.model.logit_scale;
        c.model = OnnxModelConfig::from_directory(*v);
        c.model.runtime_library = runtime;
        c.model.logit_scale = scale;
    }
    if (auto v = get("GUESSWHO_CATALOG")) c.catalog = *v;
    if (auto v = get("GUESSWHO_STATIC_DIR")) c.static_dir = *v;
    if (auto v = get("GUESSWHO_BOARD_SIZE")) c.board_size = parse_int("GUESSWHO_BOARD_SIZE", *v);
    if (auto v = get("GUESSWHO_INITIAL_SCORE")) c.initial_score = parse_int("GUESSWHO_INITIAL_SCORE", *v);
    if (auto v = get("GUESSWHO_SESSION_TTL")) c.session_ttl = std::chrono::seconds(parse_int("GUESSWHO_SESSION_TTL", *v));
}

std::shared_ptr<EncoderBackend> make_backend(const ServiceConfig& config, const Catalog& catalog) {
    std::shared_ptr<EncoderBackend> inner;
    if (config.backend == BackendKind::Fixture) {
        std::ifstream in(config.fixture_images);
        if (!in) throw Error(ErrorKind::Validation, "cannot open fixture_images", config.fixture_images.string());
        auto images = FixtureBackend::parse_images(in);
        std::map<std::string, PromptIndex> prompts;
        if (config.fixture_prompts.empty()) {
            prompts = FixtureBackend::prompts_from_catalog(catalog);
        } else {
            std::ifstream pin(config.fixture_prompts);
            if (!pin) throw Error(ErrorKind::Validation, "cannot open fixture_prompts", config.fixture_prompts.string());
            prompts = FixtureBackend::parse_prompts(pin);
        }
        inner = std::make_shared<FixtureBackend>(std::move(images), std::move(prompts));
    } else {
        inner = std::make_shared<OnnxClipBackend>(config.model, [](const std::string& msg) {
            std::fprintf(stderr, "warning: %s\n", msg.c_str());
        });
    }
    return make_shareable(std::make_shared<CachingBackend>(std::move(inner)));
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = text::to_lower(entry.path().extension().string());
        if (ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp") out.push_back(entry.path());
    }
    if (ec) throw Error(ErrorKind::Validation, "cannot list image directory", dir.string());
    std::sort(out.begin(), out.end());
    return out;
}

json to_json(const PromptPair& pair) {
    return {{"target_text", pair.target_text}, {"counter_text", pair.counter_text},
            {"method", std::string(to_string(pair.method))}};
}

json to_json(const BinaryPrediction& p) {
    return {{"decision", std::string(to_string(p.decision))},
            {"score_target", p.score_target},
            {"score_counter", p.score_counter},
            {"confidence", p.confidence}};
}

json to_json(const Question& question) {
    return std::visit([](const auto& q) { return action_json(TurnAction{q}); }, question);
}

json to_json(const TurnRecord& r) {
    json out = action_json(r.action);
    out["action"] = std::holds_alternative<Guess>(r.action) ? "guess" : "question";
    if (r.prompt_pair) out["prompt_pair"] = to_json(*r.prompt_pair);
    // Yes/no only; raw winner similarities stay private.
    if (r.winner_prediction) out["answer"] = r.winner_prediction->positive();
    out["kept_ids"] = r.kept_ids;
    out["discarded_ids"] = r.discarded_ids;
    out["score_before"] = r.score_before;
    out["score_after"] = r.score_after;
    out["penalty"] = std::string(to_string(r.penalty));
    if (r.guess_correct) out["guess_correct"] = *r.guess_correct;
    return out;
}

json to_json(const PlayerView& v) {
    json cards = json::array();
    for (const auto& c : v.cards)
        cards.push_back({{"id", c.id},
                         {"status", std::string(to_string(c.status))},
                         {"image_url", "/cards/" + v.session_id + "/" + c.id + "/image"}});
    json history = json::array();
    for (const auto& r : v.history) history.push_back(to_json(r));
    json out = {{"session_id", v.session_id},
                {"cards", std::move(cards)},
                {"score", v.score},
                {"initial_score", v.initial_score},
                {"initial_board_size", v.initial_board_size},
                {"status", std::string(to_string(v.status))},
                {"history", std::move(history)}};
    if (v.status != SessionStatus::InProgress && v.winner_id) out["winner_id"] = *v.winner_id;
    return out;
}

SessionStore::SessionStore(std::chrono::seconds ttl, Clock clock)
    : ttl_(ttl), clock_(std::move(clock)), id_rng_(std::random_device{}()) {}

std::string SessionStore::new_id() {
    std::lock_guard lock(mutex_);
    for (;;) {
        std::string id = hex64(id_rng_()) + hex64(id_rng_());
        if (!sessions_.count(id)) return id;
    }
}

std::shared_ptr<SessionStore::Entry> SessionStore::insert(GameSession session) {
    const std::string id = session.session_id();
    if (id.empty()) throw Error(ErrorKind::Conflict, "session id is empty");
    std::lock_guard lock(mutex_);
    auto entry = std::make_shared<Entry>(std::move(session), clock_());
    if (!sessions_.emplace(id, entry).second) throw Error(ErrorKind::Conflict, "session id already in use", id);
    return entry;
}

bool SessionStore::expired(const Entry& e, std::chrono::steady_clock::time_point now) const {
    return now - e.created_at >= ttl_;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    if (expired(*it->second, clock_())) {
        sessions_.erase(it);
        return nullptr;
    }
    return it->second;
}

std::size_t SessionStore::evict_expired() {
    std::lock_guard lock(mutex_);
    const auto now = clock_();
    return std::erase_if(sessions_, [&](const auto& kv) { return expired(*kv.second, now); });
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

int http_status(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::GameOver:
    case ErrorKind::Conflict:
    case ErrorKind::InsufficientData: return 409;
    case ErrorKind::Backend:
    case ErrorKind::Decode: return 502;
    default: return 400;
    }
}

HttpResponse error_response(int status, std::string_view code, const std::string& message, const std::string& detail) {
    return json_response(status, {{"code", std::string(code)}, {"message", message}, {"detail", detail}});
}

struct GameService::Server {
    httplib::Server http;
};

GameService::GameService(ServiceConfig config, Catalog catalog, std::shared_ptr<EncoderBackend> backend, Clock clock)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      backend_(std::move(backend)),
      store_(config_.session_ttl, std::move(clock)),
      seed_rng_(std::random_device{}()) {
    if (!backend_) throw Error(ErrorKind::Validation, "service needs a backend");
    if (config_.board_size < 2)
        throw Error(ErrorKind::Validation, "board_size must be at least 2", std::to_string(config_.board_size));
    for (const auto& p : list_images(config_.image_directory)) images_.push_back(p.string());
}

std::shared_ptr<SessionStore::Entry> GameService::require_session(const std::string& id) {
    auto entry = store_.find(id);
    if (!entry) throw Error(ErrorKind::NotFound, "unknown or expired session", id);
    return entry;
}

HttpResponse GameService::create_session(const json& body) {
    int board_size = config_.board_size;
    if (auto it = body.find("board_size"); it != body.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw Error(ErrorKind::Validation, "board_size must be an integer");
        board_size = it->get<int>();
    }
    if (board_size < 2) throw Error(ErrorKind::Validation, "board_size must be at least 2", std::to_string(board_size));

    std::uint64_t seed = 0;
    if (auto it = body.find("seed"); it != body.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw Error(ErrorKind::Validation, "seed must be an integer");
        seed = it->is_number_unsigned() ? it->get<std::uint64_t>() : static_cast<std::uint64_t>(it->get<std::int64_t>());
    } else {
        std::lock_guard lock(seed_mutex_);
        seed = seed_rng_();
    }

    if (images_.size() < static_cast<std::size_t>(board_size))
        throw Error(ErrorKind::Conflict, "not enough images for the requested board",
                    std::to_string(images_.size()) + " available, " + std::to_string(board_size) + " requested");

    store_.evict_expired();
    auto board = sample_without_replacement(images_, static_cast<std::size_t>(board_size), seed);
    auto session = GameSession::create(std::move(board), mix(seed), config_.initial_score, store_.new_id());
    auto entry = store_.insert(std::move(session));
    std::lock_guard lock(entry->mutex);
    return json_response(201, to_json(entry->session.snapshot()));
}

HttpResponse GameService::get_session(const std::string& id) {
    auto entry = require_session(id);
    std::lock_guard lock(entry->mutex);
    return json_response(200, to_json(entry->session.snapshot()));
}

HttpResponse GameService::post_question(const std::string& id, const json& body) {
    auto entry = require_session(id);
    const Question question = parse_question(body);
    std::lock_guard lock(entry->mutex);
    const TurnRecord& record = entry->session.ask_question(question, catalog_, *backend_);
    json out = to_json(record);
    out["session"] = to_json(entry->session.snapshot());
    return json_response(200, out);
}

HttpResponse GameService::post_guess(const std::string& id, const json& body) {
    auto entry = require_session(id);
    const std::string card_id = string_field(body, "card_id");
    std::lock_guard lock(entry->mutex);
    const TurnRecord& record = entry->session.guess(card_id);
    json out = to_json(record);
    out["session"] = to_json(entry->session.snapshot());
    return json_response(200, out);
}

HttpResponse GameService::get_attributes() const {
    json items = json::array();
    for (const auto& name : catalog_.list_attributes())
        items.push_back({{"name", name}, {"negation_warning", has_negation(name)}});
    return json_response(200, {{"attributes", std::move(items)}});
}

HttpResponse GameService::get_card_image(const std::string& session_id, const std::string& card_id) {
    auto entry = require_session(session_id);
    std::string ref;
    {
        std::lock_guard lock(entry->mutex);
        const ImageCard* card = entry->session.find_card(card_id);
        if (!card) throw Error(ErrorKind::NotFound, "unknown card", card_id);
        ref = card->image_ref;
    }
    std::ifstream in(ref, std::ios::binary);
    if (!in) throw Error(ErrorKind::NotFound, "card image unavailable", card_id);
    HttpResponse r;
    r.content_type = content_type_for(ref);
    r.body.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
}

HttpResponse GameService::handle(const HttpRequest& request) {
    const auto parts = split_path(request.path);
    const std::string& m = request.method;
    auto method_not_allowed = [] { return error_response(405, "method_not_allowed", "method not allowed"); };
    try {
        if (!parts.empty() && parts[0] == "sessions") {
            if (parts.size() == 1) return m == "POST" ? create_session(parse_body(request.body)) : method_not_allowed();
            if (parts.size() == 2) return m == "GET" ? get_session(parts[1]) : method_not_allowed();
            if (parts.size() == 3 && parts[2] == "questions")
                return m == "POST" ? post_question(parts[1], parse_body(request.body)) : method_not_allowed();
            if (parts.size() == 3 && parts[2] == "guess")
                return m == "POST" ? post_guess(parts[1], parse_body(request.body)) : method_not_allowed();
        } else if (parts.size() == 1 && parts[0] == "attributes") {
            return m == "GET" ? get_attributes() : method_not_allowed();
        } else if (parts.size() == 4 && parts[0] == "cards" && parts[3] == "image") {
            return m == "GET" ? get_card_image(parts[1], parts[2]) : method_not_allowed();
        } else if (!config_.static_dir.empty() && m == "GET") {
            if (std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p == ".." || p == "."; }))
                return error_response(404, "not_found", "no such route");
            fs::path file = config_.static_dir;
            for (const auto& p : parts) file /= p;
            std::error_code ec;
            if (parts.empty() || fs::is_directory(file, ec)) file /= "index.html";
            std::ifstream in(file, std::ios::binary);
            if (in) {
                HttpResponse r;
                r.content_type = content_type_for(file);
                r.body.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
                return r;
            }
        }
        return error_response(404, "not_found", "no such route", request.path);
    } catch (const Error& e) {
        return error_response(http_status(e.kind()), to_string(e.kind()), e.what(), e.detail());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

int GameService::bind(const std::string& host, int port) {
    if (!server_) {
        server_ = std::make_shared<Server>();
        auto route = [this](const httplib::Request& req, httplib::Response& res) {
            HttpResponse out = handle({req.method, req.path, req.body});
            res.status = out.status;
            res.set_content(out.body, out.content_type);
        };
        server_->http.Get(".*", route);
        server_->http.Post(".*", route);
        server_->http.Put(".*", route);
        server_->http.Delete(".*", route);
        server_->http.Patch(".*", route);
    }
    const int bound = port == 0 ? server_->http.bind_to_any_port(host) : (server_->http.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorKind::Conflict, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void GameService::listen_after_bind() {
    if (!server_) throw Error(ErrorKind::Conflict, "bind must be called before listening");
    server_->http.listen_after_bind();
}

void GameService::serve() {
    bind(config_.host, config_.port);
    listen_after_bind();
}

void GameService::stop() {
    if (server_) server_->http.stop();
}

} // namespace guesswho
