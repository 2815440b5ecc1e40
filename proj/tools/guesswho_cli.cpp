// guesswho: game server, prompt benchmark and terminal client.

#include "guesswho/benchmark.hpp"
#include "guesswho/csv.hpp"
#include "guesswho/engine.hpp"
#include "guesswho/error.hpp"
#include "guesswho/fixture_backend.hpp"
#include "guesswho/onnx_backend.hpp"
#include "guesswho/prompts.hpp"
#include "guesswho/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace guesswho;
namespace fs = std::filesystem;

namespace {

struct ServeArgs {
    std::string config;
    std::string host;
    int port = -1;
    std::string images;
    std::string backend;
    std::string fixture_images;
    std::string fixture_prompts;
    std::string model_dir;
    std::string ort_lib;
    std::string catalog;
    std::string static_dir;
    int board_size = -1;
    int initial_score = -1;
};

struct BenchArgs {
    std::string attrs;
    std::string images;
    std::string method = "both";
    std::size_t cap = 4000;
    std::string out;
    std::string format = "csv";
    std::string model_dir;
    std::string ort_lib;
    std::string catalog;
    std::vector<std::string> attributes;
    std::size_t threads = 1;
    std::size_t chunk_size = 32;
};

void add_backend_flags(CLI::App* app, ServeArgs& a) {
    app->add_option("--config", a.config, "JSON config file");
    app->add_option("--images", a.images, "Directory of card images");
    app->add_option("--backend", a.backend, "fixture or model")->check(CLI::IsMember({"fixture", "model"}));
    app->add_option("--fixture-images", a.fixture_images, "Fixture bits CSV (image_id,bit1..bit40)");
    app->add_option("--fixture-prompts", a.fixture_prompts, "Fixture prompt map CSV (prompt,bit,polarity)");
    app->add_option("--model-dir", a.model_dir, "Directory with image_encoder.onnx, text_encoder.onnx, vocab.json, merges.txt");
    app->add_option("--ort-lib", a.ort_lib, "ONNX Runtime shared library");
    app->add_option("--catalog", a.catalog, "Prompt catalog CSV");
    app->add_option("--board-size", a.board_size, "Cards per board");
    app->add_option("--initial-score", a.initial_score, "Starting score");
}

ServiceConfig build_config(const ServeArgs& a) {
    ServiceConfig c = a.config.empty() ? ServiceConfig{} : load_service_config(a.config);
    apply_env_overrides(c);
    if (!a.host.empty()) c.host = a.host;
    if (a.port >= 0) c.port = a.port;
    if (!a.images.empty()) c.image_directory = a.images;
    if (!a.model_dir.empty()) {
        c.model = OnnxModelConfig::from_directory(a.model_dir);
        if (a.backend.empty()) c.backend = BackendKind::Model;
    }
    if (!a.backend.empty()) c.backend = a.backend == "model" ? BackendKind::Model : BackendKind::Fixture;
    if (!a.ort_lib.empty()) c.model.runtime_library = a.ort_lib;
    if (!a.fixture_images.empty()) c.fixture_images = a.fixture_images;
    if (!a.fixture_prompts.empty()) c.fixture_prompts = a.fixture_prompts;
    if (!a.catalog.empty()) c.catalog = a.catalog;
    if (!a.static_dir.empty()) c.static_dir = a.static_dir;
    if (a.board_size >= 0) c.board_size = a.board_size;
    if (a.initial_score >= 0) c.initial_score = a.initial_score;
    c.validate();
    return c;
}

Catalog load_catalog(const fs::path& path) { return path.empty() ? Catalog::defaults() : Catalog::load(path); }

GameService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int run_serve(const ServeArgs& a) {
    const ServiceConfig config = build_config(a);
    Catalog catalog = load_catalog(config.catalog);
    auto backend = make_backend(config, catalog);
    GameService service(config, std::move(catalog), backend);
    const int port = service.bind(config.host, config.port);
    std::cerr << "guesswho: " << backend->name() << " backend, listening on http://" << config.host << ":" << port
              << "\n";
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.listen_after_bind();
    g_service = nullptr;
    return 0;
}

int run_bench(const BenchArgs& a) {
    const AttributeTable table = load_attr_file(a.attrs);
    const Catalog catalog = load_catalog(a.catalog);
    const ReportFormat format = parse_report_format(a.format);

    std::shared_ptr<EncoderBackend> backend;
    if (!a.model_dir.empty()) {
        auto model = OnnxModelConfig::from_directory(a.model_dir);
        if (!a.ort_lib.empty()) model.runtime_library = a.ort_lib;
        backend = std::make_shared<OnnxClipBackend>(model, [](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
    } else {
        std::cerr << "note: no --model-dir; scoring with the fixture backend built from the annotations\n";
        backend = std::make_shared<FixtureBackend>(FixtureBackend::images_from_table(table),
                                                   FixtureBackend::prompts_from_catalog(catalog));
    }
    backend = make_shareable(std::make_shared<CachingBackend>(backend));

    std::vector<std::string> attributes = a.attributes;
    if (attributes.empty()) attributes = catalog.list_attributes();

    EvalOptions options;
    options.image_root = a.images;
    options.threads = a.threads;
    options.chunk_size = a.chunk_size;

    auto evaluate = [&](const std::string& attribute, PromptMethod method) -> std::optional<EvalResult> {
        auto pair = catalog.pair_for(attribute, method);
        if (!pair) return std::nullopt;
        const auto subset = select_eval_subset(table, attribute, a.cap);
        std::cerr << attribute << " (" << to_string(method) << "): " << subset.positives.size() << "+"
                  << subset.negatives.size() << " images\n";
        return evaluate_prompt_pair(*backend, subset, *pair, attribute, options);
    };

    std::string report;
    if (a.method == "both") {
        std::vector<EvalResult> neutral, contrary;
        for (const auto& attribute : attributes) {
            if (!catalog.pair_for(attribute, PromptMethod::Contrary)) continue;
            contrary.push_back(*evaluate(attribute, PromptMethod::Contrary));
            neutral.push_back(*evaluate(attribute, PromptMethod::Neutral));
        }
        if (contrary.empty()) throw Error(ErrorKind::Validation, "no selected attribute has a contrary prompt pair");
        report = emit_report(compare_methods(neutral, contrary), format);
    } else {
        const PromptMethod method = parse_prompt_method(a.method);
        std::vector<EvalResult> results;
        for (const auto& attribute : attributes)
            if (auto r = evaluate(attribute, method)) results.push_back(std::move(*r));
        if (results.empty()) throw Error(ErrorKind::Validation, "no selected attribute has a prompt pair for this method");
        report = emit_report(results, format);
    }

    if (a.out.empty()) {
        std::cout << report;
    } else {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw Error(ErrorKind::Validation, "cannot write report", a.out);
        out << report;
    }
    return 0;
}

void print_board(const GameSession& s) {
    std::cout << "score " << s.score() << ", " << s.active_count() << " of " << s.initial_board_size()
              << " cards active\n";
    for (const auto& card : s.cards()) {
        const char mark = card.status == CardStatus::Active ? ' ' : card.status == CardStatus::Discarded ? 'x' : '?';
        std::cout << "  [" << mark << "] " << card.id << "  " << fs::path(card.image_ref).filename().string() << "\n";
    }
}

void print_turn(const TurnRecord& r) {
    if (r.prompt_pair)
        std::cout << "\"" << r.prompt_pair->target_text << "\" vs \"" << r.prompt_pair->counter_text << "\": "
                  << (r.winner_prediction && r.winner_prediction->positive() ? "yes" : "no") << "\n";
    if (r.guess_correct) std::cout << (*r.guess_correct ? "correct!" : "wrong guess") << "\n";
    if (!r.discarded_ids.empty()) {
        std::cout << "discarded:";
        for (const auto& id : r.discarded_ids) std::cout << " " << id;
        std::cout << "\n";
    }
    std::cout << "score " << r.score_before << " -> " << r.score_after << "\n";
}

int run_play(const ServeArgs& a, std::optional<std::uint64_t> seed) {
    const ServiceConfig config = build_config(a);
    const Catalog catalog = load_catalog(config.catalog);
    auto backend = make_backend(config, catalog);
    std::vector<std::string> images;
    for (const auto& p : list_images(config.image_directory)) images.push_back(p.string());
    const std::uint64_t s = seed.value_or(std::random_device{}());
    if (images.size() < static_cast<std::size_t>(config.board_size))
        throw Error(ErrorKind::Conflict, "not enough images for the board");
    auto board = sample_without_replacement(images, static_cast<std::size_t>(config.board_size), s);
    GameSession session = GameSession::create(std::move(board), s ^ 0x5bd1e995ULL, config.initial_score, "local");

    std::cout << "commands: board | attrs | ask <attribute> | say <caption> | pair <caption a> | <caption b> | "
                 "guess <card> | quit\n";
    print_board(session);
    std::string line;
    while (!session.finished() && std::cout << "> " && std::getline(std::cin, line)) {
        const std::string trimmed = text::trim(line);
        const auto space = trimmed.find(' ');
        const std::string cmd = trimmed.substr(0, space);
        const std::string arg = space == std::string::npos ? "" : text::trim(trimmed.substr(space + 1));
        try {
            if (cmd.empty()) continue;
            if (cmd == "quit" || cmd == "exit") return 0;
            if (cmd == "board") {
                print_board(session);
            } else if (cmd == "attrs") {
                for (const auto& name : catalog.list_attributes())
                    std::cout << "  " << name << (has_negation(name) ? "  (negated)" : "") << "\n";
            } else if (cmd == "ask") {
                print_turn(session.ask_question(FromList{arg}, catalog, *backend));
            } else if (cmd == "say") {
                print_turn(session.ask_question(OnePrompt{arg}, catalog, *backend));
            } else if (cmd == "pair") {
                const auto bar = arg.find('|');
                if (bar == std::string::npos) throw Error(ErrorKind::Validation, "use: pair <caption a> | <caption b>");
                print_turn(session.ask_question(TwoPrompts{text::trim(arg.substr(0, bar)), text::trim(arg.substr(bar + 1))},
                                                catalog, *backend));
            } else if (cmd == "guess") {
                print_turn(session.guess(arg));
            } else {
                std::cout << "unknown command\n";
            }
        } catch (const Error& e) {
            std::cout << "error: " << e.what();
            if (!e.detail().empty()) std::cout << " (" << e.detail() << ")";
            std::cout << "\n";
        }
    }
    if (session.finished())
        std::cout << to_string(session.status()) << "; the winner was card " << session.winner_id() << ", final score "
                  << session.score() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guess Who with zero-shot image classification"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP game service");
    add_backend_flags(serve_cmd, serve);
    serve_cmd->add_option("--host", serve.host, "Listen address");
    serve_cmd->add_option("--port", serve.port, "Listen port (0 picks a free one)");
    serve_cmd->add_option("--static-dir", serve.static_dir, "Web client assets served at /");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Score prompt pairs against attribute annotations");
    bench_cmd->add_option("--attrs", bench.attrs, "CelebA-style attribute file")->required();
    bench_cmd->add_option("--images", bench.images, "Image directory");
    bench_cmd->add_option("--method", bench.method, "neutral, contrary or both")
        ->check(CLI::IsMember({"neutral", "contrary", "both"}));
    bench_cmd->add_option("--cap", bench.cap, "Images per class")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", bench.out, "Report file (default stdout)");
    bench_cmd->add_option("--format", bench.format, "csv or markdown")
        ->check(CLI::IsMember({"csv", "markdown", "md"}));
    bench_cmd->add_option("--model-dir", bench.model_dir, "Dual-encoder model directory (fixture backend when absent)");
    bench_cmd->add_option("--ort-lib", bench.ort_lib, "ONNX Runtime shared library");
    bench_cmd->add_option("--catalog", bench.catalog, "Prompt catalog CSV");
    bench_cmd->add_option("--attributes", bench.attributes, "Only these attributes")->delimiter(',');
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)");
    bench_cmd->add_option("--chunk-size", bench.chunk_size, "Images per encoder call")->check(CLI::PositiveNumber);

    ServeArgs play;
    std::optional<std::uint64_t> play_seed;
    auto* play_cmd = app.add_subcommand("play", "Play in the terminal");
    add_backend_flags(play_cmd, play);
    play_cmd->add_option("--seed", play_seed, "Board and winner seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return run_serve(serve);
        if (*bench_cmd) return run_bench(bench);
        if (*play_cmd) return run_play(play, play_seed);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what();
        if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
        std::cerr << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
