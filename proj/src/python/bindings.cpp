#include "guesswho/benchmark.hpp"
#include "guesswho/classifier.hpp"
#include "guesswho/engine.hpp"
#include "guesswho/error.hpp"
#include "guesswho/fixture_backend.hpp"
#include "guesswho/onnx_backend.hpp"
#include "guesswho/prompts.hpp"
#include "guesswho/service.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace guesswho;

namespace {

class PyEncoderBackend : public EncoderBackend {
public:
    using EncoderBackend::EncoderBackend;

    std::string name() const override { PYBIND11_OVERRIDE_PURE(std::string, EncoderBackend, name); }
    std::size_t embedding_dim() const override { PYBIND11_OVERRIDE_PURE(std::size_t, EncoderBackend, embedding_dim); }
    double logit_scale() const override { PYBIND11_OVERRIDE_PURE(double, EncoderBackend, logit_scale); }
    // Keeps Python callbacks on the calling thread.
    bool serialize_required() const override { return true; }
    Embedding embed_text(const std::string& text) override {
        PYBIND11_OVERRIDE_PURE(Embedding, EncoderBackend, embed_text, text);
    }
    Embedding embed_image(const std::string& image_ref) override {
        PYBIND11_OVERRIDE_PURE(Embedding, EncoderBackend, embed_image, image_ref);
    }
};

py::object json_to_py(const nlohmann::json& doc) {
    return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::dict result_dict(const EvalResult& r) {
    py::dict d;
    d["attribute"] = r.attribute;
    d["target_text"] = r.pair.target_text;
    d["counter_text"] = r.pair.counter_text;
    d["method"] = std::string(to_string(r.pair.method));
    d["tp"] = r.counts.tp;
    d["fn"] = r.counts.fn;
    d["tn"] = r.counts.tn;
    d["fp"] = r.counts.fp;
    d["tpr"] = r.tpr;
    d["tnr"] = r.tnr;
    d["acc"] = r.acc;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Guess Who engine, prompt catalog, zero-shot classifier and benchmark";

    static py::exception<Error> error_type(m, "GuessWhoError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            exc.attr("kind") = std::string(to_string(e.kind()));
            exc.attr("detail") = e.detail();
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::enum_<Decision>(m, "Decision").value("POSITIVE", Decision::Positive).value("NEGATIVE", Decision::Negative);
    py::enum_<PromptMethod>(m, "PromptMethod")
        .value("NEUTRAL", PromptMethod::Neutral)
        .value("CONTRARY", PromptMethod::Contrary);

    m.attr("NEUTRAL_PROMPT") = std::string(kNeutralPrompt);

    py::class_<PromptPair>(m, "PromptPair")
        .def(py::init([](std::string target, std::string counter, PromptMethod method) {
                 return PromptPair{std::move(target), std::move(counter), method};
             }),
             py::arg("target_text"), py::arg("counter_text"), py::arg("method") = PromptMethod::Neutral)
        .def_readonly("target_text", &PromptPair::target_text)
        .def_readonly("counter_text", &PromptPair::counter_text)
        .def_readonly("method", &PromptPair::method)
        .def("__eq__", [](const PromptPair& a, const PromptPair& b) { return a == b; })
        .def("__repr__", [](const PromptPair& p) {
            return "PromptPair('" + p.target_text + "', '" + p.counter_text + "', " + std::string(to_string(p.method)) + ")";
        });

    m.def("neutral_pair", &neutral_pair, py::arg("text"));
    m.def("contrary_pair", &contrary_pair, py::arg("text_a"), py::arg("text_b"));
    m.def("normalize_attribute", &normalize_attribute);
    m.def("has_negation", &has_negation);

    py::class_<Catalog>(m, "Catalog")
        .def_static("defaults", &Catalog::defaults)
        .def_static("load", &Catalog::load)
        .def_static("parse", [](const std::string& text) {
            std::istringstream in(text);
            return Catalog::parse(in);
        })
        .def("emit", &Catalog::emit)
        .def("save", &Catalog::save)
        .def("lookup", &Catalog::lookup)
        .def("pair_for", &Catalog::pair_for)
        .def("contains", &Catalog::contains)
        .def("list_attributes", &Catalog::list_attributes)
        .def("nearest", &Catalog::nearest, py::arg("name"), py::arg("limit") = 3)
        .def("__len__", [](const Catalog& c) { return c.entries().size(); });

    py::class_<Embedding>(m, "Embedding")
        .def(py::init([](std::vector<float> v) { return Embedding{std::move(v)}; }))
        .def_readonly("values", &Embedding::values)
        .def_property_readonly("dim", &Embedding::dim);
    py::implicitly_convertible<py::list, Embedding>();
    py::implicitly_convertible<py::tuple, Embedding>();

    py::class_<BinaryPrediction>(m, "BinaryPrediction")
        .def_readonly("decision", &BinaryPrediction::decision)
        .def_readonly("score_target", &BinaryPrediction::score_target)
        .def_readonly("score_counter", &BinaryPrediction::score_counter)
        .def_readonly("confidence", &BinaryPrediction::confidence)
        .def_property_readonly("positive", &BinaryPrediction::positive);

    m.def("decide", [](double target, double counter, double scale) { return decide({target, counter}, scale); },
          py::arg("score_target"), py::arg("score_counter"), py::arg("logit_scale") = 100.0);
    m.def("softmax2", [](double target, double counter, double scale) { return softmax2({target, counter}, scale); },
          py::arg("score_target"), py::arg("score_counter"), py::arg("logit_scale") = 100.0);

    py::class_<EncoderBackend, PyEncoderBackend, std::shared_ptr<EncoderBackend>>(m, "EncoderBackend")
        .def(py::init<>())
        .def("name", &EncoderBackend::name)
        .def("embedding_dim", &EncoderBackend::embedding_dim)
        .def("logit_scale", &EncoderBackend::logit_scale)
        .def("embed_text", &EncoderBackend::embed_text)
        .def("embed_image", &EncoderBackend::embed_image);

    py::class_<FixtureBackend, EncoderBackend, std::shared_ptr<FixtureBackend>>(m, "FixtureBackend")
        .def_static("load", [](const std::filesystem::path& images, const std::filesystem::path& prompts) {
            return std::make_shared<FixtureBackend>(FixtureBackend::load(images, prompts));
        })
        .def_static("from_catalog", [](const std::filesystem::path& images, const Catalog& catalog) {
            std::ifstream in(images);
            if (!in) throw Error(ErrorKind::Validation, "cannot open fixture images", images.string());
            return std::make_shared<FixtureBackend>(FixtureBackend::parse_images(in),
                                                    FixtureBackend::prompts_from_catalog(catalog));
        })
        .def_property_readonly("image_count", &FixtureBackend::image_count);

    py::class_<OnnxClipBackend, EncoderBackend, std::shared_ptr<OnnxClipBackend>>(m, "OnnxClipBackend")
        .def(py::init([](const std::filesystem::path& model_dir, const std::filesystem::path& runtime_library,
                         double logit_scale) {
                 auto config = OnnxModelConfig::from_directory(model_dir);
                 config.runtime_library = runtime_library;
                 config.logit_scale = logit_scale;
                 return std::make_shared<OnnxClipBackend>(config);
             }),
             py::arg("model_dir"), py::arg("runtime_library") = std::filesystem::path(), py::arg("logit_scale") = 100.0)
        .def_property_readonly("runtime_version", &OnnxClipBackend::runtime_version);

    m.def("predict", &predict, py::arg("backend"), py::arg("image_ref"), py::arg("pair"));
    m.def(
        "predict_batch",
        [](EncoderBackend& backend, const std::vector<std::string>& refs, const PromptPair& pair, std::size_t chunk) {
            py::list out;
            for (auto& r : predict_batch(backend, refs, pair, chunk)) {
                if (r.ok()) out.append(py::cast(*r.prediction));
                else out.append(py::cast(r.error));
            }
            return out;
        },
        py::arg("backend"), py::arg("image_refs"), py::arg("pair"), py::arg("chunk_size") = 32,
        "Predictions, with an error string in place of any image that failed.");

    m.def("apply_scoring",
          [](int score, int remaining, int discarded, const std::string& action, int initial_board_size) {
              if (action != "question" && action != "guess")
                  throw Error(ErrorKind::Validation, "action must be 'question' or 'guess'");
              return apply_scoring(score, remaining, discarded, action == "guess" ? Action::Guess : Action::Question,
                                   initial_board_size);
          },
          py::arg("score"), py::arg("remaining"), py::arg("discarded_count"), py::arg("action"),
          py::arg("initial_board_size"));
    m.def("sample_without_replacement", &sample_without_replacement);

    py::class_<GameSession>(m, "GameSession")
        .def_static("create", &GameSession::create, py::arg("image_refs"), py::arg("seed"),
                    py::arg("initial_score") = GameSession::kDefaultInitialScore, py::arg("session_id") = "")
        .def(
            "ask_from_list",
            [](GameSession& s, const std::string& attribute, const Catalog& catalog, EncoderBackend& backend) {
                return json_to_py(to_json(s.ask_question(FromList{attribute}, catalog, backend)));
            },
            py::arg("attribute"), py::arg("catalog"), py::arg("backend"))
        .def(
            "ask_one_prompt",
            [](GameSession& s, const std::string& text, const Catalog& catalog, EncoderBackend& backend) {
                return json_to_py(to_json(s.ask_question(OnePrompt{text}, catalog, backend)));
            },
            py::arg("text"), py::arg("catalog"), py::arg("backend"))
        .def(
            "ask_two_prompts",
            [](GameSession& s, const std::string& a, const std::string& b, const Catalog& catalog,
               EncoderBackend& backend) {
                return json_to_py(to_json(s.ask_question(TwoPrompts{a, b}, catalog, backend)));
            },
            py::arg("text_a"), py::arg("text_b"), py::arg("catalog"), py::arg("backend"))
        .def("guess", [](GameSession& s, const std::string& card) { return json_to_py(to_json(s.guess(card))); })
        .def("snapshot", [](const GameSession& s) { return json_to_py(to_json(s.snapshot())); })
        .def_property_readonly("score", &GameSession::score)
        .def_property_readonly("status", [](const GameSession& s) { return std::string(to_string(s.status())); })
        .def_property_readonly("finished", &GameSession::finished)
        .def_property_readonly("active_count", &GameSession::active_count)
        .def_property_readonly("winner_id", &GameSession::winner_id);

    py::class_<AttributeTable>(m, "AttributeTable")
        .def_readonly("attribute_names", &AttributeTable::attribute_names)
        .def_readonly("filenames", &AttributeTable::filenames)
        .def("__len__", &AttributeTable::size);
    m.def("load_attr_file", &load_attr_file);
    m.def("parse_attr_file", [](const std::string& text) {
        std::istringstream in(text);
        return parse_attr_file(in);
    });

    py::class_<EvalSubset>(m, "EvalSubset")
        .def_readonly("positives", &EvalSubset::positives)
        .def_readonly("negatives", &EvalSubset::negatives);
    m.def("select_eval_subset", &select_eval_subset, py::arg("table"), py::arg("attribute"), py::arg("cap") = 4000);

    m.def(
        "evaluate_prompt_pair",
        [](EncoderBackend& backend, const EvalSubset& subset, const PromptPair& pair, std::string attribute,
           const std::string& image_root, std::size_t threads) {
            EvalOptions options;
            options.image_root = image_root;
            options.threads = threads;
            return result_dict(evaluate_prompt_pair(backend, subset, pair, std::move(attribute), options));
        },
        py::arg("backend"), py::arg("subset"), py::arg("pair"), py::arg("attribute"),
        py::arg("image_root") = "", py::arg("threads") = 1);
    m.def(
        "rates",
        [](std::int64_t tp, std::int64_t fn, std::int64_t tn, std::int64_t fp) {
            return result_dict(make_eval_result("", {}, {tp, fn, tn, fp}));
        },
        py::arg("tp"), py::arg("fn"), py::arg("tn"), py::arg("fp"), "TPR, TNR and accuracy from confusion counts.");
    m.def(
        "compare_accuracies",
        [](const std::vector<std::tuple<std::string, double, double>>& rows) {
            std::vector<EvalResult> neutral, contrary;
            for (const auto& [attribute, n, c] : rows) {
                EvalResult a;
                a.attribute = attribute;
                a.acc = n;
                neutral.push_back(a);
                a.acc = c;
                contrary.push_back(a);
            }
            py::list out;
            for (const auto& r : compare_methods(neutral, contrary))
                out.append(py::make_tuple(r.attribute, r.neutral_acc, r.contrary_acc, r.gain));
            return out;
        },
        py::arg("rows"), "(attribute, neutral_acc, contrary_acc) -> (attribute, neutral, contrary, gain).");

    py::class_<GameService, std::shared_ptr<GameService>>(m, "GameService")
        .def(py::init([](const py::dict& config) {
                 const ServiceConfig c = service_config_from_json(py_to_json(config));
                 c.validate();
                 Catalog catalog = c.catalog.empty() ? Catalog::defaults() : Catalog::load(c.catalog);
                 auto backend = make_backend(c, catalog);
                 return std::make_shared<GameService>(c, std::move(catalog), backend);
             }),
             py::arg("config"))
        .def(
            "handle",
            [](GameService& s, const std::string& method, const std::string& path, const std::string& body) {
                const HttpResponse r = s.handle({method, path, body});
                return py::make_tuple(r.status, r.content_type, py::bytes(r.body));
            },
            py::arg("method"), py::arg("path"), py::arg("body") = "",
            "Dispatches one request without a socket: (status, content_type, body).");
}
