#include "guesswho/onnx_backend.hpp"

#include "guesswho/clip_tokenizer.hpp"
#include "guesswho/error.hpp"
#include "ort_api.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#ifndef GUESSWHO_DEFAULT_ORT_LIB
#define GUESSWHO_DEFAULT_ORT_LIB ""
#endif

namespace guesswho {

namespace {

using namespace ort;

std::filesystem::path resolve_runtime(const std::filesystem::path& configured) {
    if (!configured.empty()) return configured;
    if (const char* env = std::getenv("GUESSWHO_ONNXRUNTIME_LIB"); env && *env) return env;
    if (auto built = default_onnxruntime_library(); !built.empty() && std::filesystem::exists(built)) return built;
    return "libonnxruntime.so";
}

struct Model {
    OrtSession* session = nullptr;
    std::vector<std::string> input_names;
    std::vector<ONNXTensorElementDataType> input_types;
    std::vector<std::string> output_names;
    std::size_t output_index = 0;
};

} // namespace

struct OnnxClipBackend::Impl {
    OnnxModelConfig config;
    WarningSink warn;
    void* library = nullptr;
    const OrtApi* api = nullptr;
    const OrtApiBase* base = nullptr;
    OrtEnv* env = nullptr;
    OrtMemoryInfo* memory = nullptr;
    Model image;
    Model text;
    std::optional<ClipTokenizer> tokenizer;
    std::size_t dim = 0;

    ~Impl() {
        if (api) {
            if (image.session) api->ReleaseSession(image.session);
            if (text.session) api->ReleaseSession(text.session);
            if (memory) api->ReleaseMemoryInfo(memory);
            if (env) api->ReleaseEnv(env);
        }
        if (library) dlclose(library);
    }

    void check(OrtStatus* status, const std::string& what) const {
        if (!status) return;
        std::string message = api->GetErrorMessage(status);
        api->ReleaseStatus(status);
        throw Error(ErrorKind::Backend, what + ": " + message);
    }

    struct ValueDeleter {
        const OrtApi* api;
        void operator()(OrtValue* v) const {
            if (v) api->ReleaseValue(v);
        }
    };
    using ValuePtr = std::unique_ptr<OrtValue, ValueDeleter>;

    void load_runtime() {
        const auto path = resolve_runtime(config.runtime_library);
        library = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
        if (!library) {
            const char* err = dlerror();
            throw Error(ErrorKind::Backend, "cannot load ONNX Runtime library", err ? err : path.string());
        }
        auto get_base = reinterpret_cast<GetApiBaseFn>(dlsym(library, "OrtGetApiBase"));
        if (!get_base) throw Error(ErrorKind::Backend, "library does not export OrtGetApiBase", path.string());
        base = get_base();
        api = base ? base->GetApi(kApiVersion) : nullptr;
        if (!api)
            throw Error(ErrorKind::Backend, "ONNX Runtime does not provide C API version " + std::to_string(kApiVersion),
                        base ? base->GetVersionString() : path.string());
        check(api->CreateEnv(kLogWarning, "guesswho", &env), "creating ONNX Runtime environment");
        check(api->CreateCpuMemoryInfo(kArenaAllocator, kMemTypeDefault, &memory), "creating CPU memory info");
    }

    Model load_model(const std::filesystem::path& path, const std::string& output_name) {
        if (!std::filesystem::exists(path)) throw Error(ErrorKind::Backend, "model file not found", path.string());
        OrtSessionOptions* options = nullptr;
        check(api->CreateSessionOptions(&options), "creating session options");
        Model model;
        try {
            if (config.intra_op_threads > 0)
                check(api->SetIntraOpNumThreads(options, config.intra_op_threads), "setting thread count");
            check(api->CreateSession(env, path.c_str(), options, &model.session), "loading " + path.string());
        } catch (...) {
            api->ReleaseSessionOptions(options);
            throw;
        }
        api->ReleaseSessionOptions(options);
        try {
            describe(model, path, output_name);
        } catch (...) {
            api->ReleaseSession(model.session);
            throw;
        }
        return model;
    }

    void describe(Model& model, const std::filesystem::path& path, const std::string& output_name) const {
        OrtAllocator* allocator = nullptr;
        check(api->GetAllocatorWithDefaultOptions(&allocator), "getting default allocator");
        auto take_name = [&](char* raw) {
            std::string name(raw);
            api->AllocatorFree(allocator, raw);
            return name;
        };

        std::size_t inputs = 0, outputs = 0;
        check(api->SessionGetInputCount(model.session, &inputs), "reading model inputs");
        check(api->SessionGetOutputCount(model.session, &outputs), "reading model outputs");
        for (std::size_t i = 0; i < inputs; ++i) {
            char* raw = nullptr;
            check(api->SessionGetInputName(model.session, i, allocator, &raw), "reading input name");
            model.input_names.push_back(take_name(raw));
            OrtTypeInfo* info = nullptr;
            check(api->SessionGetInputTypeInfo(model.session, i, &info), "reading input type");
            const OrtTensorTypeAndShapeInfo* tensor = nullptr;
            ONNXTensorElementDataType type = kTensorUndefined;
            OrtStatus* st = api->CastTypeInfoToTensorInfo(info, &tensor);
            if (!st && tensor) st = api->GetTensorElementType(tensor, &type);
            api->ReleaseTypeInfo(info);
            check(st, "reading input element type");
            model.input_types.push_back(type);
        }
        for (std::size_t i = 0; i < outputs; ++i) {
            char* raw = nullptr;
            check(api->SessionGetOutputName(model.session, i, allocator, &raw), "reading output name");
            model.output_names.push_back(take_name(raw));
        }
        if (model.input_names.empty() || model.output_names.empty())
            throw Error(ErrorKind::Backend, "model has no inputs or outputs", path.string());
        if (!output_name.empty()) {
            auto it = std::find(model.output_names.begin(), model.output_names.end(), output_name);
            if (it == model.output_names.end())
                throw Error(ErrorKind::Backend, "model has no output named '" + output_name + "'", path.string());
            model.output_index = static_cast<std::size_t>(it - model.output_names.begin());
        }
    }

    // Runs `model` and returns the selected output as rows of floats.
    std::vector<Embedding> run(const Model& model, std::vector<ValuePtr>& inputs, std::size_t batch) const {
        std::vector<const char*> in_names;
        for (const auto& n : model.input_names) in_names.push_back(n.c_str());
        std::vector<const OrtValue*> in_values;
        for (const auto& v : inputs) in_values.push_back(v.get());
        const char* out_name = model.output_names[model.output_index].c_str();
        OrtValue* raw_out = nullptr;
        check(api->Run(model.session, nullptr, in_names.data(), in_values.data(), in_values.size(), &out_name, 1,
                       &raw_out),
              "running encoder");
        ValuePtr output(raw_out, ValueDeleter{api});

        OrtTensorTypeAndShapeInfo* shape_info = nullptr;
        check(api->GetTensorTypeAndShape(output.get(), &shape_info), "reading output shape");
        std::size_t rank = 0;
        std::vector<std::int64_t> dims;
        OrtStatus* st = api->GetDimensionsCount(shape_info, &rank);
        ONNXTensorElementDataType type = kTensorUndefined;
        if (!st) {
            dims.resize(rank);
            st = api->GetDimensions(shape_info, dims.data(), rank);
        }
        if (!st) st = api->GetTensorElementType(shape_info, &type);
        api->ReleaseTensorTypeAndShapeInfo(shape_info);
        check(st, "reading output shape");
        if (type != kTensorFloat) throw Error(ErrorKind::Backend, "encoder output must be float32");

        std::size_t total = 1;
        for (auto d : dims) total *= static_cast<std::size_t>(std::max<std::int64_t>(d, 0));
        if (rank == 0 || dims[0] != static_cast<std::int64_t>(batch) || total == 0 || total % batch != 0)
            throw Error(ErrorKind::Backend, "unexpected encoder output shape");
        const std::size_t width = total / batch;

        void* data = nullptr;
        check(api->GetTensorMutableData(output.get(), &data), "reading output data");
        const float* values = static_cast<const float*>(data);
        std::vector<Embedding> rows;
        for (std::size_t b = 0; b < batch; ++b)
            rows.push_back(normalized(Embedding{std::vector<float>(values + b * width, values + (b + 1) * width)}));
        return rows;
    }

    template <typename T>
    ValuePtr make_tensor(std::vector<T>& buffer, const std::vector<std::int64_t>& shape,
                         ONNXTensorElementDataType type) const {
        OrtValue* value = nullptr;
        check(api->CreateTensorWithDataAsOrtValue(memory, buffer.data(), buffer.size() * sizeof(T), shape.data(),
                                                  shape.size(), type, &value),
              "creating input tensor");
        return ValuePtr(value, ValueDeleter{api});
    }

    Embedding text_embedding(const std::string& text) const {
        const auto tokens = tokenizer->tokenize(text);
        if (tokens.truncated) {
            const std::string message = "prompt truncated to " + std::to_string(ClipTokenizer::kContextLength) +
                                        " tokens: \"" + text + "\"";
            if (warn) warn(message);
            else std::cerr << "warning: " << message << "\n";
        }
        const std::vector<std::int64_t> shape = {1, static_cast<std::int64_t>(tokens.ids.size())};
        std::vector<ValuePtr> inputs;
        std::vector<std::vector<std::int64_t>> buffers64;
        std::vector<std::vector<std::int32_t>> buffers32;
        buffers64.reserve(this->text.input_names.size());
        buffers32.reserve(this->text.input_names.size());
        for (std::size_t i = 0; i < this->text.input_names.size(); ++i) {
            const bool mask = this->text.input_names[i].find("mask") != std::string::npos;
            const auto& source = mask ? tokens.attention_mask : tokens.ids;
            if (this->text.input_types[i] == kTensorInt32) {
                buffers32.emplace_back(source.begin(), source.end());
                inputs.push_back(make_tensor(buffers32.back(), shape, kTensorInt32));
            } else if (this->text.input_types[i] == kTensorInt64) {
                buffers64.emplace_back(source.begin(), source.end());
                inputs.push_back(make_tensor(buffers64.back(), shape, kTensorInt64));
            } else {
                throw Error(ErrorKind::Backend, "text encoder input '" + this->text.input_names[i] +
                                                    "' must be int32 or int64");
            }
        }
        return std::move(run(this->text, inputs, 1).front());
    }

    std::vector<Embedding> image_embeddings(const std::vector<ImageTensor>& tensors) const {
        if (image.input_names.size() != 1) throw Error(ErrorKind::Backend, "image encoder must take one input");
        if (image.input_types[0] != kTensorFloat) throw Error(ErrorKind::Backend, "image encoder input must be float32");
        const auto side = static_cast<std::int64_t>(config.image_size);
        std::vector<float> buffer;
        buffer.reserve(tensors.size() * 3 * config.image_size * config.image_size);
        for (const auto& t : tensors) buffer.insert(buffer.end(), t.data.begin(), t.data.end());
        std::vector<ValuePtr> inputs;
        inputs.push_back(make_tensor(buffer, {static_cast<std::int64_t>(tensors.size()), 3, side, side}, kTensorFloat));
        return run(image, inputs, tensors.size());
    }
};

OnnxModelConfig OnnxModelConfig::from_directory(const std::filesystem::path& dir) {
    OnnxModelConfig c;
    c.image_model = dir / "image_encoder.onnx";
    c.text_model = dir / "text_encoder.onnx";
    c.vocab = dir / "vocab.json";
    c.merges = dir / "merges.txt";
    return c;
}

std::filesystem::path default_onnxruntime_library() { return GUESSWHO_DEFAULT_ORT_LIB; }

OnnxClipBackend::OnnxClipBackend(OnnxModelConfig config, WarningSink warn) : impl_(std::make_unique<Impl>()) {
    if (!(config.logit_scale > 0.0)) throw Error(ErrorKind::Validation, "logit scale must be positive");
    impl_->config = std::move(config);
    impl_->warn = std::move(warn);
    impl_->tokenizer = ClipTokenizer::load(impl_->config.vocab, impl_->config.merges);
    impl_->load_runtime();
    impl_->image = impl_->load_model(impl_->config.image_model, impl_->config.image_output);
    impl_->text = impl_->load_model(impl_->config.text_model, impl_->config.text_output);
    impl_->dim = impl_->text_embedding(std::string(kNeutralPrompt)).dim();
}

OnnxClipBackend::~OnnxClipBackend() = default;

std::string OnnxClipBackend::name() const { return "onnx"; }
std::size_t OnnxClipBackend::embedding_dim() const { return impl_->dim; }
double OnnxClipBackend::logit_scale() const { return impl_->config.logit_scale; }

std::string OnnxClipBackend::runtime_version() const { return impl_->base->GetVersionString(); }

Embedding OnnxClipBackend::embed_text(const std::string& text) {
    if (text.empty()) throw Error(ErrorKind::Validation, "cannot embed empty text");
    return impl_->text_embedding(text);
}

Embedding OnnxClipBackend::embed_tensor(const ImageTensor& tensor) {
    if (tensor.size != static_cast<int>(impl_->config.image_size))
        throw Error(ErrorKind::Backend, "image tensor has the wrong size");
    return std::move(impl_->image_embeddings({tensor}).front());
}

Embedding OnnxClipBackend::embed_image(const std::string& image_ref) {
    const auto tensor = preprocess_image(load_image(image_ref), impl_->config.normalization,
                                         static_cast<int>(impl_->config.image_size));
    return embed_tensor(tensor);
}

std::vector<ImageEmbedding> OnnxClipBackend::embed_images(std::span<const std::string> image_refs) {
    std::vector<ImageEmbedding> out(image_refs.size());
    std::vector<ImageTensor> tensors;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < image_refs.size(); ++i) {
        try {
            tensors.push_back(preprocess_image(load_image(image_refs[i]), impl_->config.normalization,
                                               static_cast<int>(impl_->config.image_size)));
            index.push_back(i);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    }
    if (tensors.empty()) return out;
    try {
        auto embeddings = impl_->image_embeddings(tensors);
        for (std::size_t k = 0; k < index.size(); ++k) out[index[k]].embedding = std::move(embeddings[k]);
    } catch (const std::exception& e) {
        for (auto i : index) out[i].error = e.what();
    }
    return out;
}

} // namespace guesswho
