#pragma once

// Minimal declarations of the ONNX Runtime C API (ORT_API_VERSION 22).
//
// Only the leading slots of the OrtApi function table that this project calls
// are typed; the table is append-only across releases, so the prefix layout is
// stable. Slot indices follow onnxruntime_c_api.h.

#include <cstddef>
#include <cstdint>

namespace guesswho::ort {

inline constexpr std::uint32_t kApiVersion = 22;

struct OrtStatus;
struct OrtEnv;
struct OrtSession;
struct OrtSessionOptions;
struct OrtValue;
struct OrtMemoryInfo;
struct OrtAllocator;
struct OrtTypeInfo;
struct OrtTensorTypeAndShapeInfo;
struct OrtRunOptions;

enum OrtLoggingLevel : int { kLogVerbose = 0, kLogInfo = 1, kLogWarning = 2, kLogError = 3, kLogFatal = 4 };

enum ONNXTensorElementDataType : int {
    kTensorUndefined = 0,
    kTensorFloat = 1,
    kTensorInt32 = 6,
    kTensorInt64 = 7,
};

enum OrtAllocatorType : int { kDeviceAllocator = 0, kArenaAllocator = 1 };
enum OrtMemType : int { kMemTypeDefault = 0 };

using Unused = void (*)();

struct OrtApi {
    Unused CreateStatus;                                                                       // 0
    Unused GetErrorCode;                                                                       // 1
    const char*(* GetErrorMessage)(const OrtStatus*);                                           // 2
    OrtStatus*(* CreateEnv)(OrtLoggingLevel, const char*, OrtEnv**);                           // 3
    Unused CreateEnvWithCustomLogger;                                                          // 4
    Unused EnableTelemetryEvents;                                                              // 5
    Unused DisableTelemetryEvents;                                                             // 6
    OrtStatus*(* CreateSession)(const OrtEnv*, const char*, const OrtSessionOptions*, OrtSession**); // 7
    Unused CreateSessionFromArray;                                                             // 8
    OrtStatus*(* Run)(OrtSession*, const OrtRunOptions*, const char* const*, const OrtValue* const*, std::size_t,
                      const char* const*, std::size_t, OrtValue**);                              // 9
    OrtStatus*(* CreateSessionOptions)(OrtSessionOptions**);                                    // 10
    Unused SetOptimizedModelFilePath;                                                          // 11
    Unused CloneSessionOptions;                                                                // 12
    Unused SetSessionExecutionMode;                                                            // 13
    Unused EnableProfiling;                                                                    // 14
    Unused DisableProfiling;                                                                   // 15
    Unused EnableMemPattern;                                                                   // 16
    Unused DisableMemPattern;                                                                  // 17
    Unused EnableCpuMemArena;                                                                  // 18
    Unused DisableCpuMemArena;                                                                 // 19
    Unused SetSessionLogId;                                                                    // 20
    Unused SetSessionLogVerbosityLevel;                                                        // 21
    Unused SetSessionLogSeverityLevel;                                                         // 22
    Unused SetSessionGraphOptimizationLevel;                                                   // 23
    OrtStatus*(* SetIntraOpNumThreads)(OrtSessionOptions*, int);                               // 24
    Unused SetInterOpNumThreads;                                                               // 25
    Unused CreateCustomOpDomain;                                                               // 26
    Unused CustomOpDomain_Add;                                                                 // 27
    Unused AddCustomOpDomain;                                                                  // 28
    Unused RegisterCustomOpsLibrary;                                                           // 29
    OrtStatus*(* SessionGetInputCount)(const OrtSession*, std::size_t*);                       // 30
    OrtStatus*(* SessionGetOutputCount)(const OrtSession*, std::size_t*);                      // 31
    Unused SessionGetOverridableInitializerCount;                                              // 32
    OrtStatus*(* SessionGetInputTypeInfo)(const OrtSession*, std::size_t, OrtTypeInfo**);      // 33
    OrtStatus*(* SessionGetOutputTypeInfo)(const OrtSession*, std::size_t, OrtTypeInfo**);     // 34
    Unused SessionGetOverridableInitializerTypeInfo;                                           // 35
    OrtStatus*(* SessionGetInputName)(const OrtSession*, std::size_t, OrtAllocator*, char**);  // 36
    OrtStatus*(* SessionGetOutputName)(const OrtSession*, std::size_t, OrtAllocator*, char**); // 37
    Unused SessionGetOverridableInitializerName;                                               // 38
    Unused CreateRunOptions;                                                                   // 39
    Unused RunOptionsSetRunLogVerbosityLevel;                                                  // 40
    Unused RunOptionsSetRunLogSeverityLevel;                                                   // 41
    Unused RunOptionsSetRunTag;                                                                // 42
    Unused RunOptionsGetRunLogVerbosityLevel;                                                  // 43
    Unused RunOptionsGetRunLogSeverityLevel;                                                   // 44
    Unused RunOptionsGetRunTag;                                                                // 45
    Unused RunOptionsSetTerminate;                                                             // 46
    Unused RunOptionsUnsetTerminate;                                                           // 47
    Unused CreateTensorAsOrtValue;                                                             // 48
    OrtStatus*(* CreateTensorWithDataAsOrtValue)(const OrtMemoryInfo*, void*, std::size_t, const std::int64_t*,
                                                 std::size_t, ONNXTensorElementDataType, OrtValue**); // 49
    Unused IsTensor;                                                                           // 50
    OrtStatus*(* GetTensorMutableData)(OrtValue*, void**);                                     // 51
    Unused FillStringTensor;                                                                   // 52
    Unused GetStringTensorDataLength;                                                          // 53
    Unused GetStringTensorContent;                                                             // 54
    OrtStatus*(* CastTypeInfoToTensorInfo)(const OrtTypeInfo*, const OrtTensorTypeAndShapeInfo**); // 55
    Unused GetOnnxTypeFromTypeInfo;                                                            // 56
    Unused CreateTensorTypeAndShapeInfo;                                                       // 57
    Unused SetTensorElementType;                                                               // 58
    Unused SetDimensions;                                                                      // 59
    OrtStatus*(* GetTensorElementType)(const OrtTensorTypeAndShapeInfo*, ONNXTensorElementDataType*); // 60
    OrtStatus*(* GetDimensionsCount)(const OrtTensorTypeAndShapeInfo*, std::size_t*);          // 61
    OrtStatus*(* GetDimensions)(const OrtTensorTypeAndShapeInfo*, std::int64_t*, std::size_t); // 62
    Unused GetSymbolicDimensions;                                                              // 63
    Unused GetTensorShapeElementCount;                                                         // 64
    OrtStatus*(* GetTensorTypeAndShape)(const OrtValue*, OrtTensorTypeAndShapeInfo**);         // 65
    Unused GetTypeInfo;                                                                        // 66
    Unused GetValueType;                                                                       // 67
    Unused CreateMemoryInfo;                                                                   // 68
    OrtStatus*(* CreateCpuMemoryInfo)(OrtAllocatorType, OrtMemType, OrtMemoryInfo**);          // 69
    Unused CompareMemoryInfo;                                                                  // 70
    Unused MemoryInfoGetName;                                                                  // 71
    Unused MemoryInfoGetId;                                                                    // 72
    Unused MemoryInfoGetMemType;                                                               // 73
    Unused MemoryInfoGetType;                                                                  // 74
    Unused AllocatorAlloc;                                                                     // 75
    OrtStatus*(* AllocatorFree)(OrtAllocator*, void*);                                         // 76
    Unused AllocatorGetInfo;                                                                   // 77
    OrtStatus*(* GetAllocatorWithDefaultOptions)(OrtAllocator**);                              // 78
    Unused AddFreeDimensionOverride;                                                           // 79
    Unused GetValue;                                                                           // 80
    Unused GetValueCount;                                                                      // 81
    Unused CreateValue;                                                                        // 82
    Unused CreateOpaqueValue;                                                                  // 83
    Unused GetOpaqueValue;                                                                     // 84
    Unused KernelInfoGetAttribute_float;                                                       // 85
    Unused KernelInfoGetAttribute_int64;                                                       // 86
    Unused KernelInfoGetAttribute_string;                                                      // 87
    Unused KernelContext_GetInputCount;                                                        // 88
    Unused KernelContext_GetOutputCount;                                                       // 89
    Unused KernelContext_GetInput;                                                             // 90
    Unused KernelContext_GetOutput;                                                            // 91
    void (*ReleaseEnv)(OrtEnv*);                                                               // 92
    void (*ReleaseStatus)(OrtStatus*);                                                         // 93
    void (*ReleaseMemoryInfo)(OrtMemoryInfo*);                                                 // 94
    void (*ReleaseSession)(OrtSession*);                                                       // 95
    void (*ReleaseValue)(OrtValue*);                                                           // 96
    void (*ReleaseRunOptions)(OrtRunOptions*);                                                 // 97
    void (*ReleaseTypeInfo)(OrtTypeInfo*);                                                     // 98
    void (*ReleaseTensorTypeAndShapeInfo)(OrtTensorTypeAndShapeInfo*);                         // 99
    void (*ReleaseSessionOptions)(OrtSessionOptions*);                                         // 100
};

struct OrtApiBase {
    const OrtApi*(* GetApi)(std::uint32_t version);
    const char*(* GetVersionString)();
};

using GetApiBaseFn = const OrtApiBase* (*)();

} // namespace guesswho::ort
