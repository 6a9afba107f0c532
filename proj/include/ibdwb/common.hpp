#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace ibdwb {

// Stable numeric values: they cross the plugin ABI as status integers.
enum class ErrorCode : int32_t {
    NotADatabase = 1,
    IoFailure = 2,
    TransactionLimitExceeded = 3,
    WriterBusy = 4,
    UnknownTransaction = 5,
    TransactionAlreadyOpen = 6,
    ReadOnlyTransaction = 7,

    ParseError = 10,
    UnknownTable = 11,
    UnknownColumn = 12,
    TypeMismatch = 13,
    DuplicateKey = 14,
    NullViolation = 15,
    TableExists = 16,
    ValueTooLong = 17,

    MalformedRequest = 20,

    InitFileMalformed = 30,
    LibraryMissing = 31,
    ModuleNotFound = 32,
    ModuleActive = 33,
    EntrySymbolMissing = 34,
    LibraryLoadFailure = 35,

    SchemaConflict = 40,
    CubeExists = 41,
    CubeNotFound = 42,
    DimensionNotFound = 43,
    DuplicateDimension = 44,
    CrossTableUnsupported = 45,

    EmptyInput = 50,
    RaggedRow = 51,
    TargetExists = 52,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Gating outcome of registry/catalog operations: a refused operation is a
// result, not an exception.
struct OpResult {
    bool success = false;
    std::optional<ErrorCode> code;
    std::string message;
};

enum class LogLevel : int32_t { Info = 0, Warn = 1, Err = 2 };

using LogSink = std::function<void(LogLevel, const std::string&)>;

// Process-wide sink; defaults to stderr. Tests install their own to capture warnings.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, const std::string& message);

} // namespace ibdwb
