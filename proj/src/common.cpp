#include "ibdwb/common.hpp"

#include <cstdio>
#include <mutex>

namespace ibdwb {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotADatabase: return "NotADatabase";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TransactionLimitExceeded: return "TransactionLimitExceeded";
    case ErrorCode::WriterBusy: return "WriterBusy";
    case ErrorCode::UnknownTransaction: return "UnknownTransaction";
    case ErrorCode::TransactionAlreadyOpen: return "TransactionAlreadyOpen";
    case ErrorCode::ReadOnlyTransaction: return "ReadOnlyTransaction";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::NullViolation: return "NullViolation";
    case ErrorCode::TableExists: return "TableExists";
    case ErrorCode::ValueTooLong: return "ValueTooLong";
    case ErrorCode::MalformedRequest: return "MalformedRequest";
    case ErrorCode::InitFileMalformed: return "InitFileMalformed";
    case ErrorCode::LibraryMissing: return "LibraryMissing";
    case ErrorCode::ModuleNotFound: return "ModuleNotFound";
    case ErrorCode::ModuleActive: return "ModuleActive";
    case ErrorCode::EntrySymbolMissing: return "EntrySymbolMissing";
    case ErrorCode::LibraryLoadFailure: return "LibraryLoadFailure";
    case ErrorCode::SchemaConflict: return "SchemaConflict";
    case ErrorCode::CubeExists: return "CubeExists";
    case ErrorCode::CubeNotFound: return "CubeNotFound";
    case ErrorCode::DimensionNotFound: return "DimensionNotFound";
    case ErrorCode::DuplicateDimension: return "DuplicateDimension";
    case ErrorCode::CrossTableUnsupported: return "CrossTableUnsupported";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::TargetExists: return "TargetExists";
    }
    return "Unknown";
}

namespace {

std::mutex g_log_mutex;
LogSink g_log_sink;

void default_sink(LogLevel level, const std::string& message) {
    const char* tag = level == LogLevel::Err ? "error" : level == LogLevel::Warn ? "warn" : "info";
    std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

} // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(g_log_mutex);
    g_log_sink = std::move(sink);
}

void log_message(LogLevel level, const std::string& message) {
    std::lock_guard lock(g_log_mutex);
    if (g_log_sink)
        g_log_sink(level, message);
    else
        default_sink(level, message);
}

} // namespace ibdwb
