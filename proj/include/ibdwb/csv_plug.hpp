#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ibdwb/common.hpp"
#include "ibdwb/plugin_abi.h"
#include "ibdwb/value.hpp"

namespace ibdwb::plugins {

struct ConvertSpec {
    std::filesystem::path source;
    char delimiter = ',';
    bool has_header = true;
    std::string database; // target database directory
    std::string table;    // target table name
    std::string user = "plug";
    std::string password;
};

struct ColumnGuess {
    std::string name;
    ColumnType inferred;
};

// RFC-style CSV parsing: quoted fields with "" escapes, custom delimiter.
// Records must be rectangular; throws Error(RaggedRow) with the offending
// data-record number otherwise; Error(EmptyInput) when no data records.
std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delimiter);

// INTEGER when every non-empty field parses as an integer, DOUBLE when every
// non-empty field parses numerically, VARCHAR(255) otherwise.
ColumnType infer_column_type(const std::vector<std::string>& fields);

// The data plug: infers a schema, creates the target table, and loads one
// INSERT per record through the host services. Returns rows inserted.
// Throws Error on EmptyInput / RaggedRow / TargetExists and on statement
// failures reported by the host.
uint64_t convert_delimited(const ibdwb_host_services* services, void* host_ctx,
                           const ConvertSpec& spec);

// Header/first-record names sanitized into identifiers (COL1.. fallback).
std::vector<std::string> column_names(const std::vector<std::string>* header, size_t width);

} // namespace ibdwb::plugins
