#pragma once

#include <string>

#include "ibdwb/kernel.hpp"
#include "ibdwb/value.hpp"

namespace ibdwb {

enum class OutputMode { Table, Tsv };

// TABLE: space-aligned columns. TSV: tab-separated with \t \n \\ escapes and
// NULL as \N — byte-stable for fixed inputs.
std::string render_dataset(const DataSet& ds, OutputMode mode);
std::string render_session_report(const SessionReport& report, OutputMode mode);

} // namespace ibdwb
