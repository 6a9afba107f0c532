// Data plug module: converts a delimited text file into a native table.
// Run parameters come from IBDWB_MODULE_ARGS:
//   source=<file> db=<database dir> table=<name> [delim=<c>|tab] [header=yes|no] [user=<u>]
#include <cstdlib>
#include <string>

#include "ibdwb/common.hpp"
#include "ibdwb/csv_plug.hpp"
#include "ibdwb/module_args.hpp"
#include "ibdwb/plugin_abi.h"

using namespace ibdwb;

extern "C" int32_t TOOLMAIN(void* host_ctx, const ibdwb_host_services* services,
                            const char* init, uint64_t init_len) {
    (void)init;
    (void)init_len; // tools are activated without an initialization string
    auto args = plugins::parse_module_args(std::getenv(plugins::kModuleArgsEnv));
    auto missing = [&](const char* key) {
        bool absent = !args.count(key);
        if (absent)
            services->log(host_ctx, IBDWB_LOG_ERROR,
                          (std::string("sampleplug: missing argument ") + key).c_str());
        return absent;
    };
    if (missing("source") || missing("db") || missing("table"))
        return static_cast<int32_t>(ErrorCode::MalformedRequest);

    plugins::ConvertSpec spec;
    spec.source = args["source"];
    spec.database = args["db"];
    spec.table = args["table"];
    if (args.count("user")) spec.user = args["user"];
    if (args.count("delim")) {
        const std::string& d = args["delim"];
        spec.delimiter = d == "tab" ? '\t' : d.empty() ? ',' : d[0];
    }
    if (args.count("header")) spec.has_header = args["header"] != "no";

    try {
        uint64_t rows = plugins::convert_delimited(services, host_ctx, spec);
        services->log(host_ctx, IBDWB_LOG_INFO,
                      ("sampleplug: loaded " + std::to_string(rows) + " records into " +
                       spec.table)
                          .c_str());
        return 0;
    } catch (const Error& e) {
        services->log(host_ctx, IBDWB_LOG_ERROR, (std::string("sampleplug: ") + e.what()).c_str());
        return static_cast<int32_t>(e.code());
    } catch (...) {
        return static_cast<int32_t>(ErrorCode::IoFailure);
    }
}
