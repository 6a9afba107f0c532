// Probe module used by platform tests. Behaviour is steered by the
// IBDWB_PROBE_MODE environment variable:
//   status:<n>   return n immediately
//   log          log "probe-entry" / "probe-exit" around a no-op body
//   check-active query TACTIVETABLE for its own (name, user) entry; status 0
//                only when the entry is present during the call
//   block:<file> spin until <file> exists, then return 0
//   init-echo:<file>  write the received init bytes to <file> (wizard path)
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ibdwb/plugin_abi.h"

namespace {

std::string mode() {
    const char* m = std::getenv("IBDWB_PROBE_MODE");
    return m ? m : "status:0";
}

int32_t run(void* host_ctx, const ibdwb_host_services* services, const char* init,
            uint64_t init_len) {
    std::string m = mode();
    if (m.rfind("status:", 0) == 0) return std::atoi(m.c_str() + 7);
    if (m == "log") {
        services->log(host_ctx, IBDWB_LOG_INFO, "probe-entry");
        services->log(host_ctx, IBDWB_LOG_INFO, "probe-exit");
        return 0;
    }
    if (m == "check-active") {
        const char* home = std::getenv("IBDWB_PROBE_HOME");
        const char* stmt = std::getenv("IBDWB_PROBE_STMT");
        if (!home || !stmt) return 100;
        ibdwb_result* result = nullptr;
        int32_t status = services->execute_sql(host_ctx, home, "probe", "", stmt, &result);
        if (status != 0) return status;
        int32_t rows = 0;
        while (services->result_next_row(result)) ++rows;
        services->result_close(result);
        return rows == 1 ? 0 : 101;
    }
    if (m.rfind("block:", 0) == 0) {
        std::filesystem::path gate(m.substr(6));
        for (int i = 0; i < 20000; ++i) {
            if (std::filesystem::exists(gate)) return 0;
            usleep(1000);
        }
        return 102; // gave up
    }
    if (m.rfind("init-echo:", 0) == 0) {
        std::ofstream out(m.substr(10), std::ios::binary | std::ios::trunc);
        out.write(init, static_cast<std::streamsize>(init_len));
        return out ? 0 : 103;
    }
    return 104;
}

} // namespace

extern "C" int32_t TOOLMAIN(void* host_ctx, const ibdwb_host_services* services, const char* init,
                            uint64_t init_len) {
    return run(host_ctx, services, init, init_len);
}

extern "C" int32_t WIZARDMAIN(void* host_ctx, const ibdwb_host_services* services,
                              const char* init, uint64_t init_len) {
    return run(host_ctx, services, init, init_len);
}
