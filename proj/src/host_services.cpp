#include "ibdwb/platform.hpp"

// Result cursor handed across the plugin ABI. The dataset is materialized,
// so the cursor stays valid however long the module keeps it; the kernel
// counts it against the owning session until result_close.
struct ibdwb_result {
    ibdwb::DataSet dataset;
    ibdwb::Kernel* kernel = nullptr;
    uint64_t cursor_id = 0;
    size_t next = 0;
    bool has_current = false;
    size_t current = 0;
    std::string scratch;
};

namespace ibdwb {

namespace {

int32_t status_of(const SqlOutcome& outcome) {
    return outcome.success ? 0 : static_cast<int32_t>(outcome.error->code);
}

int32_t abi_execute_sql(void* host_ctx, const char* path, const char* user,
                        const char* password, const char* statement,
                        ibdwb_result** result_out) noexcept {
    if (result_out) *result_out = nullptr;
    if (!host_ctx || !path || !user || !statement)
        return static_cast<int32_t>(ErrorCode::MalformedRequest);
    auto* host = static_cast<PluginHost*>(host_ctx);
    try {
        KernelRequest req;
        req.action = KernelRequest::Action::Execute;
        req.path = path;
        req.user = user;
        req.password = password ? password : "";
        req.statement = statement;
        if (!result_out) {
            SqlOutcome outcome = host->kernel().execute(req);
            if (!outcome.success)
                log_message(LogLevel::Warn, "plugin statement failed: " + outcome.error->message);
            return status_of(outcome);
        }
        Kernel::CursorExecution exec = host->kernel().execute_holding_cursor(req);
        if (!exec.outcome.success) {
            log_message(LogLevel::Warn, "plugin statement failed: " + exec.outcome.error->message);
            return status_of(exec.outcome);
        }
        auto* result = new ibdwb_result();
        result->dataset = std::move(exec.outcome.dataset);
        result->kernel = &host->kernel();
        result->cursor_id = exec.cursor_id;
        *result_out = result;
        return 0;
    } catch (const Error& e) {
        log_message(LogLevel::Warn, std::string("plugin statement failed: ") + e.what());
        return static_cast<int32_t>(e.code());
    } catch (...) {
        return static_cast<int32_t>(ErrorCode::IoFailure);
    }
}

int32_t abi_result_next_row(ibdwb_result* result) noexcept {
    if (!result) return 0;
    if (result->next >= result->dataset.rows.size()) {
        result->has_current = false;
        return 0;
    }
    result->current = result->next++;
    result->has_current = true;
    return 1;
}

const char* abi_result_column_text(ibdwb_result* result, int32_t column,
                                   uint64_t* length_out) noexcept {
    if (length_out) *length_out = 0;
    if (!result || !result->has_current || column < 0) return nullptr;
    const auto& row = result->dataset.rows[result->current];
    if (static_cast<size_t>(column) >= row.size()) return nullptr;
    const Value& v = row[static_cast<size_t>(column)];
    if (v.is_null()) return nullptr;
    if (v.is_text()) {
        if (length_out) *length_out = v.as_text().size();
        return v.as_text().c_str();
    }
    result->scratch = v.render();
    if (length_out) *length_out = result->scratch.size();
    return result->scratch.c_str();
}

void abi_result_close(ibdwb_result* result) noexcept {
    if (!result) return;
    try {
        if (result->kernel) result->kernel->release_cursor(result->cursor_id);
    } catch (...) {
    }
    delete result;
}

void abi_log(void* host_ctx, int32_t level, const char* message) noexcept {
    (void)host_ctx;
    try {
        LogLevel l = level >= IBDWB_LOG_ERROR ? LogLevel::Err
                     : level == IBDWB_LOG_WARN ? LogLevel::Warn
                                               : LogLevel::Info;
        log_message(l, message ? message : "");
    } catch (...) {
    }
}

int32_t abi_host_version(void* host_ctx) noexcept {
    (void)host_ctx;
    return IBDWB_ABI_VERSION;
}

} // namespace

PluginHost::PluginHost(Kernel& kernel) : kernel_(kernel) {
    table_.version = IBDWB_ABI_VERSION;
    table_.execute_sql = &abi_execute_sql;
    table_.result_next_row = &abi_result_next_row;
    table_.result_column_text = &abi_result_column_text;
    table_.result_close = &abi_result_close;
    table_.log = &abi_log;
    table_.host_version = &abi_host_version;
}

} // namespace ibdwb
