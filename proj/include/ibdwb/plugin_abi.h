/* Foreign-function contract between the host and dynamic-library modules.
 *
 * A module bundle is `<basename>.<dylib extension>` plus `<basename>.ini`.
 * Tool modules export TOOLMAIN, wizard modules export WIZARDMAIN, both with
 * the ibdwb_module_entry signature and unmangled names. The host invokes the
 * entry on the calling thread and control stays with the module until it
 * returns its status (0 = success, otherwise an ibdwb error code).
 *
 * Tools receive an empty init sequence; wizards receive the INIT string
 * stored at installation.
 */
#ifndef IBDWB_PLUGIN_ABI_H
#define IBDWB_PLUGIN_ABI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define IBDWB_ABI_VERSION 1

enum {
    IBDWB_LOG_INFO = 0,
    IBDWB_LOG_WARN = 1,
    IBDWB_LOG_ERROR = 2,
};

/* Opaque result cursor produced by execute_sql. */
typedef struct ibdwb_result ibdwb_result;

typedef struct ibdwb_host_services {
    int32_t version; /* IBDWB_ABI_VERSION */

    /* Runs one statement as `user` against the database at `path`.
     * Returns 0 and (when result_out is non-NULL) a cursor positioned
     * before the first row; a non-zero return is an error code and
     * *result_out is set to NULL. Pass result_out = NULL to discard the
     * result. Cursors must be released with result_close. */
    int32_t (*execute_sql)(void* host_ctx, const char* path, const char* user,
                           const char* password, const char* statement,
                           ibdwb_result** result_out);

    /* Advances to the next row; returns 1 while a row is available. */
    int32_t (*result_next_row)(ibdwb_result* result);

    /* Bytes of the given column (0-based) in the current row. NULL values
     * return a null pointer with *length_out = 0. The pointer stays valid
     * until the next call on the same result. */
    const char* (*result_column_text)(ibdwb_result* result, int32_t column,
                                      uint64_t* length_out);

    void (*result_close)(ibdwb_result* result);

    void (*log)(void* host_ctx, int32_t level, const char* message);

    int32_t (*host_version)(void* host_ctx);
} ibdwb_host_services;

typedef int32_t (*ibdwb_module_entry)(void* host_ctx, const ibdwb_host_services* services,
                                      const char* init, uint64_t init_len);

#ifdef __cplusplus
}
#endif

#endif /* IBDWB_PLUGIN_ABI_H */
