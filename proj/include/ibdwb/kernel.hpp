#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ibdwb/storage.hpp"
#include "ibdwb/value.hpp"

namespace ibdwb {

struct SessionKey {
    std::string path;
    std::string user;
    auto operator<=>(const SessionKey&) const = default;
};

struct KernelRequest {
    enum class Action { Execute, Disconnect, Status };

    Action action = Action::Execute;
    std::string database_name; // carried for fidelity, unused by routing
    std::string path;
    std::string table_name;    // carried for fidelity, unused by routing
    std::string user;
    std::string password;      // carried, never verified
    std::string statement;     // Execute only
};

struct SessionRow {
    std::string path;
    std::string user;
    int open_transactions = 0;
    int gauge = 0; // open transactions + unclosed result cursors
    bool operator==(const SessionRow&) const = default;
};

struct SessionReport {
    std::vector<SessionRow> rows; // sorted by (path, user)
    bool operator==(const SessionReport&) const = default;
};

// Routes storage requests through a session table keyed by (path, user).
// Unknown sessions register on first use; a session whose resource gauge
// drops to zero is evicted as soon as the request completes. At most one
// explicit transaction per session; EXECUTE outside of one runs in its own
// auto transaction. All entry points are thread-safe.
class Kernel {
public:
    explicit Kernel(std::filesystem::path home); // creates the system database if absent

    struct DispatchResult {
        std::optional<SqlOutcome> outcome;  // Execute
        std::optional<SessionReport> report; // Status
    };
    DispatchResult dispatch(const KernelRequest& request);

    SqlOutcome execute(const KernelRequest& request);
    void disconnect(const SessionKey& key);
    SessionReport status() const;
    size_t session_count() const;

    // Explicit transactions: raise the session gauge until closed.
    uint64_t open_explicit_transaction(const SessionKey& key, storage::TxMode mode);
    void close_explicit_transaction(const SessionKey& key, storage::TxVerdict verdict);

    // Cursor-holding execution for the plugin host: a successful call leaves
    // one result cursor charged to the session until release_cursor.
    struct CursorExecution {
        SqlOutcome outcome;
        uint64_t cursor_id = 0; // valid only when outcome.success
    };
    CursorExecution execute_holding_cursor(const KernelRequest& request);
    void release_cursor(uint64_t cursor_id);

    const std::filesystem::path& home() const { return home_; }
    std::string home_path_string() const { return home_.string(); }

    // Serializes multi-statement writers of the system database (platform
    // registries, cube catalog) so they queue instead of hitting WriterBusy.
    std::mutex& system_write_mutex() { return system_write_mu_; }

private:
    struct Session {
        SessionKey key;
        std::shared_ptr<storage::Database> db;
        std::optional<storage::Transaction> tx;
        int cursors = 0;

        int open_transactions() const { return tx ? 1 : 0; }
        int gauge() const { return open_transactions() + cursors; }
    };

    Session& session_for(const SessionKey& key); // registers when absent; throws NotADatabase
    void evict_if_idle(const SessionKey& key);
    SqlOutcome execute_locked(const KernelRequest& request, bool hold_cursor, uint64_t* cursor_out);

    std::filesystem::path home_;
    mutable std::mutex mu_;
    std::mutex system_write_mu_;
    std::map<SessionKey, Session> sessions_;
    std::map<uint64_t, SessionKey> cursors_;
    uint64_t next_cursor_ = 1;
};

} // namespace ibdwb
