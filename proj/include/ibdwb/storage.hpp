#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ibdwb/sql_ast.hpp"
#include "ibdwb/value.hpp"

namespace ibdwb::storage {

struct Column {
    std::string name; // upper-cased identifier
    ColumnType type;
    bool nullable = true;
    bool operator==(const Column&) const = default;
};

struct TableSchema {
    std::string name; // upper-cased identifier
    std::vector<Column> columns;
    std::optional<std::string> primary_key;

    int column_index(std::string_view upper_name) const;
    bool operator==(const TableSchema&) const = default;
};

using Row = std::vector<Value>;

struct Table {
    TableSchema schema;
    std::vector<Row> rows;
};

using TablePtr = std::shared_ptr<const Table>;

enum class TxMode { Read, Write };
enum class TxVerdict { Commit, Rollback };

// Process-wide transaction budget.
inline constexpr int kMaxOpenTransactions = 5;
size_t open_transaction_count();

class Database;

// A single transaction. WRITE transactions buffer all changes in an overlay
// and publish them on COMMIT; nothing touches disk before that. Move-only;
// destruction rolls back an open transaction.
class Transaction {
public:
    Transaction(Transaction&& other) noexcept;
    Transaction& operator=(Transaction&& other) noexcept;
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;
    ~Transaction();

    uint64_t id() const { return id_; }
    TxMode mode() const { return mode_; }
    bool open() const { return open_; }

    // Statement entry point: parses, executes, and reports through the
    // outcome; a failed statement leaves the transaction state untouched.
    SqlOutcome execute(const std::string& statement);

    void end(TxVerdict verdict); // throws UnknownTransaction when already ended

    // Overlay-aware lookup (nullptr when absent or dropped in this tx).
    TablePtr view_table(const std::string& upper_name) const;
    std::vector<std::string> view_table_names() const;

private:
    friend class Database;
    Transaction(std::shared_ptr<Database> db, TxMode mode, uint64_t id);

    std::shared_ptr<Database> db_;
    TxMode mode_ = TxMode::Read;
    uint64_t id_ = 0;
    bool open_ = false;
    // nullptr value = table dropped in this transaction
    std::map<std::string, TablePtr> overlay_;
    bool schema_dirty_ = false;
};

class Database : public std::enable_shared_from_this<Database> {
public:
    // Throws TransactionLimitExceeded (6th concurrent open, process-wide)
    // or WriterBusy (a WRITE transaction is open on this database).
    Transaction begin(TxMode mode);

    // One statement wrapped in its own transaction: READ for SELECT,
    // WRITE otherwise; commits on success, rolls back on failure.
    SqlOutcome execute_autocommit(const std::string& statement);

    const std::filesystem::path& path() const { return dir_; }
    std::vector<std::string> table_names() const; // sorted
    std::optional<TableSchema> table_schema(const std::string& name) const;
    bool writer_open() const;

private:
    friend class Transaction;
    friend std::shared_ptr<Database> open_database(const std::filesystem::path&, bool);
    Database() = default;

    TablePtr committed_table(const std::string& upper_name) const;
    void commit_overlay(const std::map<std::string, TablePtr>& overlay, bool schema_dirty);
    void release_writer();

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, TablePtr> tables_;
    bool writer_open_ = false;
};

// Opens (or creates) the database directory. Handles are canonical per
// path: two opens of the same directory share one Database instance.
std::shared_ptr<Database> open_database(const std::filesystem::path& path, bool create_if_missing);

// On-disk encoding helpers (db.manifest / .schema / .rows files).
std::string escape_field(const Value& v);
Value unescape_field(const std::string& field, const ColumnType& type);

inline constexpr const char* kManifestName = "db.manifest";
inline constexpr const char* kManifestMagic = "IBDWB-DB v1";

} // namespace ibdwb::storage
