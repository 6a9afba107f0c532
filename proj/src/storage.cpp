#include "ibdwb/storage.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ibdwb/query.hpp"

namespace ibdwb::storage {

namespace fs = std::filesystem;

int TableSchema::column_index(std::string_view upper_name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == upper_name) return static_cast<int>(i);
    return -1;
}

// ----- field encoding -----

std::string escape_field(const Value& v) {
    if (v.is_null()) return "\\N";
    if (v.is_integer()) return std::to_string(v.as_integer());
    if (v.is_real()) return format_double(v.as_real());
    std::string out;
    const std::string& s = v.is_text() ? v.as_text() : v.render();
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

Value unescape_field(const std::string& field, const ColumnType& type) {
    if (field == "\\N") return Value();
    switch (type.base) {
    case ColumnType::Base::Integer: {
        int64_t v = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw Error(ErrorCode::NotADatabase, "corrupt integer field '" + field + "'");
        return Value::integer(v);
    }
    case ColumnType::Base::Double: {
        double v = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw Error(ErrorCode::NotADatabase, "corrupt double field '" + field + "'");
        return Value::real(v);
    }
    case ColumnType::Base::Varchar: {
        std::string out;
        out.reserve(field.size());
        for (size_t i = 0; i < field.size(); ++i) {
            char c = field[i];
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (++i >= field.size())
                throw Error(ErrorCode::NotADatabase, "dangling escape in field");
            switch (field[i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            default:
                throw Error(ErrorCode::NotADatabase, "bad escape in field");
            }
        }
        return Value::text(std::move(out));
    }
    }
    throw Error(ErrorCode::NotADatabase, "bad column type");
}

namespace {

std::string upper_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

void write_file_atomic(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "rename failed for " + target.string());
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> read_lines(const std::string& content) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string schema_file_text(const TableSchema& schema) {
    std::string out;
    for (const auto& col : schema.columns) {
        out += col.name;
        out += '\t';
        out += col.type.to_string();
        out += '\t';
        out += col.nullable ? "NULL" : "NOTNULL";
        out += '\n';
    }
    if (schema.primary_key) out += "PRIMARYKEY\t" + *schema.primary_key + "\n";
    return out;
}

std::string rows_file_text(const Table& table) {
    std::string out;
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += '\t';
            out += escape_field(row[i]);
        }
        out += '\n';
    }
    return out;
}

TableSchema parse_schema_file(const std::string& name, const std::string& content) {
    TableSchema schema;
    schema.name = name;
    for (const std::string& line : read_lines(content)) {
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() == 2 && fields[0] == "PRIMARYKEY") {
            schema.primary_key = fields[1];
            continue;
        }
        if (fields.size() != 3)
            throw Error(ErrorCode::NotADatabase, "corrupt schema line for table " + name);
        auto type = ColumnType::parse(fields[1]);
        if (!type || (fields[2] != "NULL" && fields[2] != "NOTNULL"))
            throw Error(ErrorCode::NotADatabase, "corrupt schema line for table " + name);
        schema.columns.push_back({fields[0], *type, fields[2] == "NULL"});
    }
    if (schema.columns.empty())
        throw Error(ErrorCode::NotADatabase, "table " + name + " has no columns");
    if (schema.primary_key && schema.column_index(*schema.primary_key) < 0)
        throw Error(ErrorCode::NotADatabase, "primary key names unknown column in " + name);
    return schema;
}

Table parse_rows_file(const TableSchema& schema, const std::string& content) {
    Table table;
    table.schema = schema;
    for (const std::string& line : read_lines(content)) {
        auto fields = split_tabs(line);
        if (fields.size() != schema.columns.size())
            throw Error(ErrorCode::NotADatabase,
                        "row width mismatch in table " + schema.name);
        Row row;
        row.reserve(fields.size());
        for (size_t i = 0; i < fields.size(); ++i)
            row.push_back(unescape_field(fields[i], schema.columns[i].type));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ----- process-wide transaction budget -----

struct TxBudget {
    std::mutex mu;
    size_t open = 0;
    uint64_t next_id = 1;

    static TxBudget& instance() {
        static TxBudget b;
        return b;
    }
};

// ----- database registry (one instance per directory) -----

struct Registry {
    std::mutex mu;
    std::unordered_map<std::string, std::weak_ptr<Database>> databases;

    static Registry& instance() {
        static Registry r;
        return r;
    }
};

std::string canonical_key(const fs::path& p) {
    std::error_code ec;
    fs::path c = fs::weakly_canonical(p, ec);
    if (ec) c = fs::absolute(p).lexically_normal();
    return c.string();
}

} // namespace

size_t open_transaction_count() {
    auto& budget = TxBudget::instance();
    std::lock_guard lock(budget.mu);
    return budget.open;
}

std::shared_ptr<Database> open_database(const fs::path& path, bool create_if_missing) {
    auto& reg = Registry::instance();
    std::lock_guard lock(reg.mu);
    std::string key = canonical_key(path);
    if (auto it = reg.databases.find(key); it != reg.databases.end()) {
        if (auto live = it->second.lock()) return live;
    }

    auto db = std::shared_ptr<Database>(new Database());
    db->dir_ = path;
    fs::path manifest = path / kManifestName;

    std::error_code ec;
    if (fs::exists(manifest, ec)) {
        auto lines = read_lines(read_file(manifest));
        if (lines.empty() || lines[0] != kManifestMagic)
            throw Error(ErrorCode::NotADatabase,
                        "bad manifest magic in " + manifest.string());
        for (size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const std::string& name = lines[i];
            TableSchema schema = parse_schema_file(name, read_file(path / (name + ".schema")));
            Table table = parse_rows_file(schema, read_file(path / (name + ".rows")));
            db->tables_[name] = std::make_shared<const Table>(std::move(table));
        }
    } else {
        if (!create_if_missing)
            throw Error(ErrorCode::NotADatabase, "no database at " + path.string());
        fs::create_directories(path, ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
        write_file_atomic(manifest, std::string(kManifestMagic) + "\n");
    }

    reg.databases[key] = db;
    return db;
}

// ----- Database -----

std::vector<std::string> Database::table_names() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> names;
    names.reserve(tables_.size());
    for (const auto& [name, _] : tables_) names.push_back(name);
    return names;
}

std::optional<TableSchema> Database::table_schema(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = tables_.find(upper_copy(name));
    if (it == tables_.end()) return std::nullopt;
    return it->second->schema;
}

bool Database::writer_open() const {
    std::lock_guard lock(mu_);
    return writer_open_;
}

TablePtr Database::committed_table(const std::string& upper_name) const {
    std::lock_guard lock(mu_);
    auto it = tables_.find(upper_name);
    return it == tables_.end() ? nullptr : it->second;
}

Transaction Database::begin(TxMode mode) {
    auto& budget = TxBudget::instance();
    uint64_t id;
    {
        std::lock_guard lock(budget.mu);
        if (budget.open >= static_cast<size_t>(kMaxOpenTransactions))
            throw Error(ErrorCode::TransactionLimitExceeded,
                        "transaction limit of " + std::to_string(kMaxOpenTransactions) +
                            " reached");
        ++budget.open;
        id = budget.next_id++;
    }
    {
        std::lock_guard lock(mu_);
        if (writer_open_) {
            std::lock_guard undo(budget.mu);
            --budget.open;
            throw Error(ErrorCode::WriterBusy,
                        "a write transaction is open on " + dir_.string());
        }
        if (mode == TxMode::Write) writer_open_ = true;
    }
    return Transaction(shared_from_this(), mode, id);
}

void Database::release_writer() {
    std::lock_guard lock(mu_);
    writer_open_ = false;
}

void Database::commit_overlay(const std::map<std::string, TablePtr>& overlay, bool schema_dirty) {
    std::lock_guard lock(mu_);
    for (const auto& [name, table] : overlay) {
        if (table) {
            write_file_atomic(dir_ / (name + ".schema"), schema_file_text(table->schema));
            write_file_atomic(dir_ / (name + ".rows"), rows_file_text(*table));
            tables_[name] = table;
        } else {
            std::error_code ec;
            fs::remove(dir_ / (name + ".schema"), ec);
            fs::remove(dir_ / (name + ".rows"), ec);
            tables_.erase(name);
        }
    }
    if (schema_dirty) {
        std::string manifest = std::string(kManifestMagic) + "\n";
        for (const auto& [name, _] : tables_) manifest += name + "\n";
        write_file_atomic(dir_ / kManifestName, manifest);
    }
}

SqlOutcome Database::execute_autocommit(const std::string& statement) {
    sql::Statement parsed;
    try {
        parsed = sql::parse_statement(statement);
    } catch (const Error& e) {
        return SqlOutcome::fail(e.code(), e.what(), statement);
    }
    TxMode mode = std::holds_alternative<sql::SelectStmt>(parsed.node) ? TxMode::Read : TxMode::Write;
    std::optional<Transaction> tx;
    try {
        tx.emplace(begin(mode));
    } catch (const Error& e) {
        return SqlOutcome::fail(e.code(), e.what(), statement);
    }
    SqlOutcome outcome = tx->execute(statement);
    try {
        tx->end(outcome.success ? TxVerdict::Commit : TxVerdict::Rollback);
    } catch (const Error& e) {
        return SqlOutcome::fail(e.code(), e.what(), statement);
    }
    return outcome;
}

// ----- Transaction -----

Transaction::Transaction(std::shared_ptr<Database> db, TxMode mode, uint64_t id)
    : db_(std::move(db)), mode_(mode), id_(id), open_(true) {}

Transaction::Transaction(Transaction&& other) noexcept
    : db_(std::move(other.db_)),
      mode_(other.mode_),
      id_(other.id_),
      open_(other.open_),
      overlay_(std::move(other.overlay_)),
      schema_dirty_(other.schema_dirty_) {
    other.open_ = false;
}

Transaction& Transaction::operator=(Transaction&& other) noexcept {
    if (this != &other) {
        if (open_) {
            try {
                end(TxVerdict::Rollback);
            } catch (...) {
            }
        }
        db_ = std::move(other.db_);
        mode_ = other.mode_;
        id_ = other.id_;
        open_ = other.open_;
        overlay_ = std::move(other.overlay_);
        schema_dirty_ = other.schema_dirty_;
        other.open_ = false;
    }
    return *this;
}

Transaction::~Transaction() {
    if (open_) {
        try {
            end(TxVerdict::Rollback);
        } catch (...) {
        }
    }
}

void Transaction::end(TxVerdict verdict) {
    if (!open_) throw Error(ErrorCode::UnknownTransaction, "transaction already ended");
    open_ = false;
    auto& budget = TxBudget::instance();
    try {
        if (verdict == TxVerdict::Commit && mode_ == TxMode::Write && !overlay_.empty())
            db_->commit_overlay(overlay_, schema_dirty_);
    } catch (...) {
        if (mode_ == TxMode::Write) db_->release_writer();
        std::lock_guard lock(budget.mu);
        --budget.open;
        throw;
    }
    if (mode_ == TxMode::Write) db_->release_writer();
    std::lock_guard lock(budget.mu);
    --budget.open;
}

TablePtr Transaction::view_table(const std::string& upper_name) const {
    auto it = overlay_.find(upper_name);
    if (it != overlay_.end()) return it->second; // nullptr when dropped here
    return db_->committed_table(upper_name);
}

std::vector<std::string> Transaction::view_table_names() const {
    std::map<std::string, bool> names;
    for (const auto& n : db_->table_names()) names[n] = true;
    for (const auto& [name, table] : overlay_) names[name] = table != nullptr;
    std::vector<std::string> out;
    for (const auto& [name, present] : names)
        if (present) out.push_back(name);
    return out;
}

namespace {

class TxTableSource : public query::TableSource {
public:
    explicit TxTableSource(const Transaction& tx) : tx_(tx) {}
    TablePtr find_table(const std::string& upper_name) const override {
        return tx_.view_table(upper_name);
    }

private:
    const Transaction& tx_;
};

Value coerce_for_column(const Value& v, const Column& col) {
    if (v.is_null()) {
        if (!col.nullable)
            throw Error(ErrorCode::NullViolation, "column " + col.name + " is NOT NULL");
        return v;
    }
    switch (col.type.base) {
    case ColumnType::Base::Integer:
        if (v.is_integer()) return v;
        break;
    case ColumnType::Base::Double:
        if (v.is_integer()) return Value::real(static_cast<double>(v.as_integer()));
        if (v.is_real()) return v;
        break;
    case ColumnType::Base::Varchar:
        if (v.is_text()) {
            if (v.as_text().size() > col.type.length)
                throw Error(ErrorCode::ValueTooLong,
                            "value too long for " + col.name + " " + col.type.to_string());
            return v;
        }
        break;
    }
    throw Error(ErrorCode::TypeMismatch,
                "value " + v.render() + " does not fit column " + col.name + " " +
                    col.type.to_string());
}

} // namespace

SqlOutcome Transaction::execute(const std::string& statement) {
    if (!open_)
        return SqlOutcome::fail(ErrorCode::UnknownTransaction, "transaction is not open", statement);

    sql::Statement parsed;
    try {
        parsed = sql::parse_statement(statement);
    } catch (const Error& e) {
        return SqlOutcome::fail(e.code(), e.what(), statement);
    }

    if (std::holds_alternative<sql::SelectStmt>(parsed.node)) {
        try {
            TxTableSource source(*this);
            DataSet ds =
                query::evaluate_select(std::get<sql::SelectStmt>(parsed.node), statement, source);
            return SqlOutcome::ok(std::move(ds));
        } catch (const Error& e) {
            return SqlOutcome::fail(e.code(), e.what(), statement);
        }
    }

    if (mode_ != TxMode::Write)
        return SqlOutcome::fail(ErrorCode::ReadOnlyTransaction,
                                "statement needs a WRITE transaction", statement);

    // statement-level atomicity: restore the overlay if anything fails
    auto snapshot = overlay_;
    bool dirty_snapshot = schema_dirty_;
    try {
        if (auto* create = std::get_if<sql::CreateTableStmt>(&parsed.node)) {
            if (view_table(create->table))
                throw Error(ErrorCode::TableExists, "table " + create->table + " already exists");
            auto table = std::make_shared<Table>();
            table->schema.name = create->table;
            for (const auto& def : create->columns)
                table->schema.columns.push_back({def.name, def.type, !def.not_null});
            table->schema.primary_key = create->primary_key;
            overlay_[create->table] = std::move(table);
            schema_dirty_ = true;
        } else if (auto* drop = std::get_if<sql::DropTableStmt>(&parsed.node)) {
            if (!view_table(drop->table))
                throw Error(ErrorCode::UnknownTable, "unknown table " + drop->table);
            overlay_[drop->table] = nullptr;
            schema_dirty_ = true;
        } else if (auto* ins = std::get_if<sql::InsertStmt>(&parsed.node)) {
            TablePtr current = view_table(ins->table);
            if (!current) throw Error(ErrorCode::UnknownTable, "unknown table " + ins->table);
            const TableSchema& schema = current->schema;
            Row row(schema.columns.size()); // defaults to NULL
            if (ins->columns.empty()) {
                if (ins->values.size() != schema.columns.size())
                    throw Error(ErrorCode::TypeMismatch,
                                "expected " + std::to_string(schema.columns.size()) +
                                    " values, got " + std::to_string(ins->values.size()));
                for (size_t i = 0; i < ins->values.size(); ++i) row[i] = ins->values[i];
            } else {
                for (size_t i = 0; i < ins->columns.size(); ++i) {
                    int idx = schema.column_index(ins->columns[i]);
                    if (idx < 0)
                        throw Error(ErrorCode::UnknownColumn, "unknown column " + ins->columns[i]);
                    row[static_cast<size_t>(idx)] = ins->values[i];
                }
            }
            for (size_t i = 0; i < schema.columns.size(); ++i)
                row[i] = coerce_for_column(row[i], schema.columns[i]);
            if (schema.primary_key) {
                size_t pk = static_cast<size_t>(schema.column_index(*schema.primary_key));
                if (row[pk].is_null())
                    throw Error(ErrorCode::NullViolation,
                                "primary key " + *schema.primary_key + " cannot be NULL");
                for (const auto& existing : current->rows)
                    if (existing[pk] == row[pk])
                        throw Error(ErrorCode::DuplicateKey,
                                    "duplicate primary key " + row[pk].render() + " in " +
                                        ins->table);
            }
            auto updated = std::make_shared<Table>(*current);
            updated->rows.push_back(std::move(row));
            overlay_[ins->table] = std::move(updated);
        } else if (auto* del = std::get_if<sql::DeleteStmt>(&parsed.node)) {
            TablePtr current = view_table(del->table);
            if (!current) throw Error(ErrorCode::UnknownTable, "unknown table " + del->table);
            if (del->where) {
                // surface UnknownColumn even over empty tables
                struct Probe {
                    static void check(const sql::Expr& e, const TableSchema& s) {
                        if (e.kind == sql::Expr::Kind::Column && s.column_index(e.column) < 0)
                            throw Error(ErrorCode::UnknownColumn, "unknown column " + e.column);
                        if (e.lhs) check(*e.lhs, s);
                        if (e.rhs) check(*e.rhs, s);
                    }
                };
                Probe::check(*del->where, current->schema);
            }
            auto updated = std::make_shared<Table>();
            updated->schema = current->schema;
            for (const auto& row : current->rows) {
                // no WHERE clause deletes every row
                if (!del->where || query::predicate_accepts(*del->where, current->schema, row))
                    continue;
                updated->rows.push_back(row);
            }
            overlay_[del->table] = std::move(updated);
        }
    } catch (const Error& e) {
        overlay_ = std::move(snapshot);
        schema_dirty_ = dirty_snapshot;
        return SqlOutcome::fail(e.code(), e.what(), statement);
    }

    DataSet empty;
    empty.statement = statement;
    return SqlOutcome::ok(std::move(empty));
}

} // namespace ibdwb::storage
