#include "ibdwb/cube.hpp"

#include <algorithm>
#include <cctype>

namespace ibdwb {

namespace fs = std::filesystem;
using storage::TxMode;
using storage::TxVerdict;

namespace {

constexpr const char* kCatalogUser = "catalog";

// Figure-style catalog shape; NOT NULL normalized.
constexpr const char* kCubeTableDdl =
    "CREATE TABLE CUBETABLE(CUBENAME varchar(255) NOT NULL, CUBEOWNER varchar(255) NOT NULL, "
    "CUBEDESC varchar(255) NOT NULL, PRIMARY KEY (CUBENAME));";
constexpr const char* kDimensionListDdl =
    "CREATE TABLE DIMENSIONLIST(CUBENAME varchar(255) NOT NULL, DATABASENAME varchar(255) "
    "NOT NULL, TABLENAME varchar(255) NOT NULL, DNUMBER integer NOT NULL, DIMENSION "
    "varchar(255) NOT NULL);";

std::string upper_copy(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string text_at(const DataSet& ds, size_t row, size_t col) {
    const Value& v = ds.rows[row][col];
    return v.is_null() ? std::string() : v.is_text() ? v.as_text() : v.render();
}

int64_t int_at(const DataSet& ds, size_t row, size_t col) {
    const Value& v = ds.rows[row][col];
    return v.is_integer() ? v.as_integer() : 0;
}

storage::TableSchema schema_of_ddl(const std::string& ddl) {
    auto parsed = sql::parse_statement(ddl);
    const auto& create = std::get<sql::CreateTableStmt>(parsed.node);
    storage::TableSchema schema;
    schema.name = create.table;
    for (const auto& def : create.columns)
        schema.columns.push_back({def.name, def.type, !def.not_null});
    schema.primary_key = create.primary_key;
    return schema;
}

const char* agg_keyword(CubeAgg agg) {
    switch (agg) {
    case CubeAgg::Count: return "COUNT";
    case CubeAgg::Sum: return "SUM";
    case CubeAgg::Avg: return "AVG";
    case CubeAgg::Min: return "MIN";
    case CubeAgg::Max: return "MAX";
    }
    return "COUNT";
}

} // namespace

CubeBuilder::CubeBuilder(Kernel& kernel, std::filesystem::path catalog)
    : kernel_(kernel), catalog_(catalog.empty() ? kernel.home() : std::move(catalog)) {
    std::error_code ec;
    catalog_is_system_ = fs::weakly_canonical(catalog_, ec) == fs::weakly_canonical(kernel_.home(), ec);
    storage::open_database(catalog_, /*create_if_missing=*/true);
}

SqlOutcome CubeBuilder::catalog_sql(const std::string& statement) {
    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = catalog_.string();
    req.database_name = "catalog";
    req.user = kCatalogUser;
    req.statement = statement;
    return kernel_.execute(req);
}

SqlOutcome CubeBuilder::catalog_sql_checked(const std::string& statement) {
    SqlOutcome out = catalog_sql(statement);
    if (!out.success) throw Error(out.error->code, out.error->message);
    return out;
}

void CubeBuilder::init_catalog() {
    std::lock_guard lock(mu_);
    std::unique_lock<std::mutex> sys;
    if (catalog_is_system_) sys = std::unique_lock(kernel_.system_write_mutex());

    auto db = storage::open_database(catalog_, true);
    for (const char* ddl : {kCubeTableDdl, kDimensionListDdl}) {
        storage::TableSchema expected = schema_of_ddl(ddl);
        auto existing = db->table_schema(expected.name);
        if (existing) {
            if (!(*existing == expected))
                throw Error(ErrorCode::SchemaConflict,
                            "table " + expected.name + " exists with a different schema");
            continue; // already conforming
        }
        catalog_sql_checked(ddl);
    }
}

bool CubeBuilder::cube_exists(const std::string& name) {
    SqlOutcome out = catalog_sql_checked("SELECT COUNT(*) FROM CUBETABLE WHERE CUBENAME = " +
                                         sql_quote(name));
    return int_at(out.dataset, 0, 0) > 0;
}

template <typename Fn> OpResult CubeBuilder::with_write_tx(Fn&& body) {
    std::unique_lock<std::mutex> sys;
    if (catalog_is_system_) sys = std::unique_lock(kernel_.system_write_mutex());
    SessionKey key{catalog_.string(), kCatalogUser};
    kernel_.open_explicit_transaction(key, TxMode::Write);
    OpResult result;
    try {
        result = body();
    } catch (const Error& e) {
        kernel_.close_explicit_transaction(key, TxVerdict::Rollback);
        return {false, e.code(), e.what()};
    } catch (...) {
        kernel_.close_explicit_transaction(key, TxVerdict::Rollback);
        throw;
    }
    try {
        kernel_.close_explicit_transaction(key,
                                           result.success ? TxVerdict::Commit : TxVerdict::Rollback);
    } catch (const Error& e) {
        return {false, e.code(), e.what()};
    }
    return result;
}

OpResult CubeBuilder::add_dimension_in_tx(const std::string& cube, const DimensionSpec& dim) {
    std::shared_ptr<storage::Database> source;
    try {
        source = storage::open_database(dim.database, false);
    } catch (const Error& e) {
        return {false, e.code(), e.what()};
    }
    std::string table = upper_copy(dim.table);
    std::string column = upper_copy(dim.column);
    auto schema = source->table_schema(table);
    if (!schema)
        return {false, ErrorCode::UnknownTable,
                "unknown table " + table + " in " + dim.database};
    if (schema->column_index(column) < 0)
        return {false, ErrorCode::UnknownColumn,
                "unknown column " + column + " in " + dim.database + ":" + table};

    SqlOutcome dup = catalog_sql_checked(
        "SELECT COUNT(*) FROM DIMENSIONLIST WHERE CUBENAME = " + sql_quote(cube) +
        " AND DATABASENAME = " + sql_quote(dim.database) + " AND TABLENAME = " +
        sql_quote(table) + " AND DIMENSION = " + sql_quote(column));
    if (int_at(dup.dataset, 0, 0) > 0)
        return {false, ErrorCode::DuplicateDimension, "the same dimension cannot be used twice"};

    SqlOutcome max = catalog_sql_checked(
        "SELECT MAX(DNUMBER) FROM DIMENSIONLIST WHERE CUBENAME = " + sql_quote(cube));
    int64_t next = max.dataset.rows[0][0].is_null() ? 1 : int_at(max.dataset, 0, 0) + 1;

    catalog_sql_checked(
        "INSERT INTO DIMENSIONLIST(CUBENAME, DATABASENAME, TABLENAME, DNUMBER, DIMENSION) "
        "VALUES (" +
        sql_quote(cube) + ", " + sql_quote(dim.database) + ", " + sql_quote(table) + ", " +
        std::to_string(next) + ", " + sql_quote(column) + ")");
    return {true, std::nullopt, ""};
}

OpResult CubeBuilder::add_cube(const std::string& name, const std::string& owner,
                               const std::string& description,
                               const std::vector<DimensionSpec>& dims) {
    std::lock_guard lock(mu_);
    if (cube_exists(name))
        return {false, ErrorCode::CubeExists, "cube " + name + " already exists"};
    return with_write_tx([&]() -> OpResult {
        catalog_sql_checked("INSERT INTO CUBETABLE(CUBENAME, CUBEOWNER, CUBEDESC) VALUES (" +
                            sql_quote(name) + ", " + sql_quote(owner) + ", " +
                            sql_quote(description) + ")");
        for (const auto& dim : dims) {
            OpResult r = add_dimension_in_tx(name, dim);
            if (!r.success) return r; // rolls the whole cube back
        }
        return {true, std::nullopt, ""};
    });
}

OpResult CubeBuilder::add_dimension(const std::string& cube, const std::string& database,
                                    const std::string& table, const std::string& column) {
    std::lock_guard lock(mu_);
    if (!cube_exists(cube))
        return {false, ErrorCode::CubeNotFound, "cube " + cube + " does not exist"};
    return with_write_tx(
        [&]() -> OpResult { return add_dimension_in_tx(cube, {database, table, column}); });
}

std::vector<DimensionRecord> CubeBuilder::dimensions_of(const std::string& cube) {
    SqlOutcome out = catalog_sql_checked(
        "SELECT DATABASENAME, TABLENAME, DNUMBER, DIMENSION FROM DIMENSIONLIST WHERE "
        "CUBENAME = " +
        sql_quote(cube) + " ORDER BY DNUMBER");
    std::vector<DimensionRecord> dims;
    for (size_t r = 0; r < out.dataset.rows.size(); ++r) {
        DimensionRecord rec;
        rec.cube = cube;
        rec.database = text_at(out.dataset, r, 0);
        rec.table = text_at(out.dataset, r, 1);
        rec.dnumber = int_at(out.dataset, r, 2);
        rec.column = text_at(out.dataset, r, 3);
        dims.push_back(std::move(rec));
    }
    return dims;
}

OpResult CubeBuilder::remove_dimension(const std::string& cube, const std::string& database,
                                       const std::string& table, const std::string& column) {
    std::lock_guard lock(mu_);
    if (!cube_exists(cube))
        return {false, ErrorCode::CubeNotFound, "cube " + cube + " does not exist"};
    std::string table_u = upper_copy(table);
    std::string column_u = upper_copy(column);
    auto dims = dimensions_of(cube);
    bool found = false;
    for (const auto& d : dims)
        if (d.database == database && d.table == table_u && d.column == column_u) found = true;
    if (!found)
        return {false, ErrorCode::DimensionNotFound,
                "no such dimension in cube " + cube};
    return with_write_tx([&]() -> OpResult {
        // delete-and-renumber keeps dnumber dense 1..n
        catalog_sql_checked("DELETE FROM DIMENSIONLIST WHERE CUBENAME = " + sql_quote(cube));
        int64_t next = 1;
        for (const auto& d : dims) {
            if (d.database == database && d.table == table_u && d.column == column_u) continue;
            catalog_sql_checked(
                "INSERT INTO DIMENSIONLIST(CUBENAME, DATABASENAME, TABLENAME, DNUMBER, "
                "DIMENSION) VALUES (" +
                sql_quote(cube) + ", " + sql_quote(d.database) + ", " + sql_quote(d.table) +
                ", " + std::to_string(next++) + ", " + sql_quote(d.column) + ")");
        }
        return {true, std::nullopt, ""};
    });
}

OpResult CubeBuilder::remove_cube(const std::string& name) {
    std::lock_guard lock(mu_);
    if (!cube_exists(name))
        return {false, ErrorCode::CubeNotFound, "cube " + name + " does not exist"};
    return with_write_tx([&]() -> OpResult {
        catalog_sql_checked("DELETE FROM DIMENSIONLIST WHERE CUBENAME = " + sql_quote(name));
        catalog_sql_checked("DELETE FROM CUBETABLE WHERE CUBENAME = " + sql_quote(name));
        return {true, std::nullopt, ""};
    });
}

CubeView CubeBuilder::display_cube(const std::string& name) {
    SqlOutcome out = catalog_sql_checked(
        "SELECT CUBENAME, CUBEOWNER, CUBEDESC FROM CUBETABLE WHERE CUBENAME = " +
        sql_quote(name));
    if (out.dataset.rows.empty())
        throw Error(ErrorCode::CubeNotFound, "cube " + name + " does not exist");
    CubeView view;
    view.cube.name = text_at(out.dataset, 0, 0);
    view.cube.owner = text_at(out.dataset, 0, 1);
    view.cube.description = text_at(out.dataset, 0, 2);
    view.dimensions = dimensions_of(name);
    return view;
}

std::vector<CubeRecord> CubeBuilder::display_all_cubes() {
    SqlOutcome out = catalog_sql_checked(
        "SELECT CUBENAME, CUBEOWNER, CUBEDESC FROM CUBETABLE ORDER BY CUBENAME");
    std::vector<CubeRecord> cubes;
    for (size_t r = 0; r < out.dataset.rows.size(); ++r)
        cubes.push_back({text_at(out.dataset, r, 0), text_at(out.dataset, r, 1),
                         text_at(out.dataset, r, 2)});
    return cubes;
}

DataSet CubeBuilder::evaluate_cube(const std::string& cube, const std::vector<int64_t>& dnumbers,
                                   const std::string& measure, CubeAgg agg) {
    if (dnumbers.empty())
        throw Error(ErrorCode::MalformedRequest, "no dimensions selected for evaluation");
    CubeView view = display_cube(cube); // throws CubeNotFound

    std::vector<const DimensionRecord*> selected;
    for (int64_t n : dnumbers) {
        const DimensionRecord* hit = nullptr;
        for (const auto& d : view.dimensions)
            if (d.dnumber == n) hit = &d;
        if (!hit)
            throw Error(ErrorCode::DimensionNotFound,
                        "cube " + cube + " has no dimension number " + std::to_string(n));
        selected.push_back(hit);
    }
    for (const auto* d : selected)
        if (d->database != selected[0]->database || d->table != selected[0]->table)
            throw Error(ErrorCode::CrossTableUnsupported,
                        "selected dimensions span more than one table");

    const std::string& database = selected[0]->database;
    const std::string& table = selected[0]->table;
    std::string measure_u = upper_copy(measure);
    auto source = storage::open_database(database, false);
    auto schema = source->table_schema(table);
    if (!schema) throw Error(ErrorCode::UnknownTable, "unknown table " + table + " in " + database);
    if (schema->column_index(measure_u) < 0)
        throw Error(ErrorCode::UnknownColumn,
                    "unknown measure column " + measure_u + " in " + table);

    std::string cols;
    for (const auto* d : selected) {
        if (!cols.empty()) cols += ", ";
        cols += d->column;
    }
    std::string statement = "SELECT " + cols + ", " + agg_keyword(agg) + "(" + measure_u +
                            ") FROM " + table + " GROUP BY " + cols;

    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = database;
    req.database_name = database;
    req.table_name = table;
    req.user = kCatalogUser;
    req.statement = statement;
    SqlOutcome out = kernel_.execute(req);
    if (!out.success) throw Error(out.error->code, out.error->message);
    return out.dataset;
}

} // namespace ibdwb
