#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "ibdwb/kernel.hpp"

namespace ibdwb {

enum class CubeAgg { Count, Sum, Avg, Min, Max };

struct CubeRecord {
    std::string name;
    std::string owner;
    std::string description;
    bool operator==(const CubeRecord&) const = default;
};

struct DimensionRecord {
    std::string cube;
    std::string database; // database directory as registered
    std::string table;    // upper-cased
    int64_t dnumber = 0;  // dense 1..n per cube
    std::string column;   // upper-cased
    bool operator==(const DimensionRecord&) const = default;
};

struct DimensionSpec {
    std::string database;
    std::string table;
    std::string column;
};

struct CubeView {
    CubeRecord cube;
    std::vector<DimensionRecord> dimensions; // ordered by dnumber
};

// Catalog of aggregate mappings over source databases. Only the catalog
// database is ever written; source data stays untouched and uncopied, and
// a cube resolves to a generated GROUP BY against the original table.
class CubeBuilder {
public:
    // Empty catalog path selects the kernel's system database.
    CubeBuilder(Kernel& kernel, std::filesystem::path catalog = {});

    // Creates CUBETABLE and DIMENSIONLIST; idempotent. Throws
    // Error(SchemaConflict) when either exists with a different shape.
    void init_catalog();

    // Atomic: a failing dimension rolls the whole cube back.
    OpResult add_cube(const std::string& name, const std::string& owner,
                      const std::string& description, const std::vector<DimensionSpec>& dims);
    OpResult add_dimension(const std::string& cube, const std::string& database,
                           const std::string& table, const std::string& column);
    // Renumbers the remaining dimensions to keep dnumber dense.
    OpResult remove_dimension(const std::string& cube, const std::string& database,
                              const std::string& table, const std::string& column);
    OpResult remove_cube(const std::string& name); // cascades the dimension list

    CubeView display_cube(const std::string& name); // throws Error(CubeNotFound)
    std::vector<CubeRecord> display_all_cubes();

    // Generates SELECT d1..dk, AGG(measure) FROM table GROUP BY d1..dk over
    // the selected dimensions (by dnumber) and runs it against the original
    // data. All selected dimensions must live in one (database, table).
    DataSet evaluate_cube(const std::string& cube, const std::vector<int64_t>& dnumbers,
                          const std::string& measure, CubeAgg agg);

    const std::filesystem::path& catalog_path() const { return catalog_; }

private:
    SqlOutcome catalog_sql(const std::string& statement);
    SqlOutcome catalog_sql_checked(const std::string& statement);
    bool cube_exists(const std::string& name);
    OpResult add_dimension_in_tx(const std::string& cube, const DimensionSpec& dim);
    std::vector<DimensionRecord> dimensions_of(const std::string& cube);

    template <typename Fn> OpResult with_write_tx(Fn&& body);

    Kernel& kernel_;
    std::filesystem::path catalog_;
    bool catalog_is_system_ = false;
    std::mutex mu_;
};

} // namespace ibdwb
