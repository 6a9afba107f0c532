#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ibdwb/query.hpp"
#include "ibdwb/storage.hpp"
#include "support/oracle.hpp"
#include "support/randgen.hpp"
#include "support/testutil.hpp"

using namespace ibdwb;
using namespace ibdwb::storage;
using testutil::TempDir;

namespace {

struct OneTable : query::TableSource {
    explicit OneTable(Table t) : table(std::make_shared<const Table>(std::move(t))) {}
    TablePtr find_table(const std::string& name) const override {
        return name == table->schema.name ? table : nullptr;
    }
    TablePtr table;
};

Table make_t_with_x() {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"X", ColumnType::integer(), true}};
    t.rows = {{Value::integer(1)}, {Value::integer(2)}, {Value()}};
    return t;
}

DataSet eval(const std::string& stmt_text, const query::TableSource& src) {
    auto stmt = sql::parse_statement(stmt_text);
    return query::evaluate_select(std::get<sql::SelectStmt>(stmt.node), stmt_text, src);
}

DataSet eval_oracle(const std::string& stmt_text, const Table& table) {
    auto stmt = sql::parse_statement(stmt_text);
    return oracle::evaluate(std::get<sql::SelectStmt>(stmt.node), stmt_text, table);
}

} // namespace

TEST_CASE("select star over an empty table keeps schema column order") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"B", ColumnType::integer(), true}, {"A", ColumnType::real(), true}};
    OneTable src(std::move(t));
    DataSet out = eval("SELECT * FROM T", src);
    CHECK(out.columns == std::vector<std::string>{"B", "A"});
    CHECK(out.rows.empty());
    CHECK(out.statement == "SELECT * FROM T");
}

TEST_CASE("COUNT(*) and SUM skip NULLs the same way the oracle does") {
    OneTable src(make_t_with_x());
    std::string stmt = "SELECT COUNT(*), SUM(X) FROM T";
    // frozen from the hand-computed NULL rules: 3 rows, 1+2
    DataSet out = eval(stmt, src);
    REQUIRE(out.rows.size() == 1);
    CHECK(out.rows[0][0] == Value::integer(3));
    CHECK(out.rows[0][1] == Value::integer(3));
    CHECK(testutil::sequence_equal(out, eval_oracle(stmt, *src.table)));
}

TEST_CASE("aggregate base cases over empty input") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"X", ColumnType::integer(), true}};
    OneTable src(std::move(t));
    DataSet out = eval("SELECT COUNT(*), COUNT(X), SUM(X), AVG(X), MIN(X), MAX(X) FROM T", src);
    REQUIRE(out.rows.size() == 1);
    CHECK(out.rows[0][0] == Value::integer(0));
    CHECK(out.rows[0][1] == Value::integer(0));
    CHECK(out.rows[0][2].is_null());
    CHECK(out.rows[0][3].is_null());
    CHECK(out.rows[0][4].is_null());
    CHECK(out.rows[0][5].is_null());
}

TEST_CASE("COUNT(expr) ignores NULLs") {
    OneTable src(make_t_with_x());
    DataSet out = eval("SELECT COUNT(X) FROM T", src);
    CHECK(out.rows[0][0] == Value::integer(2));
}

TEST_CASE("two-valued NULL comparisons and NULL division") {
    OneTable src(make_t_with_x());
    // X = NULL row: comparison is FALSE, so NOT(comparison) is TRUE
    DataSet direct = eval("SELECT X FROM T WHERE X = 1", src);
    CHECK(direct.rows.size() == 1);
    DataSet negated = eval("SELECT X FROM T WHERE NOT X = 1", src);
    CHECK(negated.rows.size() == 2); // includes the NULL row

    DataSet divided = eval("SELECT X / 0 FROM T", src);
    for (const auto& row : divided.rows) CHECK(row[0].is_null());
}

TEST_CASE("WHERE must be boolean") {
    OneTable src(make_t_with_x());
    CHECK_THROWS_AS(eval("SELECT X FROM T WHERE X + 1", src), Error);
}

TEST_CASE("output naming: alias wins, else source text") {
    OneTable src(make_t_with_x());
    DataSet out = eval("SELECT X + 1 AS NEXT_X, X * 2 FROM T WHERE X = 1", src);
    CHECK(out.columns == std::vector<std::string>{"NEXT_X", "X * 2"});
}

TEST_CASE("DISTINCT dedupes with NULLs equal and preserves first-seen order") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"X", ColumnType::integer(), true}};
    t.rows = {{Value::integer(2)}, {Value()}, {Value::integer(2)}, {Value()}, {Value::integer(1)}};
    OneTable src(std::move(t));
    DataSet out = eval("SELECT DISTINCT X FROM T", src);
    REQUIRE(out.rows.size() == 3);
    CHECK(out.rows[0][0] == Value::integer(2));
    CHECK(out.rows[1][0].is_null());
    CHECK(out.rows[2][0] == Value::integer(1));
}

TEST_CASE("ORDER BY: ordinals, DESC reversal, NULLs first ascending") {
    OneTable src(make_t_with_x());
    DataSet asc = eval("SELECT X FROM T ORDER BY 1", src);
    CHECK(asc.rows[0][0].is_null());
    CHECK(asc.rows[1][0] == Value::integer(1));
    DataSet desc = eval("SELECT X FROM T ORDER BY 1 DESC", src);
    CHECK(desc.rows[0][0] == Value::integer(2));
    CHECK(desc.rows[2][0].is_null());
}

TEST_CASE("ORDER BY resolves aliases and falls back to base columns") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"A", ColumnType::integer(), true}, {"B", ColumnType::integer(), true}};
    t.rows = {{Value::integer(1), Value::integer(9)},
              {Value::integer(2), Value::integer(3)},
              {Value::integer(3), Value::integer(6)}};
    OneTable src(std::move(t));
    DataSet by_alias = eval("SELECT A AS K FROM T ORDER BY K DESC", src);
    CHECK(by_alias.rows[0][0] == Value::integer(3));
    // B is not projected: usable only for plain row queries
    DataSet hidden = eval("SELECT A FROM T ORDER BY B", src);
    CHECK(hidden.rows[0][0] == Value::integer(2));
    CHECK_THROWS_AS(eval("SELECT DISTINCT A FROM T ORDER BY B", src), Error);
}

TEST_CASE("grouping keeps first-seen order and NULL keys group together") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"G", ColumnType::varchar(4), true}, {"X", ColumnType::integer(), true}};
    auto row = [](const char* g, int x) {
        return Row{g ? Value::text(g) : Value(), Value::integer(x)};
    };
    t.rows = {row("b", 1), row(nullptr, 5), row("a", 2), row("b", 3), row(nullptr, 7)};
    OneTable src(std::move(t));
    DataSet out = eval("SELECT G, SUM(X) FROM T GROUP BY G", src);
    REQUIRE(out.rows.size() == 3);
    CHECK(out.rows[0][0] == Value::text("b"));
    CHECK(out.rows[0][1] == Value::integer(4));
    CHECK(out.rows[1][0].is_null());
    CHECK(out.rows[1][1] == Value::integer(12));
    CHECK(out.rows[2][0] == Value::text("a"));
}

TEST_CASE("boolean items project as INTEGER 0/1") {
    OneTable src(make_t_with_x());
    DataSet out = eval("SELECT X < 2 FROM T", src);
    CHECK(out.rows[0][0] == Value::integer(1));
    CHECK(out.rows[1][0] == Value::integer(0));
    CHECK(out.rows[2][0] == Value::integer(0)); // NULL comparison is FALSE
}

TEST_CASE("type errors: SUM over text, text/number comparison") {
    Table t;
    t.schema.name = "T";
    t.schema.columns = {{"S", ColumnType::varchar(4), true}};
    t.rows = {{Value::text("a")}};
    OneTable src(std::move(t));
    CHECK_THROWS_AS(eval("SELECT SUM(S) FROM T", src), Error);
    CHECK_THROWS_AS(eval("SELECT S FROM T WHERE S = 1", src), Error);
    DataSet minmax = eval("SELECT MIN(S), MAX(S) FROM T", src);
    CHECK(minmax.rows[0][0] == Value::text("a"));
}

TEST_CASE("determinism: same statement and database bytes give identical output bytes") {
    TempDir dir("query-determinism");
    randgen::Rng rng(99);
    auto spec = randgen::random_table(rng, "T", 5, 60);
    auto db = open_database(dir / "db", true);
    REQUIRE(db->execute_autocommit(spec.create_statement).success);
    for (const auto& ins : spec.insert_statements)
        REQUIRE(db->execute_autocommit(ins).success);
    std::string stmt = randgen::random_select(rng, spec.table.schema, true);

    SqlOutcome first = db->execute_autocommit(stmt);
    REQUIRE(first.success);

    // byte-identical copy of the directory
    std::filesystem::copy(dir / "db", dir / "copy",
                          std::filesystem::copy_options::recursive);
    auto copy = open_database(dir / "copy", false);
    SqlOutcome second = copy->execute_autocommit(stmt);
    REQUIRE(second.success);
    CHECK(first.dataset == second.dataset);
    SqlOutcome again = db->execute_autocommit(stmt);
    CHECK(first.dataset == again.dataset);
}

TEST_CASE("property: evaluator matches the naive oracle on 500 random SELECTs") {
    TempDir dir("query-oracle");
    std::mt19937_64 seeds(20250810);
    int executed = 0;
    int table_round = 0;
    while (executed < 500) {
        randgen::Rng rng(seeds());
        auto spec = randgen::random_table(rng, "T" + std::to_string(table_round), 8, 200);
        auto db = open_database(dir / ("db" + std::to_string(table_round)), true);
        REQUIRE(db->execute_autocommit(spec.create_statement).success);
        for (const auto& ins : spec.insert_statements)
            REQUIRE(db->execute_autocommit(ins).success);
        ++table_round;

        for (int q = 0; q < 25 && executed < 500; ++q, ++executed) {
            bool total = q % 3 == 0;
            std::string stmt_text = randgen::random_select(rng, spec.table.schema, total);
            CAPTURE(stmt_text);
            SqlOutcome got = db->execute_autocommit(stmt_text);
            REQUIRE_MESSAGE(got.success, (got.error ? got.error->message : ""));
            DataSet want = eval_oracle(stmt_text, spec.table);
            if (total)
                REQUIRE(testutil::sequence_equal(got.dataset, want));
            else
                REQUIRE(testutil::rowset_equal(got.dataset, want));
            REQUIRE(got.dataset.columns == want.columns);
        }
    }
}
