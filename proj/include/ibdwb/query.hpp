#pragma once

#include <string>

#include "ibdwb/sql_ast.hpp"
#include "ibdwb/storage.hpp"

namespace ibdwb::query {

// Table lookup used during evaluation; a Transaction adapts onto this.
class TableSource {
public:
    virtual ~TableSource() = default;
    virtual storage::TablePtr find_table(const std::string& upper_name) const = 0;
};

// Evaluates a SELECT: filter, group, aggregate, project, DISTINCT, ORDER BY.
// Unordered results keep storage row order; grouped output keeps first-seen
// group order. Throws Error on UnknownTable/UnknownColumn/TypeMismatch.
//
// Semantics, shared with DELETE predicates (two-valued NULL handling):
//   - any comparison involving NULL is FALSE; there is no UNKNOWN
//   - arithmetic with a NULL operand yields NULL; division by zero yields NULL
//   - AND/OR/NOT take boolean operands (NULL counts as FALSE); both sides of
//     AND/OR are always evaluated, so type errors surface on every row
//   - INTEGER op INTEGER stays INTEGER (division truncates); mixing with
//     DOUBLE promotes to DOUBLE; text comparison is by code point
//   - aggregates skip NULLs; COUNT of empty input is 0, the rest are NULL
//   - boolean outputs are projected as INTEGER 0/1
DataSet evaluate_select(const sql::SelectStmt& stmt, const std::string& statement_text,
                        const TableSource& source);

// Row-level expression evaluation (no aggregates); used by DELETE ... WHERE.
Value evaluate_row_expr(const sql::Expr& expr, const storage::TableSchema& schema,
                        const storage::Row& row);

// True when the WHERE predicate accepts the row (NULL result rejects).
bool predicate_accepts(const sql::Expr& expr, const storage::TableSchema& schema,
                       const storage::Row& row);

} // namespace ibdwb::query
