#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ibdwb/value.hpp"

namespace ibdwb::sql {

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp { Neg, Plus, Not };
enum class AggFunc { Count, Sum, Avg, Min, Max };

const char* binary_op_text(BinaryOp op);
const char* agg_func_name(AggFunc f);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { Literal, Column, Unary, Binary, Aggregate };

    Kind kind = Kind::Literal;
    Value literal;
    std::string column;      // Column: upper-cased identifier
    UnaryOp unary_op{};
    BinaryOp binary_op{};
    AggFunc agg{};
    bool count_star = false; // COUNT(*)
    ExprPtr lhs;             // Binary lhs, Unary operand, Aggregate argument
    ExprPtr rhs;             // Binary rhs
    uint32_t line = 0, col = 0;
};

struct SelectItem {
    ExprPtr expr;
    std::optional<std::string> alias; // upper-cased
    std::string source_text;          // the expression as written; names unaliased columns
};

struct OrderItem {
    bool by_ordinal = false;
    int64_t ordinal = 0;  // 1-based output position
    std::string column;   // upper-cased, when !by_ordinal
    bool descending = false;
};

struct SelectStmt {
    bool distinct = false;
    bool star = false;              // SELECT * (items empty)
    std::vector<SelectItem> items;
    std::string table;
    ExprPtr where;
    std::vector<std::string> group_by;
    std::vector<OrderItem> order_by;
};

struct ColumnDef {
    std::string name;
    ColumnType type;
    bool not_null = false;
};

struct CreateTableStmt {
    std::string table;
    std::vector<ColumnDef> columns;
    std::optional<std::string> primary_key;
};

struct DropTableStmt {
    std::string table;
};

struct InsertStmt {
    std::string table;
    std::vector<std::string> columns; // empty: positional over full schema
    std::vector<Value> values;        // literals only
};

struct DeleteStmt {
    std::string table;
    ExprPtr where;
};

struct Statement {
    std::variant<SelectStmt, CreateTableStmt, DropTableStmt, InsertStmt, DeleteStmt> node;
    std::string text; // original source text
};

// Parses exactly one statement (optional trailing ';').
// Throws Error(ParseError) with message "PARSE ERROR line L col C: ...".
Statement parse_statement(const std::string& text);

// Canonical text form; reparsing it yields a structurally equal statement.
std::string pretty_print(const Statement& stmt);

// Canonical structural dump used by tests for tree equality.
std::string dump(const Statement& stmt);
std::string dump(const Expr& expr);

bool is_reserved_word(const std::string& upper);

} // namespace ibdwb::sql
