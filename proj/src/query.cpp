#include "ibdwb/query.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace ibdwb::query {

using sql::AggFunc;
using sql::BinaryOp;
using sql::Expr;
using sql::SelectStmt;
using sql::UnaryOp;
using storage::Row;
using storage::TablePtr;
using storage::TableSchema;

namespace {

[[noreturn]] void type_error(const std::string& message) {
    throw Error(ErrorCode::TypeMismatch, message);
}

std::string upper_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

int64_t wrap_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

Value arithmetic(BinaryOp op, const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return Value();
    if (!a.is_numeric() || !b.is_numeric()) type_error("arithmetic requires numeric operands");
    if (a.is_integer() && b.is_integer()) {
        int64_t x = a.as_integer(), y = b.as_integer();
        switch (op) {
        case BinaryOp::Add: return Value::integer(wrap_add(x, y));
        case BinaryOp::Sub: return Value::integer(wrap_sub(x, y));
        case BinaryOp::Mul: return Value::integer(wrap_mul(x, y));
        case BinaryOp::Div:
            if (y == 0) return Value(); // division by zero yields NULL
            if (x == INT64_MIN && y == -1) return Value::integer(INT64_MIN);
            return Value::integer(x / y);
        default: break;
        }
    }
    double x = a.numeric_value(), y = b.numeric_value();
    switch (op) {
    case BinaryOp::Add: return Value::real(x + y);
    case BinaryOp::Sub: return Value::real(x - y);
    case BinaryOp::Mul: return Value::real(x * y);
    case BinaryOp::Div:
        if (y == 0.0) return Value();
        return Value::real(x / y);
    default: break;
    }
    type_error("unsupported arithmetic operator");
}

Value comparison(BinaryOp op, const Value& a, const Value& b) {
    // two-valued logic: any comparison involving NULL is FALSE
    if (a.is_null() || b.is_null()) return Value::boolean(false);
    int cmp;
    if (a.is_numeric() && b.is_numeric()) {
        if (a.is_integer() && b.is_integer()) {
            int64_t x = a.as_integer(), y = b.as_integer();
            cmp = x < y ? -1 : x > y ? 1 : 0;
        } else {
            double x = a.numeric_value(), y = b.numeric_value();
            cmp = x < y ? -1 : x > y ? 1 : 0;
        }
    } else if (a.is_text() && b.is_text()) {
        cmp = a.as_text().compare(b.as_text());
        cmp = cmp < 0 ? -1 : cmp > 0 ? 1 : 0;
    } else {
        type_error("cannot compare " + a.render() + " with " + b.render());
    }
    switch (op) {
    case BinaryOp::Eq: return Value::boolean(cmp == 0);
    case BinaryOp::Ne: return Value::boolean(cmp != 0);
    case BinaryOp::Lt: return Value::boolean(cmp < 0);
    case BinaryOp::Le: return Value::boolean(cmp <= 0);
    case BinaryOp::Gt: return Value::boolean(cmp > 0);
    case BinaryOp::Ge: return Value::boolean(cmp >= 0);
    default: break;
    }
    type_error("unsupported comparison operator");
}

bool truthy(const Value& v, const char* where) {
    if (v.is_null()) return false; // NULL counts as FALSE in boolean context
    if (v.is_boolean()) return v.as_boolean();
    type_error(std::string(where) + " requires a boolean value");
}

// Equality used by grouping and DISTINCT: NULLs match each other and
// numeric kinds compare by value.
bool values_same(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
    if (a.is_numeric() && b.is_numeric()) {
        if (a.is_integer() && b.is_integer()) return a.as_integer() == b.as_integer();
        return a.numeric_value() == b.numeric_value();
    }
    if (a.is_text() && b.is_text()) return a.as_text() == b.as_text();
    return false;
}

bool rows_same(const Row& a, const Row& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!values_same(a[i], b[i])) return false;
    return true;
}

// Total order for ORDER BY: NULL sorts first (ascending), then numerics,
// then text; DESC reverses the whole order.
int order_compare(const Value& a, const Value& b) {
    auto rank = [](const Value& v) { return v.is_null() ? 0 : v.is_numeric() ? 1 : 2; };
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (ra == 0) return 0;
    if (ra == 1) {
        if (a.is_integer() && b.is_integer()) {
            int64_t x = a.as_integer(), y = b.as_integer();
            return x < y ? -1 : x > y ? 1 : 0;
        }
        double x = a.numeric_value(), y = b.numeric_value();
        return x < y ? -1 : x > y ? 1 : 0;
    }
    int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : c > 0 ? 1 : 0;
}

struct GroupContext {
    const std::vector<size_t>* member_rows = nullptr; // indexes into base rows
    const Row* representative = nullptr;              // first row of the group, if any
};

class Evaluator {
public:
    Evaluator(const TableSchema& schema, const std::vector<Row>& rows)
        : schema_(schema), rows_(rows) {}

    Value row_value(const Expr& e, const Row& row) const {
        switch (e.kind) {
        case Expr::Kind::Literal:
            return e.literal;
        case Expr::Kind::Column: {
            int idx = schema_.column_index(e.column);
            if (idx < 0) throw Error(ErrorCode::UnknownColumn, "unknown column " + e.column);
            return row[static_cast<size_t>(idx)];
        }
        case Expr::Kind::Unary: {
            if (e.unary_op == UnaryOp::Not) return Value::boolean(!truthy(row_value(*e.lhs, row), "NOT"));
            Value v = row_value(*e.lhs, row);
            if (v.is_null()) return v;
            if (v.is_integer()) return Value::integer(wrap_sub(0, v.as_integer()));
            if (v.is_real()) return Value::real(-v.as_real());
            type_error("cannot negate a non-numeric value");
        }
        case Expr::Kind::Binary: {
            if (e.binary_op == BinaryOp::And || e.binary_op == BinaryOp::Or) {
                // both sides always evaluated: type errors are row-independent
                bool l = truthy(row_value(*e.lhs, row), "AND/OR");
                bool r = truthy(row_value(*e.rhs, row), "AND/OR");
                return Value::boolean(e.binary_op == BinaryOp::And ? (l && r) : (l || r));
            }
            Value l = row_value(*e.lhs, row);
            Value r = row_value(*e.rhs, row);
            switch (e.binary_op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
                return arithmetic(e.binary_op, l, r);
            default:
                return comparison(e.binary_op, l, r);
            }
        }
        case Expr::Kind::Aggregate:
            type_error("aggregate used outside a grouped context");
        }
        type_error("unreachable expression kind");
    }

    Value group_value(const Expr& e, const GroupContext& g) const {
        switch (e.kind) {
        case Expr::Kind::Literal:
            return e.literal;
        case Expr::Kind::Column:
            // validated against GROUP BY: constant within the group
            if (!g.representative) return Value();
            return row_value(e, *g.representative);
        case Expr::Kind::Unary: {
            if (e.unary_op == UnaryOp::Not) return Value::boolean(!truthy(group_value(*e.lhs, g), "NOT"));
            Value v = group_value(*e.lhs, g);
            if (v.is_null()) return v;
            if (v.is_integer()) return Value::integer(wrap_sub(0, v.as_integer()));
            if (v.is_real()) return Value::real(-v.as_real());
            type_error("cannot negate a non-numeric value");
        }
        case Expr::Kind::Binary: {
            if (e.binary_op == BinaryOp::And || e.binary_op == BinaryOp::Or) {
                bool l = truthy(group_value(*e.lhs, g), "AND/OR");
                bool r = truthy(group_value(*e.rhs, g), "AND/OR");
                return Value::boolean(e.binary_op == BinaryOp::And ? (l && r) : (l || r));
            }
            Value l = group_value(*e.lhs, g);
            Value r = group_value(*e.rhs, g);
            switch (e.binary_op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
                return arithmetic(e.binary_op, l, r);
            default:
                return comparison(e.binary_op, l, r);
            }
        }
        case Expr::Kind::Aggregate:
            return aggregate_value(e, g);
        }
        type_error("unreachable expression kind");
    }

private:
    Value aggregate_value(const Expr& e, const GroupContext& g) const {
        const auto& members = *g.member_rows;
        if (e.agg == AggFunc::Count && e.count_star)
            return Value::integer(static_cast<int64_t>(members.size()));

        std::vector<Value> inputs;
        inputs.reserve(members.size());
        for (size_t idx : members) {
            Value v = row_value(*e.lhs, rows_[idx]);
            if (!v.is_null()) inputs.push_back(std::move(v)); // aggregates skip NULLs
        }
        switch (e.agg) {
        case AggFunc::Count:
            return Value::integer(static_cast<int64_t>(inputs.size()));
        case AggFunc::Sum: {
            if (inputs.empty()) return Value();
            bool any_real = false;
            for (const Value& v : inputs) {
                if (!v.is_numeric()) type_error("SUM requires numeric input");
                if (v.is_real()) any_real = true;
            }
            if (any_real) {
                double total = 0;
                for (const Value& v : inputs) total += v.numeric_value();
                return Value::real(total);
            }
            int64_t total = 0;
            for (const Value& v : inputs) total = wrap_add(total, v.as_integer());
            return Value::integer(total);
        }
        case AggFunc::Avg: {
            if (inputs.empty()) return Value();
            double total = 0;
            for (const Value& v : inputs) {
                if (!v.is_numeric()) type_error("AVG requires numeric input");
                total += v.numeric_value();
            }
            return Value::real(total / static_cast<double>(inputs.size()));
        }
        case AggFunc::Min:
        case AggFunc::Max: {
            if (inputs.empty()) return Value();
            bool want_min = e.agg == AggFunc::Min;
            const Value* best = &inputs[0];
            for (const Value& v : inputs) {
                if (v.is_boolean() || best->is_boolean()) type_error("MIN/MAX over boolean input");
                if (v.is_text() != best->is_text()) type_error("MIN/MAX over mixed input types");
                int c;
                if (v.is_text())
                    c = v.as_text().compare(best->as_text());
                else if (v.is_integer() && best->is_integer())
                    c = v.as_integer() < best->as_integer() ? -1
                        : v.as_integer() > best->as_integer() ? 1 : 0;
                else
                    c = v.numeric_value() < best->numeric_value() ? -1
                        : v.numeric_value() > best->numeric_value() ? 1 : 0;
                if (want_min ? c < 0 : c > 0) best = &v;
            }
            return *best;
        }
        }
        type_error("unreachable aggregate");
    }

    const TableSchema& schema_;
    const std::vector<Row>& rows_;
};

bool contains_aggregate(const Expr& e) {
    if (e.kind == Expr::Kind::Aggregate) return true;
    if (e.lhs && contains_aggregate(*e.lhs)) return true;
    if (e.rhs && contains_aggregate(*e.rhs)) return true;
    return false;
}

void validate_columns(const Expr& e, const TableSchema& schema) {
    if (e.kind == Expr::Kind::Column && schema.column_index(e.column) < 0)
        throw Error(ErrorCode::UnknownColumn, "unknown column " + e.column);
    if (e.lhs) validate_columns(*e.lhs, schema);
    if (e.rhs) validate_columns(*e.rhs, schema);
}

Value projected(Value v) {
    if (v.is_boolean()) return Value::integer(v.as_boolean() ? 1 : 0);
    return v;
}

std::string group_key_token(const Value& v) {
    if (v.is_null()) return "n";
    if (v.is_numeric()) {
        // integers and equal-valued doubles land in the same group
        double d = v.numeric_value();
        if (v.is_integer() || (d == static_cast<int64_t>(d) && std::abs(d) < 1e15))
            return "i" + std::to_string(v.is_integer() ? v.as_integer() : static_cast<int64_t>(d));
        return "d" + format_double(d);
    }
    return "t" + v.as_text();
}

} // namespace

Value evaluate_row_expr(const Expr& expr, const TableSchema& schema, const Row& row) {
    std::vector<Row> none;
    Evaluator ev(schema, none);
    return ev.row_value(expr, row);
}

bool predicate_accepts(const Expr& expr, const TableSchema& schema, const Row& row) {
    Value v = evaluate_row_expr(expr, schema, row);
    if (v.is_null()) return false;
    if (v.is_boolean()) return v.as_boolean();
    type_error("WHERE requires a boolean predicate");
}

DataSet evaluate_select(const SelectStmt& stmt, const std::string& statement_text,
                        const TableSource& source) {
    TablePtr table = source.find_table(stmt.table);
    if (!table) throw Error(ErrorCode::UnknownTable, "unknown table " + stmt.table);
    const TableSchema& schema = table->schema;

    for (const auto& item : stmt.items) validate_columns(*item.expr, schema);
    if (stmt.where) validate_columns(*stmt.where, schema);
    for (const auto& key : stmt.group_by)
        if (schema.column_index(key) < 0)
            throw Error(ErrorCode::UnknownColumn, "unknown column " + key);

    // WHERE filter
    std::vector<size_t> selected;
    selected.reserve(table->rows.size());
    for (size_t i = 0; i < table->rows.size(); ++i) {
        if (!stmt.where || predicate_accepts(*stmt.where, schema, table->rows[i]))
            selected.push_back(i);
    }

    bool grouped = !stmt.group_by.empty();
    for (const auto& item : stmt.items)
        if (contains_aggregate(*item.expr)) grouped = true;

    DataSet out;
    out.statement = statement_text;
    Evaluator ev(schema, table->rows);

    if (stmt.star) {
        for (const auto& col : schema.columns) out.columns.push_back(col.name);
        for (size_t idx : selected) out.rows.push_back(table->rows[idx]);
    } else {
        for (const auto& item : stmt.items)
            out.columns.push_back(item.alias ? *item.alias : item.source_text);
        if (!grouped) {
            for (size_t idx : selected) {
                Row r;
                r.reserve(stmt.items.size());
                for (const auto& item : stmt.items)
                    r.push_back(projected(ev.row_value(*item.expr, table->rows[idx])));
                out.rows.push_back(std::move(r));
            }
        } else {
            // groups in first-seen storage order
            std::vector<std::vector<size_t>> groups;
            std::vector<size_t> rep;
            if (stmt.group_by.empty()) {
                groups.emplace_back(selected);
                rep.push_back(selected.empty() ? SIZE_MAX : selected[0]);
            } else {
                std::map<std::string, size_t> position;
                for (size_t idx : selected) {
                    std::string key;
                    for (const auto& gcol : stmt.group_by) {
                        int ci = schema.column_index(gcol);
                        key += group_key_token(table->rows[idx][static_cast<size_t>(ci)]);
                        key.push_back('\x1f');
                    }
                    auto [it, fresh] = position.try_emplace(key, groups.size());
                    if (fresh) {
                        groups.emplace_back();
                        rep.push_back(idx);
                    }
                    groups[it->second].push_back(idx);
                }
            }
            for (size_t gi = 0; gi < groups.size(); ++gi) {
                GroupContext ctx;
                ctx.member_rows = &groups[gi];
                const Row* rep_row = rep[gi] == SIZE_MAX ? nullptr : &table->rows[rep[gi]];
                ctx.representative = rep_row;
                Row r;
                r.reserve(stmt.items.size());
                for (const auto& item : stmt.items)
                    r.push_back(projected(ev.group_value(*item.expr, ctx)));
                out.rows.push_back(std::move(r));
            }
        }
    }

    if (stmt.distinct) {
        std::vector<Row> unique;
        for (auto& row : out.rows) {
            bool seen = false;
            for (const auto& u : unique)
                if (rows_same(u, row)) {
                    seen = true;
                    break;
                }
            if (!seen) unique.push_back(std::move(row));
        }
        out.rows = std::move(unique);
    }

    if (!stmt.order_by.empty()) {
        // Resolve each key to an output column, or to a hidden base column
        // for plain row queries.
        struct SortKey {
            bool output = true;
            size_t column = 0;       // output column index
            int base_column = -1;    // schema column (hidden key)
            bool descending = false;
        };
        std::vector<SortKey> keys;
        bool plain = !grouped && !stmt.distinct;
        for (const auto& o : stmt.order_by) {
            SortKey k;
            k.descending = o.descending;
            if (o.by_ordinal) {
                if (o.ordinal < 1 || o.ordinal > static_cast<int64_t>(out.columns.size()))
                    throw Error(ErrorCode::UnknownColumn, "ORDER BY position out of range");
                k.column = static_cast<size_t>(o.ordinal - 1);
            } else {
                size_t found = SIZE_MAX;
                for (size_t c = 0; c < out.columns.size(); ++c) {
                    if (upper_copy(out.columns[c]) == o.column) {
                        found = c;
                        break;
                    }
                }
                if (found != SIZE_MAX) {
                    k.column = found;
                } else if (plain && schema.column_index(o.column) >= 0) {
                    k.output = false;
                    k.base_column = schema.column_index(o.column);
                } else {
                    throw Error(ErrorCode::UnknownColumn, "unknown column " + o.column);
                }
            }
            keys.push_back(k);
        }
        std::vector<size_t> order(out.rows.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            for (const auto& k : keys) {
                const Value& va = k.output ? out.rows[a][k.column]
                                           : table->rows[selected[a]][static_cast<size_t>(k.base_column)];
                const Value& vb = k.output ? out.rows[b][k.column]
                                           : table->rows[selected[b]][static_cast<size_t>(k.base_column)];
                int c = order_compare(va, vb);
                if (k.descending) c = -c;
                if (c != 0) return c < 0;
            }
            return false;
        });
        std::vector<Row> sorted;
        sorted.reserve(out.rows.size());
        for (size_t i : order) sorted.push_back(std::move(out.rows[i]));
        out.rows = std::move(sorted);
    }

    return out;
}

} // namespace ibdwb::query
