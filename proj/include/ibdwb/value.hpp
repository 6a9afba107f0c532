#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ibdwb/common.hpp"

namespace ibdwb {

struct ColumnType {
    enum class Base { Integer, Double, Varchar };

    Base base = Base::Integer;
    uint32_t length = 0; // Varchar only, 1..65535

    static ColumnType integer() { return {Base::Integer, 0}; }
    static ColumnType real() { return {Base::Double, 0}; }
    static ColumnType varchar(uint32_t n) { return {Base::Varchar, n}; }

    std::string to_string() const; // INTEGER | DOUBLE | VARCHAR(n)
    static std::optional<ColumnType> parse(std::string_view text);

    bool operator==(const ColumnType&) const = default;
};

// A single SQL value. Bool only appears transiently while evaluating
// predicates; projected results carry it as INTEGER 0/1.
class Value {
public:
    Value() = default; // SQL NULL

    static Value integer(int64_t v) { return Value(Payload{v}); }
    static Value real(double v) { return Value(Payload{v}); }
    static Value text(std::string v) { return Value(Payload{std::move(v)}); }
    static Value boolean(bool v) { return Value(Payload{v}); }

    bool is_null() const { return v_.index() == 0; }
    bool is_integer() const { return v_.index() == 1; }
    bool is_real() const { return v_.index() == 2; }
    bool is_text() const { return v_.index() == 3; }
    bool is_boolean() const { return v_.index() == 4; }
    bool is_numeric() const { return is_integer() || is_real(); }

    int64_t as_integer() const { return std::get<1>(v_); }
    double as_real() const { return std::get<2>(v_); }
    const std::string& as_text() const { return std::get<3>(v_); }
    bool as_boolean() const { return std::get<4>(v_); }

    // Promoted numeric view; caller checks is_numeric() first.
    double numeric_value() const { return is_integer() ? static_cast<double>(as_integer()) : as_real(); }

    std::string render() const; // display form; NULL renders as "NULL"

    bool operator==(const Value&) const = default;

private:
    using Payload = std::variant<std::monostate, int64_t, double, std::string, bool>;
    explicit Value(Payload p) : v_(std::move(p)) {}
    Payload v_;
};

// Shortest decimal text that round-trips through binary64.
std::string format_double(double v);
// Same, but guaranteed to lex as a DOUBLE literal (appends ".0" when needed).
std::string double_literal_text(double v);
// Quote a string as a SQL literal ('' escape).
std::string sql_quote(std::string_view text);

struct DataSet {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    std::string statement; // the statement that produced this result

    bool operator==(const DataSet&) const = default;
};

struct SqlError {
    ErrorCode code;
    std::string message;
    bool operator==(const SqlError&) const = default;
};

struct SqlOutcome {
    bool success = false;
    DataSet dataset; // empty for non-SELECT and on failure
    std::optional<SqlError> error;

    static SqlOutcome ok(DataSet ds) {
        SqlOutcome o;
        o.success = true;
        o.dataset = std::move(ds);
        return o;
    }
    static SqlOutcome fail(ErrorCode code, std::string message, std::string statement) {
        SqlOutcome o;
        o.success = false;
        o.dataset.statement = std::move(statement);
        o.error = SqlError{code, std::move(message)};
        return o;
    }
};

} // namespace ibdwb
