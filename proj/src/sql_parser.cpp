#include "ibdwb/sql_ast.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace ibdwb::sql {

const char* binary_op_text(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "<>";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "AND";
    case BinaryOp::Or: return "OR";
    }
    return "?";
}

const char* agg_func_name(AggFunc f) {
    switch (f) {
    case AggFunc::Count: return "COUNT";
    case AggFunc::Sum: return "SUM";
    case AggFunc::Avg: return "AVG";
    case AggFunc::Min: return "MIN";
    case AggFunc::Max: return "MAX";
    }
    return "?";
}

namespace {

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "SELECT", "DISTINCT", "FROM", "WHERE", "GROUP",  "BY",     "ORDER",  "ASC",
        "DESC",   "AS",       "AND",  "OR",    "NOT",    "NULL",   "CREATE", "TABLE",
        "DROP",   "INSERT",   "INTO", "VALUES", "DELETE", "PRIMARY", "KEY",
        "COUNT",  "SUM",      "AVG",  "MIN",   "MAX",    "INTEGER", "DOUBLE", "VARCHAR",
    };
    return words;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

struct Token {
    enum class Kind { Ident, Keyword, Int, Dbl, Str, Sym, End };
    Kind kind = Kind::End;
    std::string text;  // raw source text (Str: decoded content)
    std::string upper; // Ident/Keyword
    int64_t ival = 0;
    double dval = 0;
    uint32_t line = 1, col = 1;
    size_t begin = 0, end = 0;
};

[[noreturn]] void fail_at(uint32_t line, uint32_t col, const std::string& message) {
    std::ostringstream os;
    os << "PARSE ERROR line " << line << " col " << col << ": " << message;
    throw Error(ErrorCode::ParseError, os.str());
}

[[noreturn]] void fail_tok(const Token& t, const std::string& message) {
    fail_at(t.line, t.col, message);
}

std::string describe(const Token& t) {
    switch (t.kind) {
    case Token::Kind::End: return "end of statement";
    case Token::Kind::Str: return "string literal";
    default: return "'" + t.text + "'";
    }
}

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.col = col_;
            t.begin = pos_;
            if (pos_ >= src_.size()) {
                t.kind = Token::Kind::End;
                t.end = pos_;
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                lex_word(t);
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(t);
            } else if (c == '\'') {
                lex_string(t);
            } else {
                lex_symbol(t);
            }
            t.end = pos_;
            out.push_back(std::move(t));
        }
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    void lex_word(Token& t) {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            advance();
        t.text = src_.substr(start, pos_ - start);
        t.upper = to_upper(t.text);
        t.kind = reserved_words().count(t.upper) ? Token::Kind::Keyword : Token::Kind::Ident;
    }

    void lex_number(Token& t) {
        size_t start = pos_;
        bool real = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            real = true;
            advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t mark = pos_;
            uint32_t mark_line = line_, mark_col = col_;
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                real = true;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
            } else {
                // not an exponent after all (e.g. "1e" followed by an identifier char)
                pos_ = mark;
                line_ = mark_line;
                col_ = mark_col;
            }
        }
        t.text = src_.substr(start, pos_ - start);
        if (real) {
            t.kind = Token::Kind::Dbl;
            t.dval = std::strtod(t.text.c_str(), nullptr);
        } else {
            t.kind = Token::Kind::Int;
            auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.ival);
            if (res.ec != std::errc()) fail_tok(t, "integer literal out of range");
        }
    }

    void lex_string(Token& t) {
        t.kind = Token::Kind::Str;
        advance(); // opening quote
        std::string content;
        for (;;) {
            if (pos_ >= src_.size()) fail_tok(t, "unterminated string literal");
            char c = src_[pos_];
            if (c == '\'') {
                advance();
                if (pos_ < src_.size() && src_[pos_] == '\'') {
                    content.push_back('\'');
                    advance();
                    continue;
                }
                break;
            }
            content.push_back(c);
            advance();
        }
        t.text = std::move(content);
    }

    void lex_symbol(Token& t) {
        t.kind = Token::Kind::Sym;
        char c = src_[pos_];
        advance();
        if ((c == '<' && pos_ < src_.size() && (src_[pos_] == '=' || src_[pos_] == '>')) ||
            (c == '>' && pos_ < src_.size() && src_[pos_] == '=')) {
            t.text = std::string(1, c) + src_[pos_];
            advance();
            return;
        }
        static const std::string singles = "(),*=<>+-/;";
        if (singles.find(c) == std::string::npos)
            fail_tok(t, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
    }

    const std::string& src_;
    size_t pos_ = 0;
    uint32_t line_ = 1, col_ = 1;
};

class Parser {
public:
    Parser(const std::string& src, std::vector<Token> tokens)
        : src_(src), tokens_(std::move(tokens)) {}

    Statement run() {
        Statement stmt;
        stmt.text = src_;
        const Token& t = peek();
        if (t.kind != Token::Kind::Keyword) fail_tok(t, "expected a statement, got " + describe(t));
        if (t.upper == "SELECT")
            stmt.node = parse_select();
        else if (t.upper == "CREATE")
            stmt.node = parse_create();
        else if (t.upper == "DROP")
            stmt.node = parse_drop();
        else if (t.upper == "INSERT")
            stmt.node = parse_insert();
        else if (t.upper == "DELETE")
            stmt.node = parse_delete();
        else
            fail_tok(t, "expected a statement, got " + describe(t));
        accept_sym(";");
        if (peek().kind != Token::Kind::End)
            fail_tok(peek(), "unexpected trailing input: " + describe(peek()));
        return stmt;
    }

private:
    const Token& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    const Token& take() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

    bool at_keyword(const char* kw) const {
        return peek().kind == Token::Kind::Keyword && peek().upper == kw;
    }
    bool accept_keyword(const char* kw) {
        if (!at_keyword(kw)) return false;
        take();
        return true;
    }
    const Token& expect_keyword(const char* kw) {
        if (!at_keyword(kw)) fail_tok(peek(), std::string("expected ") + kw + ", got " + describe(peek()));
        return take();
    }
    bool at_sym(const char* s) const {
        return peek().kind == Token::Kind::Sym && peek().text == s;
    }
    bool accept_sym(const char* s) {
        if (!at_sym(s)) return false;
        take();
        return true;
    }
    const Token& expect_sym(const char* s) {
        if (!at_sym(s)) fail_tok(peek(), std::string("expected '") + s + "', got " + describe(peek()));
        return take();
    }
    std::string expect_identifier(const char* what) {
        const Token& t = peek();
        if (t.kind != Token::Kind::Ident)
            fail_tok(t, std::string("expected ") + what + ", got " + describe(t));
        take();
        return t.upper;
    }

    // ----- expressions -----

    ExprPtr make_expr(Expr::Kind kind, const Token& at) {
        auto e = std::make_unique<Expr>();
        e->kind = kind;
        e->line = at.line;
        e->col = at.col;
        return e;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (at_keyword("OR")) {
            const Token& op = take();
            auto node = make_expr(Expr::Kind::Binary, op);
            node->binary_op = BinaryOp::Or;
            node->lhs = std::move(lhs);
            node->rhs = parse_and();
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (at_keyword("AND")) {
            const Token& op = take();
            auto node = make_expr(Expr::Kind::Binary, op);
            node->binary_op = BinaryOp::And;
            node->lhs = std::move(lhs);
            node->rhs = parse_not();
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (at_keyword("NOT")) {
            const Token& op = take();
            auto node = make_expr(Expr::Kind::Unary, op);
            node->unary_op = UnaryOp::Not;
            node->lhs = parse_not();
            return node;
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_additive();
        static const char* ops[] = {"<>", "<=", ">=", "=", "<", ">"};
        for (const char* s : ops) {
            if (!at_sym(s)) continue;
            const Token& op = take();
            auto node = make_expr(Expr::Kind::Binary, op);
            node->binary_op = s == std::string("=")    ? BinaryOp::Eq
                              : s == std::string("<>") ? BinaryOp::Ne
                              : s == std::string("<")  ? BinaryOp::Lt
                              : s == std::string("<=") ? BinaryOp::Le
                              : s == std::string(">")  ? BinaryOp::Gt
                                                       : BinaryOp::Ge;
            node->lhs = std::move(lhs);
            node->rhs = parse_additive();
            return node;
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        for (;;) {
            BinaryOp op;
            if (at_sym("+"))
                op = BinaryOp::Add;
            else if (at_sym("-"))
                op = BinaryOp::Sub;
            else
                break;
            const Token& t = take();
            auto node = make_expr(Expr::Kind::Binary, t);
            node->binary_op = op;
            node->lhs = std::move(lhs);
            node->rhs = parse_multiplicative();
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            BinaryOp op;
            if (at_sym("*"))
                op = BinaryOp::Mul;
            else if (at_sym("/"))
                op = BinaryOp::Div;
            else
                break;
            const Token& t = take();
            auto node = make_expr(Expr::Kind::Binary, t);
            node->binary_op = op;
            node->lhs = std::move(lhs);
            node->rhs = parse_unary();
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (at_sym("-") || at_sym("+")) {
            const Token& t = take();
            bool neg = t.text == "-";
            ExprPtr operand = parse_unary();
            if (neg && operand->kind == Expr::Kind::Literal && operand->literal.is_integer()) {
                operand->literal = Value::integer(-operand->literal.as_integer());
                return operand;
            }
            if (neg && operand->kind == Expr::Kind::Literal && operand->literal.is_real()) {
                operand->literal = Value::real(-operand->literal.as_real());
                return operand;
            }
            if (!neg) return operand; // unary plus is the identity
            auto node = make_expr(Expr::Kind::Unary, t);
            node->unary_op = UnaryOp::Neg;
            node->lhs = std::move(operand);
            return node;
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
        case Token::Kind::Int: {
            take();
            auto e = make_expr(Expr::Kind::Literal, t);
            e->literal = Value::integer(t.ival);
            return e;
        }
        case Token::Kind::Dbl: {
            take();
            auto e = make_expr(Expr::Kind::Literal, t);
            e->literal = Value::real(t.dval);
            return e;
        }
        case Token::Kind::Str: {
            take();
            auto e = make_expr(Expr::Kind::Literal, t);
            e->literal = Value::text(t.text);
            return e;
        }
        case Token::Kind::Ident: {
            take();
            auto e = make_expr(Expr::Kind::Column, t);
            e->column = t.upper;
            return e;
        }
        case Token::Kind::Keyword:
            if (t.upper == "NULL") {
                take();
                return make_expr(Expr::Kind::Literal, t); // Value() is NULL
            }
            if (t.upper == "COUNT" || t.upper == "SUM" || t.upper == "AVG" || t.upper == "MIN" ||
                t.upper == "MAX")
                return parse_aggregate();
            break;
        case Token::Kind::Sym:
            if (t.text == "(") {
                take();
                ExprPtr inner = parse_expr();
                expect_sym(")");
                return inner;
            }
            break;
        default:
            break;
        }
        fail_tok(t, "expected an expression, got " + describe(t));
    }

    ExprPtr parse_aggregate() {
        const Token& t = take();
        if (agg_depth_ > 0) fail_tok(t, "aggregate functions cannot nest");
        auto e = make_expr(Expr::Kind::Aggregate, t);
        e->agg = t.upper == "COUNT" ? AggFunc::Count
                 : t.upper == "SUM" ? AggFunc::Sum
                 : t.upper == "AVG" ? AggFunc::Avg
                 : t.upper == "MIN" ? AggFunc::Min
                                    : AggFunc::Max;
        expect_sym("(");
        if (e->agg == AggFunc::Count && at_sym("*")) {
            take();
            e->count_star = true;
        } else {
            ++agg_depth_;
            e->lhs = parse_expr();
            --agg_depth_;
        }
        expect_sym(")");
        return e;
    }

    // ----- statement forms -----

    SelectStmt parse_select() {
        expect_keyword("SELECT");
        SelectStmt s;
        s.distinct = accept_keyword("DISTINCT");
        if (at_sym("*")) {
            take();
            s.star = true;
        } else {
            do {
                s.items.push_back(parse_select_item());
            } while (accept_sym(","));
        }
        expect_keyword("FROM");
        s.table = expect_identifier("table name");
        if (accept_keyword("WHERE")) {
            s.where = parse_expr();
            const Expr* agg = find_aggregate(*s.where);
            if (agg) fail_at(agg->line, agg->col, "aggregate functions are not allowed in WHERE");
        }
        if (at_keyword("GROUP")) {
            const Token& g = take();
            if (s.star) fail_tok(g, "GROUP BY cannot be combined with SELECT *");
            expect_keyword("BY");
            do {
                s.group_by.push_back(expect_identifier("grouping column"));
            } while (accept_sym(","));
        }
        if (accept_keyword("ORDER")) {
            expect_keyword("BY");
            do {
                s.order_by.push_back(parse_order_item(s));
            } while (accept_sym(","));
        }
        validate_grouping(s);
        return s;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        size_t start = pos_;
        item.expr = parse_expr();
        size_t end = pos_;
        item.source_text = src_.substr(tokens_[start].begin, tokens_[end - 1].end - tokens_[start].begin);
        if (accept_keyword("AS"))
            item.alias = expect_identifier("column alias");
        else if (peek().kind == Token::Kind::Ident)
            item.alias = take().upper;
        return item;
    }

    OrderItem parse_order_item(const SelectStmt& s) {
        OrderItem o;
        const Token& t = peek();
        if (t.kind == Token::Kind::Int) {
            take();
            o.by_ordinal = true;
            o.ordinal = t.ival;
            if (o.ordinal < 1) fail_tok(t, "ORDER BY position must be at least 1");
            if (!s.star && o.ordinal > static_cast<int64_t>(s.items.size()))
                fail_tok(t, "ORDER BY position out of range");
        } else {
            o.column = expect_identifier("ordering column");
        }
        if (accept_keyword("DESC"))
            o.descending = true;
        else
            accept_keyword("ASC");
        return o;
    }

    static const Expr* find_aggregate(const Expr& e) {
        if (e.kind == Expr::Kind::Aggregate) return &e;
        const Expr* hit = nullptr;
        if (e.lhs) hit = find_aggregate(*e.lhs);
        if (!hit && e.rhs) hit = find_aggregate(*e.rhs);
        return hit;
    }

    // Outside aggregate arguments, every column reference of a grouped query
    // must be one of the GROUP BY columns.
    static const Expr* find_ungrouped_column(const Expr& e, const std::vector<std::string>& keys) {
        if (e.kind == Expr::Kind::Aggregate) return nullptr;
        if (e.kind == Expr::Kind::Column) {
            for (const auto& k : keys)
                if (k == e.column) return nullptr;
            return &e;
        }
        const Expr* hit = nullptr;
        if (e.lhs) hit = find_ungrouped_column(*e.lhs, keys);
        if (!hit && e.rhs) hit = find_ungrouped_column(*e.rhs, keys);
        return hit;
    }

    void validate_grouping(const SelectStmt& s) {
        bool has_aggregate = false;
        for (const auto& item : s.items)
            if (find_aggregate(*item.expr)) has_aggregate = true;
        if (!has_aggregate && s.group_by.empty()) return;
        for (const auto& item : s.items) {
            const Expr* bad = find_ungrouped_column(*item.expr, s.group_by);
            if (bad)
                fail_at(bad->line, bad->col,
                        "column " + bad->column + " must appear in GROUP BY");
        }
    }

    CreateTableStmt parse_create() {
        expect_keyword("CREATE");
        expect_keyword("TABLE");
        CreateTableStmt c;
        c.table = expect_identifier("table name");
        expect_sym("(");
        for (;;) {
            if (at_keyword("PRIMARY")) {
                const Token& p = take();
                expect_keyword("KEY");
                expect_sym("(");
                const Token& col = peek();
                c.primary_key = expect_identifier("primary key column");
                expect_sym(")");
                bool found = false;
                for (const auto& def : c.columns)
                    if (def.name == *c.primary_key) found = true;
                if (!found) fail_tok(col, "primary key names an unknown column");
                if (!accept_sym(",")) break;
                fail_tok(p, "PRIMARY KEY must be the last clause");
            }
            ColumnDef def;
            const Token& name_tok = peek();
            def.name = expect_identifier("column name");
            for (const auto& prev : c.columns)
                if (prev.name == def.name) fail_tok(name_tok, "duplicate column name " + def.name);
            def.type = parse_column_type();
            if (accept_keyword("NOT")) {
                expect_keyword("NULL");
                def.not_null = true;
            }
            c.columns.push_back(std::move(def));
            if (!accept_sym(",")) break;
        }
        expect_sym(")");
        if (c.columns.empty()) fail_tok(peek(), "table needs at least one column");
        return c;
    }

    ColumnType parse_column_type() {
        const Token& t = peek();
        if (accept_keyword("INTEGER")) return ColumnType::integer();
        if (accept_keyword("DOUBLE")) return ColumnType::real();
        if (accept_keyword("VARCHAR")) {
            expect_sym("(");
            const Token& n = peek();
            if (n.kind != Token::Kind::Int) fail_tok(n, "expected VARCHAR length");
            take();
            if (n.ival < 1 || n.ival > 65535) fail_tok(n, "VARCHAR length must be 1..65535");
            expect_sym(")");
            return ColumnType::varchar(static_cast<uint32_t>(n.ival));
        }
        fail_tok(t, "expected a column type, got " + describe(t));
    }

    DropTableStmt parse_drop() {
        expect_keyword("DROP");
        expect_keyword("TABLE");
        DropTableStmt d;
        d.table = expect_identifier("table name");
        return d;
    }

    InsertStmt parse_insert() {
        expect_keyword("INSERT");
        expect_keyword("INTO");
        InsertStmt ins;
        ins.table = expect_identifier("table name");
        if (accept_sym("(")) {
            do {
                const Token& t = peek();
                std::string name = expect_identifier("column name");
                for (const auto& prev : ins.columns)
                    if (prev == name) fail_tok(t, "duplicate column " + name + " in insert list");
                ins.columns.push_back(std::move(name));
            } while (accept_sym(","));
            expect_sym(")");
        }
        expect_keyword("VALUES");
        const Token& vals = expect_sym("(");
        do {
            ins.values.push_back(parse_literal_value());
        } while (accept_sym(","));
        expect_sym(")");
        if (!ins.columns.empty() && ins.columns.size() != ins.values.size())
            fail_tok(vals, "insert lists " + std::to_string(ins.columns.size()) + " columns but " +
                               std::to_string(ins.values.size()) + " values");
        return ins;
    }

    Value parse_literal_value() {
        bool neg = false;
        if (at_sym("-")) {
            take();
            neg = true;
        } else if (at_sym("+")) {
            take();
        }
        const Token& t = peek();
        switch (t.kind) {
        case Token::Kind::Int:
            take();
            return Value::integer(neg ? -t.ival : t.ival);
        case Token::Kind::Dbl:
            take();
            return Value::real(neg ? -t.dval : t.dval);
        case Token::Kind::Str:
            if (neg) fail_tok(t, "cannot negate a string literal");
            take();
            return Value::text(t.text);
        case Token::Kind::Keyword:
            if (t.upper == "NULL" && !neg) {
                take();
                return Value();
            }
            break;
        default:
            break;
        }
        fail_tok(t, "expected a literal value, got " + describe(t));
    }

    DeleteStmt parse_delete() {
        expect_keyword("DELETE");
        expect_keyword("FROM");
        DeleteStmt d;
        d.table = expect_identifier("table name");
        if (accept_keyword("WHERE")) {
            d.where = parse_expr();
            const Expr* agg = find_aggregate(*d.where);
            if (agg) fail_at(agg->line, agg->col, "aggregate functions are not allowed in WHERE");
        }
        return d;
    }

    const std::string& src_;
    std::vector<Token> tokens_;
    size_t pos_ = 0;
    int agg_depth_ = 0;
};

// ----- printing -----

int node_precedence(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Binary:
        switch (e.binary_op) {
        case BinaryOp::Or: return 1;
        case BinaryOp::And: return 2;
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return 4;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 5;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 6;
        }
        return 0;
    case Expr::Kind::Unary:
        return e.unary_op == UnaryOp::Not ? 3 : 7;
    default:
        return 10;
    }
}

std::string literal_text(const Value& v) {
    if (v.is_null()) return "NULL";
    if (v.is_integer()) return std::to_string(v.as_integer());
    if (v.is_real()) return double_literal_text(v.as_real());
    return sql_quote(v.as_text());
}

void print_expr(const Expr& e, int min_prec, std::string& out) {
    int prec = node_precedence(e);
    bool parens = prec < min_prec;
    if (parens) out += "(";
    switch (e.kind) {
    case Expr::Kind::Literal:
        out += literal_text(e.literal);
        break;
    case Expr::Kind::Column:
        out += e.column;
        break;
    case Expr::Kind::Unary:
        if (e.unary_op == UnaryOp::Not) {
            out += "NOT ";
            print_expr(*e.lhs, 4, out);
        } else {
            out += "-";
            print_expr(*e.lhs, 8, out);
        }
        break;
    case Expr::Kind::Binary: {
        // comparisons are non-associative: both operands print at additive level
        int lhs_min = e.binary_op == BinaryOp::And || e.binary_op == BinaryOp::Or ? prec
                      : prec == 4                                                 ? 5
                                                                                  : prec;
        int rhs_min = prec == 4 ? 5 : prec + 1;
        print_expr(*e.lhs, lhs_min, out);
        out += " ";
        out += binary_op_text(e.binary_op);
        out += " ";
        print_expr(*e.rhs, rhs_min, out);
        break;
    }
    case Expr::Kind::Aggregate:
        out += agg_func_name(e.agg);
        out += "(";
        if (e.count_star)
            out += "*";
        else
            print_expr(*e.lhs, 0, out);
        out += ")";
        break;
    }
    if (parens) out += ")";
}

std::string expr_text(const Expr& e) {
    std::string out;
    print_expr(e, 0, out);
    return out;
}

struct PrettyPrinter {
    std::string operator()(const SelectStmt& s) const {
        std::string out = "SELECT ";
        if (s.distinct) out += "DISTINCT ";
        if (s.star) {
            out += "*";
        } else {
            for (size_t i = 0; i < s.items.size(); ++i) {
                if (i) out += ", ";
                out += expr_text(*s.items[i].expr);
                if (s.items[i].alias) out += " AS " + *s.items[i].alias;
            }
        }
        out += " FROM " + s.table;
        if (s.where) out += " WHERE " + expr_text(*s.where);
        if (!s.group_by.empty()) {
            out += " GROUP BY ";
            for (size_t i = 0; i < s.group_by.size(); ++i) {
                if (i) out += ", ";
                out += s.group_by[i];
            }
        }
        if (!s.order_by.empty()) {
            out += " ORDER BY ";
            for (size_t i = 0; i < s.order_by.size(); ++i) {
                if (i) out += ", ";
                const OrderItem& o = s.order_by[i];
                out += o.by_ordinal ? std::to_string(o.ordinal) : o.column;
                if (o.descending) out += " DESC";
            }
        }
        return out;
    }
    std::string operator()(const CreateTableStmt& c) const {
        std::string out = "CREATE TABLE " + c.table + "(";
        for (size_t i = 0; i < c.columns.size(); ++i) {
            if (i) out += ", ";
            out += c.columns[i].name + " " + c.columns[i].type.to_string();
            if (c.columns[i].not_null) out += " NOT NULL";
        }
        if (c.primary_key) out += ", PRIMARY KEY (" + *c.primary_key + ")";
        out += ")";
        return out;
    }
    std::string operator()(const DropTableStmt& d) const { return "DROP TABLE " + d.table; }
    std::string operator()(const InsertStmt& ins) const {
        std::string out = "INSERT INTO " + ins.table;
        if (!ins.columns.empty()) {
            out += "(";
            for (size_t i = 0; i < ins.columns.size(); ++i) {
                if (i) out += ", ";
                out += ins.columns[i];
            }
            out += ")";
        }
        out += " VALUES (";
        for (size_t i = 0; i < ins.values.size(); ++i) {
            if (i) out += ", ";
            out += literal_text(ins.values[i]);
        }
        out += ")";
        return out;
    }
    std::string operator()(const DeleteStmt& d) const {
        std::string out = "DELETE FROM " + d.table;
        if (d.where) out += " WHERE " + expr_text(*d.where);
        return out;
    }
};

void dump_expr(const Expr& e, std::string& out) {
    switch (e.kind) {
    case Expr::Kind::Literal:
        if (e.literal.is_null())
            out += "(null)";
        else if (e.literal.is_integer())
            out += "(int " + std::to_string(e.literal.as_integer()) + ")";
        else if (e.literal.is_real())
            out += "(dbl " + format_double(e.literal.as_real()) + ")";
        else
            out += "(txt " + sql_quote(e.literal.as_text()) + ")";
        break;
    case Expr::Kind::Column:
        out += "(col " + e.column + ")";
        break;
    case Expr::Kind::Unary:
        out += e.unary_op == UnaryOp::Not ? "(not " : "(neg ";
        dump_expr(*e.lhs, out);
        out += ")";
        break;
    case Expr::Kind::Binary:
        out += "(";
        out += binary_op_text(e.binary_op);
        out += " ";
        dump_expr(*e.lhs, out);
        out += " ";
        dump_expr(*e.rhs, out);
        out += ")";
        break;
    case Expr::Kind::Aggregate:
        out += "(";
        out += agg_func_name(e.agg);
        out += " ";
        if (e.count_star)
            out += "*";
        else
            dump_expr(*e.lhs, out);
        out += ")";
        break;
    }
}

struct Dumper {
    std::string operator()(const SelectStmt& s) const {
        std::string out = "(select";
        if (s.distinct) out += " distinct";
        if (s.star) {
            out += " *";
        } else {
            out += " items=[";
            for (size_t i = 0; i < s.items.size(); ++i) {
                if (i) out += " ";
                out += "(item ";
                dump_expr(*s.items[i].expr, out);
                if (s.items[i].alias) out += " as=" + *s.items[i].alias;
                out += ")";
            }
            out += "]";
        }
        out += " from=" + s.table;
        if (s.where) {
            out += " where=";
            dump_expr(*s.where, out);
        }
        if (!s.group_by.empty()) {
            out += " group=[";
            for (size_t i = 0; i < s.group_by.size(); ++i) {
                if (i) out += " ";
                out += s.group_by[i];
            }
            out += "]";
        }
        if (!s.order_by.empty()) {
            out += " order=[";
            for (size_t i = 0; i < s.order_by.size(); ++i) {
                if (i) out += " ";
                const OrderItem& o = s.order_by[i];
                out += "(";
                out += o.by_ordinal ? "#" + std::to_string(o.ordinal) : o.column;
                out += o.descending ? " desc)" : " asc)";
            }
            out += "]";
        }
        out += ")";
        return out;
    }
    std::string operator()(const CreateTableStmt& c) const {
        std::string out = "(create " + c.table + " cols=[";
        for (size_t i = 0; i < c.columns.size(); ++i) {
            if (i) out += " ";
            out += "(" + c.columns[i].name + " " + c.columns[i].type.to_string() +
                   (c.columns[i].not_null ? " notnull)" : ")");
        }
        out += "]";
        if (c.primary_key) out += " pk=" + *c.primary_key;
        out += ")";
        return out;
    }
    std::string operator()(const DropTableStmt& d) const { return "(drop " + d.table + ")"; }
    std::string operator()(const InsertStmt& ins) const {
        std::string out = "(insert " + ins.table + " cols=[";
        for (size_t i = 0; i < ins.columns.size(); ++i) {
            if (i) out += " ";
            out += ins.columns[i];
        }
        out += "] values=[";
        for (size_t i = 0; i < ins.values.size(); ++i) {
            if (i) out += " ";
            Expr lit;
            lit.kind = Expr::Kind::Literal;
            lit.literal = ins.values[i];
            dump_expr(lit, out);
        }
        out += "])";
        return out;
    }
    std::string operator()(const DeleteStmt& d) const {
        std::string out = "(delete " + d.table;
        if (d.where) {
            out += " where=";
            dump_expr(*d.where, out);
        }
        out += ")";
        return out;
    }
};

} // namespace

Statement parse_statement(const std::string& text) {
    Lexer lexer(text);
    Parser parser(text, lexer.run());
    return parser.run();
}

std::string pretty_print(const Statement& stmt) {
    return std::visit(PrettyPrinter{}, stmt.node);
}

std::string dump(const Statement& stmt) {
    return std::visit(Dumper{}, stmt.node);
}

std::string dump(const Expr& expr) {
    std::string out;
    dump_expr(expr, out);
    return out;
}

bool is_reserved_word(const std::string& upper) {
    return reserved_words().count(upper) > 0;
}

} // namespace ibdwb::sql
