#include "ibdwb/csv_plug.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ibdwb/sql_ast.hpp"

namespace ibdwb::plugins {

namespace {

bool parse_full_int(const std::string& s, int64_t& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
}

bool parse_full_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e) return false;
    // reject inf/nan spellings: they have no literal form downstream
    for (char c : s)
        if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E') return false;
    return true;
}

std::string upper_copy(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

void run_or_throw(const ibdwb_host_services* svc, void* ctx, const ConvertSpec& spec,
                  const std::string& statement) {
    int32_t status = svc->execute_sql(ctx, spec.database.c_str(), spec.user.c_str(),
                                      spec.password.c_str(), statement.c_str(), nullptr);
    if (status == 0) return;
    ErrorCode code = static_cast<ErrorCode>(status);
    if (code == ErrorCode::TableExists)
        throw Error(ErrorCode::TargetExists, "target table " + spec.table + " already exists");
    throw Error(code, std::string("statement failed (") + error_code_name(code) + "): " + statement);
}

} // namespace

std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    size_t i = 0;
    auto flush_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto flush_record = [&] {
        flush_field();
        records.push_back(std::move(record));
        record.clear();
    };

    while (i < content.size()) {
        char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            field.push_back(c);
            ++i;
            continue;
        }
        if (c == '"' && !field_started && field.empty()) {
            quoted = true;
            field_started = true;
            ++i;
            continue;
        }
        if (c == delimiter) {
            flush_field();
            ++i;
            continue;
        }
        if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
            flush_record();
            i += 2;
            continue;
        }
        if (c == '\n') {
            flush_record();
            ++i;
            continue;
        }
        field.push_back(c);
        field_started = true;
        ++i;
    }
    if (quoted) throw Error(ErrorCode::RaggedRow, "unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) flush_record();
    return records;
}

ColumnType infer_column_type(const std::vector<std::string>& fields) {
    bool all_int = true, all_numeric = true, any = false;
    for (const auto& f : fields) {
        if (f.empty()) continue;
        any = true;
        int64_t i;
        double d;
        if (!parse_full_int(f, i)) all_int = false;
        if (!parse_full_double(f, d)) all_numeric = false;
    }
    if (!any) return ColumnType::varchar(255);
    if (all_int) return ColumnType::integer();
    if (all_numeric) return ColumnType::real();
    return ColumnType::varchar(255);
}

std::vector<std::string> column_names(const std::vector<std::string>* header, size_t width) {
    std::vector<std::string> names;
    std::set<std::string> used;
    for (size_t i = 0; i < width; ++i) {
        std::string name;
        if (header && i < header->size()) {
            for (char c : (*header)[i]) {
                if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
                    name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
                else
                    name.push_back('_');
            }
        }
        if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
            name = "COL" + std::to_string(i + 1);
        if (sql::is_reserved_word(name)) name += "_";
        while (used.count(name)) name += "_";
        used.insert(name);
        names.push_back(std::move(name));
    }
    return names;
}

uint64_t convert_delimited(const ibdwb_host_services* services, void* host_ctx,
                           const ConvertSpec& spec) {
    std::string content;
    {
        std::ifstream in(spec.source, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + spec.source.string());
        std::ostringstream os;
        os << in.rdbuf();
        content = os.str();
    }

    auto records = parse_delimited(content, spec.delimiter);
    const std::vector<std::string>* header = nullptr;
    size_t first_data = 0;
    if (spec.has_header && !records.empty()) {
        header = &records[0];
        first_data = 1;
    }
    if (records.size() <= first_data) throw Error(ErrorCode::EmptyInput, "no records to convert");

    size_t width = records[first_data].size();
    if (header && header->size() != width)
        throw Error(ErrorCode::RaggedRow, "record 1 has " + std::to_string(width) +
                                              " fields, header has " +
                                              std::to_string(header->size()));
    for (size_t r = first_data; r < records.size(); ++r) {
        if (records[r].size() != width)
            throw Error(ErrorCode::RaggedRow,
                        "record " + std::to_string(r - first_data + 1) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(width));
    }

    std::vector<std::string> names = column_names(header, width);
    std::vector<ColumnType> types;
    for (size_t c = 0; c < width; ++c) {
        std::vector<std::string> fields;
        fields.reserve(records.size() - first_data);
        for (size_t r = first_data; r < records.size(); ++r) fields.push_back(records[r][c]);
        types.push_back(infer_column_type(fields));
    }

    std::string table = upper_copy(spec.table);
    std::string create = "CREATE TABLE " + table + "(";
    for (size_t c = 0; c < width; ++c) {
        if (c) create += ", ";
        create += names[c] + " " + types[c].to_string();
    }
    create += ")";
    run_or_throw(services, host_ctx, spec, create);

    uint64_t inserted = 0;
    for (size_t r = first_data; r < records.size(); ++r) {
        std::string insert = "INSERT INTO " + table + " VALUES (";
        for (size_t c = 0; c < width; ++c) {
            if (c) insert += ", ";
            const std::string& f = records[r][c];
            if (f.empty()) { // empty fields load as NULL
                insert += "NULL";
                continue;
            }
            switch (types[c].base) {
            case ColumnType::Base::Integer:
                insert += f[0] == '+' ? f.substr(1) : f;
                break;
            case ColumnType::Base::Double: {
                double d;
                parse_full_double(f, d);
                insert += double_literal_text(d);
                break;
            }
            case ColumnType::Base::Varchar:
                insert += sql_quote(f);
                break;
            }
        }
        insert += ")";
        run_or_throw(services, host_ctx, spec, insert);
        ++inserted;
    }
    return inserted;
}

} // namespace ibdwb::plugins
