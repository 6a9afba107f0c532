#include "ibdwb/platform.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ibdwb {

namespace fs = std::filesystem;
using storage::TxMode;
using storage::TxVerdict;

const char* platform_kind_name(PlatformKind kind) {
    return kind == PlatformKind::DataPlug ? "DATAPLUG" : "DISCOVERER";
}

const char* dylib_extension() {
#if defined(_WIN32)
    return ".dll";
#elif defined(__APPLE__)
    return ".dylib";
#else
    return ".so";
#endif
}

namespace {

constexpr const char* kSystemUser = "system";

const char* kind_text(ModuleKind k) { return k == ModuleKind::Tool ? "tool" : "wizard"; }
const char* registry_table(ModuleKind k) { return k == ModuleKind::Tool ? "TOOLTABLE" : "WIZARDTABLE"; }

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\f\v");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\f\v");
    return s.substr(b, e - b + 1);
}

std::string lower_copy(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string upper_copy(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorCode::InitFileMalformed, "init file: " + what);
}

std::string text_at(const DataSet& ds, size_t row, size_t col) {
    const Value& v = ds.rows[row][col];
    return v.is_null() ? std::string() : v.is_text() ? v.as_text() : v.render();
}

int64_t int_at(const DataSet& ds, size_t row, size_t col) {
    const Value& v = ds.rows[row][col];
    return v.is_integer() ? v.as_integer() : 0;
}

} // namespace

InitFile parse_init_file(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        std::string line =
            nl == std::string::npos ? text.substr(start) : text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }

    size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i >= lines.size() || lower_copy(trim(lines[i])) != "[settings]")
        malformed("missing [SETTINGS] section header");
    ++i;

    InitFile out;
    bool saw_type = false, saw_name = false, saw_version = false;
    for (; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        size_t eq = lines[i].find('=');
        if (eq == std::string::npos) malformed("expected KEY=VALUE, got '" + trim(lines[i]) + "'");
        std::string key = upper_copy(trim(lines[i].substr(0, eq)));
        std::string value = lines[i].substr(eq + 1); // verbatim after the first '='
        if (key == "TYPE") {
            std::string t = lower_copy(value);
            if (t == "tool")
                out.kind = ModuleKind::Tool;
            else if (t == "wizard")
                out.kind = ModuleKind::Wizard;
            else
                malformed("TYPE must be tool or wizard, got '" + value + "'");
            saw_type = true;
        } else if (key == "NAME") {
            out.name = value;
            saw_name = true;
        } else if (key == "VERSION") {
            uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
                malformed("VERSION must be a number, got '" + value + "'");
            out.version = v;
            saw_version = true;
        } else if (key == "AUTHOR") {
            out.author = value;
        } else if (key == "INIT") {
            out.init = value;
        } else if (key == "DESC") {
            out.description = value;
        } else {
            log_message(LogLevel::Warn, "init file: ignoring unknown key " + key);
        }
    }
    if (!saw_type) malformed("mandatory key TYPE is missing");
    if (!saw_name) malformed("mandatory key NAME is missing");
    if (!saw_version) malformed("mandatory key VERSION is missing");
    if (out.name.empty()) malformed("NAME must not be empty");
    return out;
}

// ----- Platform -----

Platform::Platform(Kernel& kernel, PlatformKind kind) : kernel_(kernel), kind_(kind) {
    ensure_registry_tables();
}

SqlOutcome Platform::system_sql(const std::string& statement) {
    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = kernel_.home_path_string();
    req.database_name = "system";
    req.user = kSystemUser;
    req.statement = statement;
    return kernel_.execute(req);
}

void Platform::ensure_registry_tables() {
    auto db = storage::open_database(kernel_.home(), true);
    std::lock_guard sys(kernel_.system_write_mutex());
    struct Def {
        const char* name;
        const char* ddl;
    };
    static const Def defs[] = {
        {"TOOLTABLE",
         "CREATE TABLE TOOLTABLE(PLATFORM VARCHAR(32) NOT NULL, NAME VARCHAR(255) NOT NULL, "
         "VERSION INTEGER NOT NULL, PATH VARCHAR(4096) NOT NULL, INITIALIZATION VARCHAR(4096), "
         "DESCRIPTION VARCHAR(4096), AUTHOR VARCHAR(255))"},
        {"WIZARDTABLE",
         "CREATE TABLE WIZARDTABLE(PLATFORM VARCHAR(32) NOT NULL, NAME VARCHAR(255) NOT NULL, "
         "VERSION INTEGER NOT NULL, PATH VARCHAR(4096) NOT NULL, INITIALIZATION VARCHAR(4096), "
         "DESCRIPTION VARCHAR(4096), AUTHOR VARCHAR(255))"},
        {"DMODULETABLE",
         "CREATE TABLE DMODULETABLE(PLATFORM VARCHAR(32) NOT NULL, NAME VARCHAR(255) NOT NULL, "
         "VERSION INTEGER NOT NULL, PATH VARCHAR(4096) NOT NULL, TYPE VARCHAR(16) NOT NULL, "
         "DESCRIPTION VARCHAR(4096))"},
        {"TACTIVETABLE",
         "CREATE TABLE TACTIVETABLE(PLATFORM VARCHAR(32) NOT NULL, NAME VARCHAR(255) NOT NULL, "
         "USERNAME VARCHAR(255) NOT NULL)"},
    };
    for (const auto& def : defs) {
        if (db->table_schema(def.name)) continue;
        SqlOutcome out = system_sql(def.ddl);
        if (!out.success && out.error && out.error->code != ErrorCode::TableExists)
            throw Error(out.error->code, out.error->message);
    }
}

std::optional<ModuleRecord> Platform::lookup_locked(const std::string& name) {
    for (ModuleKind kind : {ModuleKind::Tool, ModuleKind::Wizard}) {
        std::string stmt = std::string("SELECT NAME, VERSION, PATH, INITIALIZATION, DESCRIPTION, "
                                       "AUTHOR FROM ") +
                           registry_table(kind) + " WHERE PLATFORM = " +
                           sql_quote(platform_kind_name(kind_)) + " AND NAME = " + sql_quote(name);
        SqlOutcome out = system_sql(stmt);
        if (!out.success) throw Error(out.error->code, out.error->message);
        if (out.dataset.rows.empty()) continue;
        ModuleRecord rec;
        rec.name = text_at(out.dataset, 0, 0);
        rec.version = static_cast<uint64_t>(int_at(out.dataset, 0, 1));
        rec.path = text_at(out.dataset, 0, 2);
        rec.initialization = text_at(out.dataset, 0, 3);
        rec.description = text_at(out.dataset, 0, 4);
        rec.author = text_at(out.dataset, 0, 5);
        rec.kind = kind;
        return rec;
    }
    return std::nullopt;
}

InstallResult Platform::install_module(const fs::path& init_path) {
    std::string content;
    {
        std::ifstream in(init_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::InitFileMalformed, "cannot read " + init_path.string());
        std::ostringstream os;
        os << in.rdbuf();
        content = os.str();
    }
    InitFile init = parse_init_file(content);

    fs::path lib = init_path;
    lib.replace_extension(dylib_extension());
    std::error_code ec;
    if (!fs::exists(lib, ec))
        throw Error(ErrorCode::LibraryMissing,
                    "module library " + lib.string() + " does not exist");
    std::string lib_abs = fs::absolute(lib).lexically_normal().string();

    std::lock_guard lock(mu_);
    std::lock_guard sys(kernel_.system_write_mutex());
    SessionKey syskey{kernel_.home_path_string(), kSystemUser};

    auto existing = lookup_locked(init.name);
    if (existing) {
        if (existing->version == init.version) return {false, "Tool already installed"};
        if (existing->version > init.version) return {false, "Attempt to install older version"};
    }

    kernel_.open_explicit_transaction(syskey, TxMode::Write);
    try {
        auto run = [&](const std::string& stmt) {
            SqlOutcome out = system_sql(stmt);
            if (!out.success) throw Error(out.error->code, out.error->message);
            return out;
        };
        std::string platform_name = platform_kind_name(kind_);
        if (existing) { // upgrade replaces the record in place
            for (ModuleKind kind : {ModuleKind::Tool, ModuleKind::Wizard})
                run(std::string("DELETE FROM ") + registry_table(kind) +
                    " WHERE PLATFORM = " + sql_quote(platform_name) +
                    " AND NAME = " + sql_quote(init.name));
        }
        run(std::string("INSERT INTO ") + registry_table(init.kind) +
            "(PLATFORM, NAME, VERSION, PATH, INITIALIZATION, DESCRIPTION, AUTHOR) VALUES (" +
            sql_quote(platform_name) + ", " + sql_quote(init.name) + ", " +
            std::to_string(init.version) + ", " + sql_quote(lib_abs) + ", " +
            sql_quote(init.init) + ", " + sql_quote(init.description) + ", " +
            sql_quote(init.author) + ")");

        SqlOutcome dup = run("SELECT COUNT(*) FROM DMODULETABLE WHERE PLATFORM = " +
                             sql_quote(platform_name) + " AND NAME = " + sql_quote(init.name) +
                             " AND VERSION = " + std::to_string(init.version));
        if (int_at(dup.dataset, 0, 0) == 0) {
            run("INSERT INTO DMODULETABLE(PLATFORM, NAME, VERSION, PATH, TYPE, DESCRIPTION) "
                "VALUES (" +
                sql_quote(platform_name) + ", " + sql_quote(init.name) + ", " +
                std::to_string(init.version) + ", " + sql_quote(lib_abs) + ", " +
                sql_quote(kind_text(init.kind)) + ", " + sql_quote(init.description) + ")");
        }
    } catch (...) {
        kernel_.close_explicit_transaction(syskey, TxVerdict::Rollback);
        throw;
    }
    kernel_.close_explicit_transaction(syskey, TxVerdict::Commit);
    return {true, ""};
}

OpResult Platform::uninstall_module(const std::string& name) {
    std::lock_guard lock(mu_);
    std::lock_guard sys(kernel_.system_write_mutex());
    auto existing = lookup_locked(name);
    if (!existing) return {false, ErrorCode::ModuleNotFound, "Module not found"};

    SqlOutcome active = system_sql("SELECT COUNT(*) FROM TACTIVETABLE WHERE PLATFORM = " +
                                   sql_quote(platform_kind_name(kind_)) +
                                   " AND NAME = " + sql_quote(name));
    if (!active.success) throw Error(active.error->code, active.error->message);
    if (int_at(active.dataset, 0, 0) > 0)
        return {false, ErrorCode::ModuleActive, "Module is active"};

    SessionKey syskey{kernel_.home_path_string(), kSystemUser};
    kernel_.open_explicit_transaction(syskey, TxMode::Write);
    try {
        for (const char* table : {"TOOLTABLE", "WIZARDTABLE", "DMODULETABLE"}) {
            SqlOutcome out = system_sql(std::string("DELETE FROM ") + table +
                                        " WHERE PLATFORM = " +
                                        sql_quote(platform_kind_name(kind_)) +
                                        " AND NAME = " + sql_quote(name));
            if (!out.success) throw Error(out.error->code, out.error->message);
        }
    } catch (...) {
        kernel_.close_explicit_transaction(syskey, TxVerdict::Rollback);
        throw;
    }
    kernel_.close_explicit_transaction(syskey, TxVerdict::Commit);
    return {true, std::nullopt, ""};
}

void Platform::insert_active(const std::string& name, const std::string& user) {
    std::lock_guard sys(kernel_.system_write_mutex());
    SqlOutcome out = system_sql("INSERT INTO TACTIVETABLE(PLATFORM, NAME, USERNAME) VALUES (" +
                                sql_quote(platform_kind_name(kind_)) + ", " + sql_quote(name) +
                                ", " + sql_quote(user) + ")");
    if (!out.success) throw Error(out.error->code, out.error->message);
}

void Platform::remove_active(const std::string& name, const std::string& user) {
    std::lock_guard sys(kernel_.system_write_mutex());
    SqlOutcome out = system_sql("DELETE FROM TACTIVETABLE WHERE PLATFORM = " +
                                sql_quote(platform_kind_name(kind_)) + " AND NAME = " +
                                sql_quote(name) + " AND USERNAME = " + sql_quote(user));
    if (!out.success)
        log_message(LogLevel::Warn, "failed to clear active entry: " + out.error->message);
}

bool Platform::is_active(const std::string& name, const std::string& user) {
    SqlOutcome out = system_sql("SELECT COUNT(*) FROM TACTIVETABLE WHERE PLATFORM = " +
                                sql_quote(platform_kind_name(kind_)) + " AND NAME = " +
                                sql_quote(name) + " AND USERNAME = " + sql_quote(user));
    if (!out.success) throw Error(out.error->code, out.error->message);
    return int_at(out.dataset, 0, 0) > 0;
}

bool Platform::is_active(const std::string& name) {
    SqlOutcome out = system_sql("SELECT COUNT(*) FROM TACTIVETABLE WHERE PLATFORM = " +
                                sql_quote(platform_kind_name(kind_)) +
                                " AND NAME = " + sql_quote(name));
    if (!out.success) throw Error(out.error->code, out.error->message);
    return int_at(out.dataset, 0, 0) > 0;
}

int32_t Platform::activate_module(const std::string& name, const std::string& user) {
    ModuleRecord rec;
    {
        std::lock_guard lock(mu_);
        auto found = lookup_locked(name);
        if (!found)
            throw Error(ErrorCode::ModuleNotFound, "module " + name + " is not installed");
        rec = *found;
        if (is_active(name, user))
            throw Error(ErrorCode::ModuleActive,
                        "module " + name + " is already active for user " + user);
        insert_active(name, user);
    }

    struct ActiveGuard {
        Platform* self;
        const std::string& name;
        const std::string& user;
        ~ActiveGuard() {
            std::lock_guard lock(self->mu_);
            self->remove_active(name, user);
        }
    } guard{this, name, user};

    void* handle = dlopen(rec.path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!handle) {
        const char* why = dlerror();
        throw Error(ErrorCode::LibraryLoadFailure,
                    "cannot load " + rec.path + (why ? std::string(": ") + why : ""));
    }
    const char* symbol = rec.kind == ModuleKind::Tool ? "TOOLMAIN" : "WIZARDMAIN";
    void* sym = dlsym(handle, symbol);
    if (!sym) {
        dlclose(handle);
        throw Error(ErrorCode::EntrySymbolMissing,
                    rec.path + " does not export " + symbol);
    }

    std::string init;
    if (rec.kind == ModuleKind::Wizard) {
        init = rec.initialization;
    } else if (!rec.initialization.empty()) {
        log_message(LogLevel::Warn,
                    "tool " + name + " carries an INIT string; tools are activated without one");
    }

    PluginHost host(kernel_);
    auto entry = reinterpret_cast<ibdwb_module_entry>(sym);
    // control passes to the module until it returns
    int32_t status = entry(host.context(), host.services(), init.c_str(),
                           static_cast<uint64_t>(init.size()));
    dlclose(handle);
    return status;
}

void Platform::deactivate_module(const std::string& name, const std::string& user) {
    std::lock_guard lock(mu_);
    if (!is_active(name, user)) {
        log_message(LogLevel::Warn,
                    "no active entry for (" + name + ", " + user + "); nothing to deactivate");
        return;
    }
    remove_active(name, user);
}

std::vector<ModuleRecord> Platform::list_modules() {
    std::lock_guard lock(mu_);
    std::vector<ModuleRecord> records;
    for (ModuleKind kind : {ModuleKind::Tool, ModuleKind::Wizard}) {
        std::string stmt = std::string("SELECT NAME, VERSION, PATH, INITIALIZATION, DESCRIPTION, "
                                       "AUTHOR FROM ") +
                           registry_table(kind) +
                           " WHERE PLATFORM = " + sql_quote(platform_kind_name(kind_));
        SqlOutcome out = system_sql(stmt);
        if (!out.success) throw Error(out.error->code, out.error->message);
        for (size_t r = 0; r < out.dataset.rows.size(); ++r) {
            ModuleRecord rec;
            rec.name = text_at(out.dataset, r, 0);
            rec.version = static_cast<uint64_t>(int_at(out.dataset, r, 1));
            rec.path = text_at(out.dataset, r, 2);
            rec.initialization = text_at(out.dataset, r, 3);
            rec.description = text_at(out.dataset, r, 4);
            rec.author = text_at(out.dataset, r, 5);
            rec.kind = kind;
            records.push_back(std::move(rec));
        }
    }
    std::sort(records.begin(), records.end(),
              [](const ModuleRecord& a, const ModuleRecord& b) { return a.name < b.name; });
    return records;
}

std::optional<ModuleRecord> Platform::find_module(const std::string& name) {
    std::lock_guard lock(mu_);
    return lookup_locked(name);
}

std::vector<Platform::DModuleEntry> Platform::dmodule_entries() {
    std::lock_guard lock(mu_);
    SqlOutcome out = system_sql(
        "SELECT NAME, VERSION, PATH, TYPE, DESCRIPTION FROM DMODULETABLE WHERE PLATFORM = " +
        sql_quote(platform_kind_name(kind_)) + " ORDER BY NAME, VERSION");
    if (!out.success) throw Error(out.error->code, out.error->message);
    std::vector<DModuleEntry> entries;
    for (size_t r = 0; r < out.dataset.rows.size(); ++r) {
        DModuleEntry e;
        e.name = text_at(out.dataset, r, 0);
        e.version = static_cast<uint64_t>(int_at(out.dataset, r, 1));
        e.path = text_at(out.dataset, r, 2);
        e.kind = text_at(out.dataset, r, 3) == "wizard" ? ModuleKind::Wizard : ModuleKind::Tool;
        e.description = text_at(out.dataset, r, 4);
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace ibdwb
