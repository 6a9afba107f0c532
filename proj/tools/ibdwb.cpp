#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ibdwb/csv_plug.hpp"
#include "ibdwb/cube.hpp"
#include "ibdwb/kernel.hpp"
#include "ibdwb/module_args.hpp"
#include "ibdwb/platform.hpp"
#include "ibdwb/render.hpp"
#include "ibdwb/storage.hpp"

using namespace ibdwb;

namespace {

struct CliConfig {
    std::string home = "./ibdwb.sys";
    std::string user = "admin";
    OutputMode output = OutputMode::Table;
};

int print_error(ErrorCode code, const std::string& message) {
    if (code == ErrorCode::ParseError)
        std::cerr << message << "\n"; // already in the pinned PARSE ERROR format
    else
        std::cerr << "ERROR " << error_code_name(code) << ": " << message << "\n";
    return 1;
}

int print_error(const Error& e) { return print_error(e.code(), e.what()); }

int print_outcome_error(const SqlOutcome& outcome) {
    return print_error(outcome.error->code, outcome.error->message);
}

PlatformKind parse_platform(const std::string& name) {
    if (name == "dataplug") return PlatformKind::DataPlug;
    if (name == "discoverer") return PlatformKind::Discoverer;
    throw CLI::ValidationError("--platform must be dataplug or discoverer");
}

CubeAgg parse_agg(std::string name) {
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (name == "COUNT") return CubeAgg::Count;
    if (name == "SUM") return CubeAgg::Sum;
    if (name == "AVG") return CubeAgg::Avg;
    if (name == "MIN") return CubeAgg::Min;
    if (name == "MAX") return CubeAgg::Max;
    throw CLI::ValidationError("--agg must be COUNT, SUM, AVG, MIN or MAX");
}

// db:table:column with the database part free to contain ':'
DimensionSpec parse_dimension(const std::string& spec) {
    size_t last = spec.rfind(':');
    size_t mid = last == std::string::npos ? std::string::npos : spec.rfind(':', last - 1);
    if (last == std::string::npos || mid == std::string::npos || mid == 0)
        throw CLI::ValidationError("dimension must be db:table:column, got '" + spec + "'");
    return {spec.substr(0, mid), spec.substr(mid + 1, last - mid - 1), spec.substr(last + 1)};
}

SqlOutcome run_statement(Kernel& kernel, const CliConfig& cfg, const std::string& db,
                         const std::string& statement) {
    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = db;
    req.user = cfg.user;
    req.statement = statement;
    return kernel.execute(req);
}

int cmd_query(Kernel& kernel, const CliConfig& cfg, const std::string& db,
              const std::string& statement) {
    SqlOutcome outcome = run_statement(kernel, cfg, db, statement);
    if (!outcome.success) return print_outcome_error(outcome);
    if (outcome.dataset.columns.empty())
        std::cout << "OK\n";
    else
        std::cout << render_dataset(outcome.dataset, cfg.output);
    return 0;
}

// one statement per `;`, quote-aware; \q quits
int cmd_shell(Kernel& kernel, const CliConfig& cfg, const std::string& db) {
    bool tty = isatty(fileno(stdin));
    std::string buffer;
    std::string line;
    auto terminated = [](const std::string& text) -> std::optional<size_t> {
        bool quoted = false;
        size_t last_semicolon = std::string::npos;
        for (size_t i = 0; i < text.size(); ++i) {
            char c = text[i];
            if (c == '\'') quoted = !quoted;
            if (c == ';' && !quoted) last_semicolon = i;
        }
        if (last_semicolon == std::string::npos) return std::nullopt;
        for (size_t i = last_semicolon + 1; i < text.size(); ++i)
            if (!std::isspace(static_cast<unsigned char>(text[i]))) return std::nullopt;
        return last_semicolon;
    };
    if (tty) std::cout << "ibdwb> " << std::flush;
    while (std::getline(std::cin, line)) {
        if (buffer.empty() && line == "\\q") break;
        buffer += line;
        buffer += '\n';
        if (auto end = terminated(buffer)) {
            std::string statement = buffer.substr(0, *end);
            buffer.clear();
            SqlOutcome outcome = run_statement(kernel, cfg, db, statement);
            if (!outcome.success)
                print_error(outcome.error->code, outcome.error->message);
            else if (!outcome.dataset.columns.empty())
                std::cout << render_dataset(outcome.dataset, OutputMode::Table);
            else
                std::cout << "OK\n";
        }
        if (tty) std::cout << (buffer.empty() ? "ibdwb> " : "... ") << std::flush;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CliConfig cfg;
    CLI::App app{"ibdwb - extensible data mart builder"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    std::string output_name = "TABLE";
    app.add_option("--home", cfg.home, "system database directory (env IBDWB_HOME overrides)");
    app.add_option("--user", cfg.user, "user name for sessions");
    app.add_option("--output", output_name, "TABLE or TSV");

    // db create|list
    auto* db_cmd = app.add_subcommand("db", "database lifecycle");
    db_cmd->require_subcommand(1);
    std::string db_path;
    auto* db_create = db_cmd->add_subcommand("create", "create an empty database directory");
    db_create->add_option("path", db_path, "database directory")->required();
    auto* db_list = db_cmd->add_subcommand("list", "list tables of a database");
    db_list->add_option("path", db_path, "database directory")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load a delimited file into a table");
    std::string ingest_csv, ingest_db, ingest_table, ingest_delim = ",";
    bool ingest_no_header = false;
    ingest->add_option("csv", ingest_csv)->required();
    ingest->add_option("db", ingest_db)->required();
    ingest->add_option("table", ingest_table)->required();
    ingest->add_option("--delim", ingest_delim, "field delimiter (single char or 'tab')");
    ingest->add_flag("--no-header", ingest_no_header, "first record is data, not names");

    // module install|uninstall|list|run
    auto* module_cmd = app.add_subcommand("module", "manage platform modules");
    module_cmd->require_subcommand(1);
    std::string platform_name, module_arg, module_user;
    std::vector<std::string> module_kv;
    auto* mod_install = module_cmd->add_subcommand("install", "register a module bundle");
    mod_install->add_option("--platform", platform_name)->required();
    mod_install->add_option("init", module_arg, "path to the module .ini")->required();
    auto* mod_uninstall = module_cmd->add_subcommand("uninstall", "remove a module");
    mod_uninstall->add_option("--platform", platform_name)->required();
    mod_uninstall->add_option("name", module_arg)->required();
    auto* mod_list = module_cmd->add_subcommand("list", "list installed modules");
    mod_list->add_option("--platform", platform_name)->required();
    auto* mod_run = module_cmd->add_subcommand("run", "activate a module");
    mod_run->add_option("--platform", platform_name)->required();
    mod_run->add_option("name", module_arg)->required();
    mod_run->add_option("--run-user", module_user, "user activating the module");
    mod_run->add_option("--arg", module_kv, "key=value run parameter (repeatable)");

    // cube ...
    auto* cube_cmd = app.add_subcommand("cube", "cube catalog");
    cube_cmd->require_subcommand(1);
    std::string cube_name, cube_owner, cube_desc, cube_measure, cube_agg = "COUNT", cube_dim;
    std::vector<std::string> cube_dims;
    std::string cube_dnumbers;
    auto* cube_create = cube_cmd->add_subcommand("create", "create a cube");
    cube_create->add_option("name", cube_name)->required();
    cube_create->add_option("--owner", cube_owner)->required();
    cube_create->add_option("--desc", cube_desc)->required();
    cube_create->add_option("--dim", cube_dims, "db:table:column (repeatable)");
    auto* cube_add_dim = cube_cmd->add_subcommand("add-dim", "append a dimension");
    cube_add_dim->add_option("name", cube_name)->required();
    cube_add_dim->add_option("dim", cube_dim, "db:table:column")->required();
    auto* cube_rm_dim = cube_cmd->add_subcommand("rm-dim", "remove a dimension");
    cube_rm_dim->add_option("name", cube_name)->required();
    cube_rm_dim->add_option("dim", cube_dim, "db:table:column")->required();
    auto* cube_drop = cube_cmd->add_subcommand("drop", "remove a cube");
    cube_drop->add_option("name", cube_name)->required();
    cube_cmd->add_subcommand("list", "list cubes");
    auto* cube_show = cube_cmd->add_subcommand("show", "show a cube and its dimensions");
    cube_show->add_option("name", cube_name)->required();
    auto* cube_eval = cube_cmd->add_subcommand("eval", "evaluate a cube");
    cube_eval->add_option("name", cube_name)->required();
    cube_eval->add_option("--dims", cube_dnumbers, "dimension numbers, comma separated")
        ->required();
    cube_eval->add_option("--measure", cube_measure)->required();
    cube_eval->add_option("--agg", cube_agg, "COUNT|SUM|AVG|MIN|MAX");

    // query / shell / status
    auto* query_cmd = app.add_subcommand("query", "run one statement");
    std::string query_db, query_stmt;
    query_cmd->add_option("db", query_db)->required();
    query_cmd->add_option("statement", query_stmt)->required();
    auto* shell_cmd = app.add_subcommand("shell", "interactive statement shell");
    shell_cmd->add_option("db", query_db)->required();
    app.add_subcommand("status", "show the kernel session table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    if (const char* env_home = std::getenv("IBDWB_HOME")) cfg.home = env_home; // env wins
    for (char& c : output_name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (output_name == "TSV")
        cfg.output = OutputMode::Tsv;
    else if (output_name != "TABLE") {
        std::cerr << "ERROR MalformedRequest: --output must be TABLE or TSV\n";
        return 2;
    }

    try {
        if (db_create->parsed()) {
            storage::open_database(db_path, true);
            std::cout << "created " << db_path << "\n";
            return 0;
        }
        if (db_list->parsed()) {
            auto db = storage::open_database(db_path, false);
            for (const auto& name : db->table_names()) std::cout << name << "\n";
            return 0;
        }

        Kernel kernel(cfg.home);

        if (ingest->parsed()) {
            PluginHost host(kernel);
            plugins::ConvertSpec spec;
            spec.source = ingest_csv;
            spec.database = ingest_db;
            spec.table = ingest_table;
            spec.user = cfg.user;
            spec.has_header = !ingest_no_header;
            spec.delimiter = ingest_delim == "tab" ? '\t'
                             : ingest_delim.empty() ? ','
                                                    : ingest_delim[0];
            uint64_t rows = plugins::convert_delimited(host.services(), host.context(), spec);
            std::cout << "loaded " << rows << " records into " << ingest_table << "\n";
            return 0;
        }

        if (module_cmd->parsed()) {
            Platform platform(kernel, parse_platform(platform_name));
            if (mod_install->parsed()) {
                InstallResult result = platform.install_module(module_arg);
                if (!result.success) {
                    std::cerr << result.message << "\n";
                    return 1;
                }
                std::cout << "installed " << module_arg << "\n";
                return 0;
            }
            if (mod_uninstall->parsed()) {
                OpResult result = platform.uninstall_module(module_arg);
                if (!result.success) {
                    std::cerr << result.message << "\n";
                    return 1;
                }
                std::cout << "uninstalled " << module_arg << "\n";
                return 0;
            }
            if (mod_list->parsed()) {
                DataSet ds;
                ds.columns = {"NAME", "VERSION", "TYPE", "AUTHOR", "DESC"};
                for (const auto& rec : platform.list_modules())
                    ds.rows.push_back({Value::text(rec.name),
                                       Value::integer(static_cast<int64_t>(rec.version)),
                                       Value::text(rec.kind == ModuleKind::Tool ? "tool"
                                                                                : "wizard"),
                                       Value::text(rec.author), Value::text(rec.description)});
                std::cout << render_dataset(ds, cfg.output);
                return 0;
            }
            if (mod_run->parsed()) {
                std::string run_user = module_user.empty() ? cfg.user : module_user;
                std::string env;
                bool has_user_arg = false;
                for (const auto& kv : module_kv) {
                    if (!env.empty()) env += " ";
                    env += kv;
                    if (kv.rfind("user=", 0) == 0) has_user_arg = true;
                }
                if (!has_user_arg) env += (env.empty() ? "" : " ") + ("user=" + run_user);
                setenv(plugins::kModuleArgsEnv, env.c_str(), 1);
                int32_t status = platform.activate_module(module_arg, run_user);
                std::cout << "module exited with status " << status << "\n";
                return status == 0 ? 0 : 1;
            }
        }

        if (cube_cmd->parsed()) {
            CubeBuilder cubes(kernel);
            cubes.init_catalog();
            auto report = [&](const OpResult& r) {
                if (r.success) return 0;
                std::cerr << r.message << "\n";
                return 1;
            };
            if (cube_create->parsed()) {
                std::vector<DimensionSpec> dims;
                for (const auto& d : cube_dims) dims.push_back(parse_dimension(d));
                int rc = report(cubes.add_cube(cube_name, cube_owner, cube_desc, dims));
                if (rc == 0) std::cout << "created cube " << cube_name << "\n";
                return rc;
            }
            if (cube_add_dim->parsed()) {
                DimensionSpec d = parse_dimension(cube_dim);
                int rc = report(cubes.add_dimension(cube_name, d.database, d.table, d.column));
                if (rc == 0) std::cout << "added dimension to " << cube_name << "\n";
                return rc;
            }
            if (cube_rm_dim->parsed()) {
                DimensionSpec d = parse_dimension(cube_dim);
                int rc = report(cubes.remove_dimension(cube_name, d.database, d.table, d.column));
                if (rc == 0) std::cout << "removed dimension from " << cube_name << "\n";
                return rc;
            }
            if (cube_drop->parsed()) {
                int rc = report(cubes.remove_cube(cube_name));
                if (rc == 0) std::cout << "dropped cube " << cube_name << "\n";
                return rc;
            }
            if (cube_cmd->get_subcommand("list")->parsed()) {
                DataSet ds;
                ds.columns = {"CUBENAME", "CUBEOWNER", "CUBEDESC"};
                for (const auto& c : cubes.display_all_cubes())
                    ds.rows.push_back({Value::text(c.name), Value::text(c.owner),
                                       Value::text(c.description)});
                std::cout << render_dataset(ds, cfg.output);
                return 0;
            }
            if (cube_show->parsed()) {
                CubeView view = cubes.display_cube(cube_name);
                std::cout << "cube " << view.cube.name << " owner=" << view.cube.owner
                          << " desc=" << view.cube.description << "\n";
                DataSet ds;
                ds.columns = {"DNUMBER", "DATABASENAME", "TABLENAME", "DIMENSION"};
                for (const auto& d : view.dimensions)
                    ds.rows.push_back({Value::integer(d.dnumber), Value::text(d.database),
                                       Value::text(d.table), Value::text(d.column)});
                std::cout << render_dataset(ds, cfg.output);
                return 0;
            }
            if (cube_eval->parsed()) {
                std::vector<int64_t> dnumbers;
                std::string token;
                std::istringstream in(cube_dnumbers);
                while (std::getline(in, token, ','))
                    if (!token.empty()) dnumbers.push_back(std::stoll(token));
                DataSet ds = cubes.evaluate_cube(cube_name, dnumbers, cube_measure,
                                                 parse_agg(cube_agg));
                std::cout << render_dataset(ds, cfg.output);
                return 0;
            }
        }

        if (query_cmd->parsed()) return cmd_query(kernel, cfg, query_db, query_stmt);
        if (shell_cmd->parsed()) return cmd_shell(kernel, cfg, query_db);
        if (app.get_subcommand("status")->parsed()) {
            std::cout << render_session_report(kernel.status(), cfg.output);
            return 0;
        }
    } catch (const Error& e) {
        return print_error(e);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
