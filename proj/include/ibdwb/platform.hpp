#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ibdwb/kernel.hpp"
#include "ibdwb/plugin_abi.h"

namespace ibdwb {

enum class ModuleKind { Tool, Wizard };
enum class PlatformKind { DataPlug, Discoverer };

const char* platform_kind_name(PlatformKind kind); // DATAPLUG / DISCOVERER

// Parsed module descriptor: a [SETTINGS] section of KEY=VALUE lines.
struct InitFile {
    ModuleKind kind = ModuleKind::Tool;
    std::string name;
    uint64_t version = 0;
    std::string author;
    std::string init;
    std::string description;
};

// Throws Error(InitFileMalformed) on a missing section header, missing
// mandatory key (TYPE/NAME/VERSION), bad TYPE, or non-numeric VERSION.
// Unknown keys are ignored with a warning.
InitFile parse_init_file(const std::string& text);

struct ModuleRecord {
    std::string name; // registry key, case-sensitive
    uint64_t version = 0;
    std::string path; // dynamic library location
    std::string initialization;
    std::string description;
    std::string author;
    ModuleKind kind = ModuleKind::Tool;
    bool operator==(const ModuleRecord&) const = default;
};

struct InstallResult {
    bool success = false;
    std::string message; // "Tool already installed" / "Attempt to install older version"
};

// The dynamic-library extension used for module bundles on this platform.
const char* dylib_extension();

// One platform instance per kind. The registry persists in the kernel's
// system database (TOOLTABLE / WIZARDTABLE / DMODULETABLE / TACTIVETABLE),
// so a freshly constructed platform sees everything installed before it.
class Platform {
public:
    Platform(Kernel& kernel, PlatformKind kind);

    // Version gating per registry entry: duplicate and downgrade installs
    // are refused, upgrades replace the record.
    // Throws Error(InitFileMalformed) / Error(LibraryMissing).
    InstallResult install_module(const std::filesystem::path& init_path);

    OpResult uninstall_module(const std::string& name);

    // Loads the library, resolves TOOLMAIN/WIZARDMAIN, and transfers control
    // until the module returns. The (name, user) pair is held in TACTIVETABLE
    // for the duration. Throws Error on ModuleNotFound, ModuleActive,
    // LibraryLoadFailure, EntrySymbolMissing.
    int32_t activate_module(const std::string& name, const std::string& user);

    // Crash recovery: removes a stale active entry; warns when absent.
    void deactivate_module(const std::string& name, const std::string& user);

    std::vector<ModuleRecord> list_modules(); // sorted by name
    std::optional<ModuleRecord> find_module(const std::string& name);

    // DMODULETABLE view: every (name, version) successfully installed.
    struct DModuleEntry {
        std::string name;
        uint64_t version = 0;
        std::string path;
        ModuleKind kind = ModuleKind::Tool;
        std::string description;
    };
    std::vector<DModuleEntry> dmodule_entries();

    bool is_active(const std::string& name, const std::string& user);
    bool is_active(const std::string& name);

    PlatformKind kind() const { return kind_; }
    Kernel& kernel() { return kernel_; }

private:
    SqlOutcome system_sql(const std::string& statement);
    void ensure_registry_tables();
    std::optional<ModuleRecord> lookup_locked(const std::string& name);
    void insert_active(const std::string& name, const std::string& user);
    void remove_active(const std::string& name, const std::string& user);

    Kernel& kernel_;
    PlatformKind kind_;
    std::mutex mu_; // serializes registry mutations; never held across a plugin call
};

// Host-services table handed to plugin entries; also usable in-process.
class PluginHost {
public:
    explicit PluginHost(Kernel& kernel);

    const ibdwb_host_services* services() const { return &table_; }
    void* context() { return this; }
    Kernel& kernel() { return kernel_; }

private:
    Kernel& kernel_;
    ibdwb_host_services table_;
};

} // namespace ibdwb
