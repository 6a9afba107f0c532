#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <thread>

#include "ibdwb/platform.hpp"
#include "support/testutil.hpp"

using namespace ibdwb;
using testutil::TempDir;

namespace {

const char* kReferenceInit =
    "[SETTINGS]\n"
    "TYPE=tool\n"
    "NAME=APriori Text\n"
    "VERSION=1\n"
    "AUTHOR=Keith\n"
    "INIT=pagesize 4096\n"
    "DESC=a tool using apriori algorithm\n";

std::filesystem::path write_bundle(const std::filesystem::path& dir, const std::string& basename,
                                   const std::string& ini_text, bool runnable = false) {
    std::filesystem::create_directories(dir);
    auto ini = dir / (basename + ".ini");
    std::ofstream(ini, std::ios::binary) << ini_text;
    auto lib = dir / (basename + dylib_extension());
    if (runnable) {
        std::filesystem::path probe_dir = testutil::build_artifact("IBDWB_PROBE_DIR");
        std::filesystem::copy_file(probe_dir / ("testprobe" + std::string(dylib_extension())),
                                   lib, std::filesystem::copy_options::overwrite_existing);
    } else {
        std::ofstream(lib, std::ios::binary) << "";
    }
    return ini;
}

std::string ini_text(const std::string& name, uint64_t version, const std::string& type = "tool",
                     const std::string& init = "", const std::string& desc = "d") {
    return "[SETTINGS]\nTYPE=" + type + "\nNAME=" + name + "\nVERSION=" +
           std::to_string(version) + "\nAUTHOR=a\nINIT=" + init + "\nDESC=" + desc + "\n";
}

} // namespace

TEST_CASE("init file: the reference tool descriptor parses field by field") {
    InitFile f = parse_init_file(kReferenceInit);
    CHECK(f.kind == ModuleKind::Tool);
    CHECK(f.name == "APriori Text");
    CHECK(f.version == 1);
    CHECK(f.author == "Keith");
    CHECK(f.init == "pagesize 4096");
    CHECK(f.description == "a tool using apriori algorithm");
}

TEST_CASE("init file: wizard variant, defaults, unknown keys, malformed inputs") {
    InitFile wizard = parse_init_file("[SETTINGS]\nTYPE=wizard\nNAME=w\nVERSION=3\n");
    CHECK(wizard.kind == ModuleKind::Wizard);
    CHECK(wizard.author.empty());
    CHECK(wizard.init.empty());
    CHECK(wizard.description.empty());

    {
        testutil::LogCapture capture;
        InitFile f = parse_init_file("[SETTINGS]\nTYPE=tool\nNAME=x\nVERSION=1\nCOLOR=blue\n");
        CHECK(f.name == "x");
        CHECK(capture.contains("unknown key COLOR"));
    }

    auto malformed = [](const std::string& text) {
        try {
            parse_init_file(text);
            FAIL_CHECK("expected InitFileMalformed for: ", text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InitFileMalformed);
        }
    };
    malformed("TYPE=tool\nNAME=x\nVERSION=1\n");                  // missing section header
    malformed("[SETTINGS]\nTYPE=tool\nVERSION=1\n");              // missing NAME
    malformed("[SETTINGS]\nNAME=x\nVERSION=1\n");                 // missing TYPE
    malformed("[SETTINGS]\nTYPE=tool\nNAME=x\n");                 // missing VERSION
    malformed("[SETTINGS]\nTYPE=gadget\nNAME=x\nVERSION=1\n");    // bad TYPE
    malformed("[SETTINGS]\nTYPE=tool\nNAME=x\nVERSION=one\n");    // non-numeric VERSION
    malformed("[SETTINGS]\nTYPE=tool\nNAME=\nVERSION=1\n");       // empty NAME
    malformed("[SETTINGS]\nTYPE=tool\nNAME=x\nVERSION=1\njunk\n"); // no '='
}

TEST_CASE("init file: values are verbatim after the first equals sign") {
    InitFile f = parse_init_file("[SETTINGS]\nTYPE=tool\nNAME= spaced name \nVERSION=2\n"
                                 "INIT=a=b=c\n");
    CHECK(f.name == " spaced name ");
    CHECK(f.init == "a=b=c");
}

TEST_CASE("install: version gating with the exact refusal messages") {
    TempDir dir("platform-install");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);

    auto v1 = write_bundle(dir / "b1", "mod", ini_text("mod", 1));
    InstallResult fresh = platform.install_module(v1);
    CHECK(fresh.success);
    auto rows = platform.list_modules();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].name == "mod");
    CHECK(rows[0].version == 1);

    InstallResult dup = platform.install_module(v1);
    CHECK_FALSE(dup.success);
    CHECK(dup.message == "Tool already installed");

    auto v0 = write_bundle(dir / "b0", "mod", ini_text("mod", 0));
    InstallResult older = platform.install_module(v0);
    CHECK_FALSE(older.success);
    CHECK(older.message == "Attempt to install older version");

    auto v2 = write_bundle(dir / "b2", "mod", ini_text("mod", 2, "tool", "", "newer"));
    InstallResult upgrade = platform.install_module(v2);
    CHECK(upgrade.success);
    rows = platform.list_modules();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].version == 2);
    CHECK(rows[0].description == "newer");

    // the reference descriptor installs cleanly too
    auto reference = write_bundle(dir / "ref", "apriori_text", kReferenceInit);
    CHECK(platform.install_module(reference).success);
    CHECK(platform.find_module("APriori Text").has_value());
}

TEST_CASE("install failures: unreadable init, missing library") {
    TempDir dir("platform-install-fail");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);

    try {
        platform.install_module(dir / "missing.ini");
        FAIL("expected InitFileMalformed");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InitFileMalformed);
    }

    std::ofstream(dir / "lonely.ini") << ini_text("lonely", 1);
    try {
        platform.install_module(dir / "lonely.ini");
        FAIL("expected LibraryMissing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LibraryMissing);
    }
}

TEST_CASE("uninstall: inverse of install, unknown and active modules refuse") {
    TempDir dir("platform-uninstall");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);

    CHECK(platform.list_modules().empty());
    auto ini = write_bundle(dir / "b", "m", ini_text("m", 1));
    CHECK(platform.install_module(ini).success);
    OpResult gone = platform.uninstall_module("m");
    CHECK(gone.success);
    CHECK(platform.list_modules().empty());
    CHECK(platform.dmodule_entries().empty());

    OpResult unknown = platform.uninstall_module("m");
    CHECK_FALSE(unknown.success);
    CHECK(unknown.code == ErrorCode::ModuleNotFound);
}

TEST_CASE("list_modules sorts by name across both kinds") {
    TempDir dir("platform-list");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::Discoverer);
    CHECK(platform.install_module(write_bundle(dir / "1", "zz", ini_text("zz", 1, "wizard"))).success);
    CHECK(platform.install_module(write_bundle(dir / "2", "aa", ini_text("aa", 1))).success);
    CHECK(platform.install_module(write_bundle(dir / "3", "mm", ini_text("mm", 2, "wizard"))).success);
    auto rows = platform.list_modules();
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].name == "aa");
    CHECK(rows[1].name == "mm");
    CHECK(rows[2].name == "zz");
    CHECK(rows[0].kind == ModuleKind::Tool);
    CHECK(rows[2].kind == ModuleKind::Wizard);
}

TEST_CASE("platforms are isolated: same name on both platforms coexists") {
    TempDir dir("platform-isolation");
    Kernel kernel(dir / "home");
    Platform dataplug(kernel, PlatformKind::DataPlug);
    Platform discoverer(kernel, PlatformKind::Discoverer);
    auto ini = write_bundle(dir / "b", "m", ini_text("m", 1));
    CHECK(dataplug.install_module(ini).success);
    CHECK(discoverer.install_module(ini).success);
    CHECK(dataplug.uninstall_module("m").success);
    CHECK(discoverer.find_module("m").has_value());
}

TEST_CASE("registry persists across platform and kernel instances") {
    TempDir dir("platform-persist");
    auto ini = write_bundle(dir / "b", "keeper", ini_text("keeper", 4, "wizard", "minsup 9"));
    {
        Kernel kernel(dir / "home");
        Platform platform(kernel, PlatformKind::Discoverer);
        CHECK(platform.install_module(ini).success);
    }
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::Discoverer);
    auto rows = platform.list_modules();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].name == "keeper");
    CHECK(rows[0].version == 4);
    CHECK(rows[0].initialization == "minsup 9");
    auto dmodules = platform.dmodule_entries();
    REQUIRE(dmodules.size() == 1);
    CHECK(dmodules[0].kind == ModuleKind::Wizard);
}

TEST_CASE("activation: status propagation, missing modules, bad libraries") {
    TempDir dir("platform-activate");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);

    try {
        platform.activate_module("ghost", "u1");
        FAIL("expected ModuleNotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ModuleNotFound);
    }

    auto probe = write_bundle(dir / "probe", "probe", ini_text("probe", 1), true);
    CHECK(platform.install_module(probe).success);
    setenv("IBDWB_PROBE_MODE", "status:42", 1);
    CHECK(platform.activate_module("probe", "u1") == 42);
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
    CHECK(platform.activate_module("probe", "u1") == 0);
    CHECK_FALSE(platform.is_active("probe", "u1"));

    // a non-library file fails to load and leaves no active entry behind
    auto junk = write_bundle(dir / "junk", "junk", ini_text("junk", 1), false);
    CHECK(platform.install_module(junk).success);
    try {
        platform.activate_module("junk", "u1");
        FAIL("expected LibraryLoadFailure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LibraryLoadFailure);
    }
    CHECK_FALSE(platform.is_active("junk", "u1"));
}

TEST_CASE("activation records the pair in TACTIVETABLE for the duration") {
    TempDir dir("platform-active-entry");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);
    auto probe = write_bundle(dir / "probe", "probe", ini_text("probe", 1), true);
    CHECK(platform.install_module(probe).success);

    // the probe itself queries the system database for its own entry
    setenv("IBDWB_PROBE_MODE", "check-active", 1);
    setenv("IBDWB_PROBE_HOME", kernel.home_path_string().c_str(), 1);
    setenv("IBDWB_PROBE_STMT",
           "SELECT NAME FROM TACTIVETABLE WHERE NAME = 'probe' AND USERNAME = 'u7'", 1);
    CHECK(platform.activate_module("probe", "u7") == 0);
    CHECK_FALSE(platform.is_active("probe", "u7")); // removed after return
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
}

TEST_CASE("wizards receive the stored INIT string, tools an empty one") {
    TempDir dir("platform-init-string");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::Discoverer);

    auto wiz = write_bundle(dir / "w", "wiz", ini_text("wiz", 1, "wizard", "minsup 7"), true);
    CHECK(platform.install_module(wiz).success);
    std::string echo_file = (dir / "init-echo.txt").string();
    setenv("IBDWB_PROBE_MODE", ("init-echo:" + echo_file).c_str(), 1);
    CHECK(platform.activate_module("wiz", "u1") == 0);
    {
        std::ifstream in(echo_file, std::ios::binary);
        std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(got == "minsup 7");
    }

    auto tool = write_bundle(dir / "t", "tooly", ini_text("tooly", 1, "tool", "pagesize 4096"), true);
    CHECK(platform.install_module(tool).success);
    testutil::LogCapture capture;
    CHECK(platform.activate_module("tooly", "u1") == 0);
    {
        std::ifstream in(echo_file, std::ios::binary);
        std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(got.empty()); // tool got no init bytes
    }
    CHECK(capture.contains("carries an INIT string"));
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
}

TEST_CASE("control transfer: plugin log calls bracket the activation with nothing between") {
    TempDir dir("platform-control");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);
    auto probe = write_bundle(dir / "probe", "probe", ini_text("probe", 1), true);
    CHECK(platform.install_module(probe).success);

    setenv("IBDWB_PROBE_MODE", "log", 1);
    testutil::LogCapture capture;
    CHECK(platform.activate_module("probe", "u1") == 0);
    auto entries = capture.entries();
    std::vector<std::string> messages;
    for (const auto& [level, message] : entries) messages.push_back(message);
    auto entry_at = std::find(messages.begin(), messages.end(), "probe-entry");
    auto exit_at = std::find(messages.begin(), messages.end(), "probe-exit");
    REQUIRE(entry_at != messages.end());
    REQUIRE(exit_at != messages.end());
    CHECK(entry_at + 1 == exit_at); // host stayed out of the way
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
}

TEST_CASE("concurrent duplicate activation is refused; uninstall waits for inactivity") {
    TempDir dir("platform-concurrent");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);
    auto probe = write_bundle(dir / "probe", "probe", ini_text("probe", 1), true);
    CHECK(platform.install_module(probe).success);

    std::string gate = (dir / "gate").string();
    setenv("IBDWB_PROBE_MODE", ("block:" + gate).c_str(), 1);
    std::thread first([&] { CHECK(platform.activate_module("probe", "u1") == 0); });
    while (!platform.is_active("probe", "u1")) std::this_thread::yield();

    try {
        platform.activate_module("probe", "u1");
        FAIL("expected ModuleActive");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ModuleActive);
    }
    OpResult blocked = platform.uninstall_module("probe");
    CHECK_FALSE(blocked.success);
    CHECK(blocked.code == ErrorCode::ModuleActive);

    std::ofstream(gate) << "go";
    first.join();
    CHECK(platform.uninstall_module("probe").success);
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
}

TEST_CASE("deactivate clears stale entries and is idempotent") {
    TempDir dir("platform-deactivate");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);
    auto probe = write_bundle(dir / "probe", "probe", ini_text("probe", 1), true);
    CHECK(platform.install_module(probe).success);

    // simulate a crash: seed a stale active entry directly
    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = kernel.home_path_string();
    req.user = "system";
    req.statement = "INSERT INTO TACTIVETABLE(PLATFORM, NAME, USERNAME) VALUES ('DATAPLUG', "
                    "'probe', 'ghost')";
    REQUIRE(kernel.execute(req).success);
    CHECK(platform.is_active("probe", "ghost"));

    platform.deactivate_module("probe", "ghost");
    CHECK_FALSE(platform.is_active("probe", "ghost"));

    testutil::LogCapture capture;
    platform.deactivate_module("probe", "ghost"); // absent: warn, no change
    CHECK(capture.contains("nothing to deactivate"));

    // unlock round trip: the pair activates again afterwards
    setenv("IBDWB_PROBE_MODE", "status:0", 1);
    CHECK(platform.activate_module("probe", "ghost") == 0);
}

TEST_CASE("property: version monotonicity against a map-maximum model") {
    TempDir dir("platform-monotone");
    Kernel kernel(dir / "home");
    Platform platform(kernel, PlatformKind::DataPlug);

    const std::vector<std::string> names = {"m1", "m2", "m3"};
    std::map<std::string, std::map<uint64_t, std::filesystem::path>> bundles;
    int n = 0;
    for (const auto& name : names)
        for (uint64_t v = 1; v <= 4; ++v)
            bundles[name][v] =
                write_bundle(dir / ("b" + std::to_string(n++)), name + "v" + std::to_string(v),
                             ini_text(name, v));

    std::map<std::string, uint64_t> model;
    std::mt19937_64 rng(5);
    for (int step = 0; step < 400; ++step) {
        const std::string& name = names[std::uniform_int_distribution<size_t>(0, 2)(rng)];
        if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
            OpResult out = platform.uninstall_module(name);
            CHECK(out.success == (model.count(name) > 0));
            model.erase(name);
        } else {
            uint64_t version = std::uniform_int_distribution<uint64_t>(1, 4)(rng);
            InstallResult out = platform.install_module(bundles[name][version]);
            auto it = model.find(name);
            if (it == model.end()) {
                CHECK(out.success);
                model[name] = version;
            } else if (version == it->second) {
                CHECK_FALSE(out.success);
                CHECK(out.message == "Tool already installed");
            } else if (version < it->second) {
                CHECK_FALSE(out.success);
                CHECK(out.message == "Attempt to install older version");
            } else {
                CHECK(out.success);
                it->second = version;
            }
        }
        // registered versions never decrease and match the model exactly
        std::map<std::string, uint64_t> actual;
        for (const auto& rec : platform.list_modules()) actual[rec.name] = rec.version;
        REQUIRE(actual == model);
    }
}
