#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "ibdwb/kernel.hpp"
#include "support/testutil.hpp"

using namespace ibdwb;
using storage::TxMode;
using storage::TxVerdict;
using testutil::TempDir;

namespace {

KernelRequest exec_req(const std::string& path, const std::string& user,
                       const std::string& statement) {
    KernelRequest req;
    req.action = KernelRequest::Action::Execute;
    req.path = path;
    req.user = user;
    req.statement = statement;
    return req;
}

} // namespace

TEST_CASE("first EXECUTE registers the session and evicts it at gauge zero") {
    TempDir dir("kernel-evict");
    Kernel kernel(dir / "home");
    storage::open_database(dir / "db", true);

    CHECK(kernel.session_count() == 0);
    SqlOutcome out = kernel.execute(exec_req(dir.str() + "/db", "u1", "CREATE TABLE T(A INTEGER)"));
    CHECK(out.success);
    CHECK(kernel.session_count() == 0); // auto transaction closed, gauge 0, evicted
}

TEST_CASE("sessions persist while an explicit transaction is open") {
    TempDir dir("kernel-explicit");
    Kernel kernel(dir / "home");
    storage::open_database(dir / "db", true);
    SessionKey key{dir.str() + "/db", "u1"};

    kernel.open_explicit_transaction(key, TxMode::Write);
    CHECK(kernel.session_count() == 1);
    CHECK(kernel.execute(exec_req(key.path, key.user, "CREATE TABLE T(A INTEGER)")).success);
    CHECK(kernel.session_count() == 1); // reused, not re-registered
    CHECK(kernel.execute(exec_req(key.path, key.user, "INSERT INTO T VALUES (1)")).success);
    CHECK(kernel.execute(exec_req(key.path, key.user, "INSERT INTO T VALUES (2)")).success);
    CHECK(kernel.session_count() == 1);
    kernel.close_explicit_transaction(key, TxVerdict::Commit);
    CHECK(kernel.session_count() == 0); // evicted at close

    SqlOutcome count = kernel.execute(exec_req(key.path, "u2", "SELECT COUNT(*) FROM T"));
    CHECK(count.dataset.rows[0][0] == Value::integer(2));
}

TEST_CASE("explicit rollback discards every statement of the transaction") {
    TempDir dir("kernel-rollback");
    Kernel kernel(dir / "home");
    storage::open_database(dir / "db", true);
    SessionKey key{dir.str() + "/db", "u1"};
    CHECK(kernel.execute(exec_req(key.path, key.user, "CREATE TABLE T(A INTEGER)")).success);

    kernel.open_explicit_transaction(key, TxMode::Write);
    CHECK(kernel.execute(exec_req(key.path, key.user, "INSERT INTO T VALUES (1)")).success);
    CHECK(kernel.execute(exec_req(key.path, key.user, "INSERT INTO T VALUES (2)")).success);
    kernel.close_explicit_transaction(key, TxVerdict::Rollback);

    SqlOutcome count = kernel.execute(exec_req(key.path, key.user, "SELECT COUNT(*) FROM T"));
    CHECK(count.dataset.rows[0][0] == Value::integer(0));
}

TEST_CASE("dispatch covers STATUS and DISCONNECT") {
    TempDir dir("kernel-dispatch");
    Kernel kernel(dir / "home");
    storage::open_database(dir / "db", true);

    KernelRequest status;
    status.action = KernelRequest::Action::Status;
    auto report = kernel.dispatch(status);
    REQUIRE(report.report.has_value());
    CHECK(report.report->rows.empty());

    SessionKey key{dir.str() + "/db", "u1"};
    kernel.open_explicit_transaction(key, TxMode::Read);
    report = kernel.dispatch(status);
    REQUIRE(report.report->rows.size() == 1);
    CHECK(report.report->rows[0].path == key.path);
    CHECK(report.report->rows[0].user == "u1");
    CHECK(report.report->rows[0].open_transactions == 1);
    CHECK(report.report->rows[0].gauge == 1);

    KernelRequest disconnect;
    disconnect.action = KernelRequest::Action::Disconnect;
    disconnect.path = key.path;
    disconnect.user = key.user;
    kernel.dispatch(disconnect);
    CHECK(kernel.session_count() == 0);
    CHECK(storage::open_transaction_count() == 0); // forced rollback released the slot
    kernel.dispatch(disconnect);                   // idempotent
}

TEST_CASE("EXECUTE without a statement is MalformedRequest") {
    TempDir dir("kernel-malformed");
    Kernel kernel(dir / "home");
    SqlOutcome out = kernel.execute(exec_req(dir.str() + "/nope", "u", ""));
    CHECK_FALSE(out.success);
    CHECK(out.error->code == ErrorCode::MalformedRequest);
}

TEST_CASE("EXECUTE against a missing database reports NotADatabase and keeps no session") {
    TempDir dir("kernel-nodb");
    Kernel kernel(dir / "home");
    SqlOutcome out = kernel.execute(exec_req(dir.str() + "/nope", "u", "SELECT 1 FROM T"));
    CHECK_FALSE(out.success);
    CHECK(out.error->code == ErrorCode::NotADatabase);
    CHECK(kernel.session_count() == 0);
}

TEST_CASE("routing transparency: dispatch equals direct storage execution") {
    TempDir dir("kernel-transparent");
    Kernel kernel(dir / "home");
    auto db = storage::open_database(dir / "db", true);
    REQUIRE(db->execute_autocommit("CREATE TABLE T(A INTEGER, B VARCHAR(4))").success);
    REQUIRE(db->execute_autocommit("INSERT INTO T VALUES (1, 'x')").success);
    REQUIRE(db->execute_autocommit("INSERT INTO T VALUES (2, 'y')").success);

    const char* statements[] = {
        "SELECT A, B FROM T ORDER BY 1 DESC",
        "SELECT COUNT(*) FROM T",
        "SELECT NOPE FROM T",
        "SELEKT",
    };
    for (const char* stmt : statements) {
        SqlOutcome via_kernel = kernel.execute(exec_req(dir.str() + "/db", "u", stmt));
        SqlOutcome direct = db->execute_autocommit(stmt);
        CHECK(via_kernel.success == direct.success);
        if (direct.success)
            CHECK(via_kernel.dataset == direct.dataset);
        else
            CHECK(via_kernel.error->code == direct.error->code);
    }
}

TEST_CASE("transaction cap travels through the kernel") {
    TempDir dir("kernel-cap");
    Kernel kernel(dir / "home");
    std::vector<SessionKey> keys;
    for (int i = 0; i < 6; ++i) {
        storage::open_database(dir / ("db" + std::to_string(i)), true);
        keys.push_back({dir.str() + "/db" + std::to_string(i), "u"});
    }
    for (int i = 0; i < 5; ++i) kernel.open_explicit_transaction(keys[(size_t)i], TxMode::Read);
    try {
        kernel.open_explicit_transaction(keys[5], TxMode::Read);
        FAIL("expected TransactionLimitExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TransactionLimitExceeded);
    }
    CHECK(kernel.session_count() == 5); // the failed sixth session was not leaked
    for (int i = 0; i < 5; ++i)
        kernel.close_explicit_transaction(keys[(size_t)i], TxVerdict::Rollback);
    CHECK(kernel.session_count() == 0);
}

TEST_CASE("cursor-holding execution keeps a session alive until release") {
    TempDir dir("kernel-cursor");
    Kernel kernel(dir / "home");
    auto db = storage::open_database(dir / "db", true);
    REQUIRE(db->execute_autocommit("CREATE TABLE T(A INTEGER)").success);

    auto exec = kernel.execute_holding_cursor(exec_req(dir.str() + "/db", "u", "SELECT * FROM T"));
    REQUIRE(exec.outcome.success);
    CHECK(kernel.session_count() == 1);
    auto report = kernel.status();
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].open_transactions == 0);
    CHECK(report.rows[0].gauge == 1);

    kernel.release_cursor(exec.cursor_id);
    CHECK(kernel.session_count() == 0);

    testutil::LogCapture capture;
    kernel.release_cursor(exec.cursor_id); // unknown now: warn, no throw
    CHECK(capture.contains("unknown cursor"));
}

TEST_CASE("dispatch is safe to call from several threads") {
    TempDir dir("kernel-threads");
    Kernel kernel(dir / "home");
    const int nthreads = 4;
    for (int t = 0; t < nthreads; ++t) {
        auto db = storage::open_database(dir / ("db" + std::to_string(t)), true);
        REQUIRE(db->execute_autocommit("CREATE TABLE T(A INTEGER)").success);
    }
    std::vector<std::thread> workers;
    std::atomic<int> failures{0};
    for (int t = 0; t < nthreads; ++t) {
        workers.emplace_back([&, t] {
            std::string path = (dir / ("db" + std::to_string(t))).string();
            for (int i = 0; i < 50; ++i) {
                SqlOutcome ins =
                    kernel.execute(exec_req(path, "w" + std::to_string(t),
                                            "INSERT INTO T VALUES (" + std::to_string(i) + ")"));
                if (!ins.success) ++failures;
                SqlOutcome sel =
                    kernel.execute(exec_req(path, "w" + std::to_string(t), "SELECT COUNT(*) FROM T"));
                if (!sel.success) ++failures;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(failures.load() == 0);
    CHECK(kernel.session_count() == 0);
    for (int t = 0; t < nthreads; ++t) {
        std::string path = (dir / ("db" + std::to_string(t))).string();
        SqlOutcome count = kernel.execute(exec_req(path, "check", "SELECT COUNT(*) FROM T"));
        CHECK(count.dataset.rows[0][0] == Value::integer(50));
    }
}

TEST_CASE("property: eviction matches a reference state machine over 1000 events") {
    TempDir dir("kernel-model");
    Kernel kernel(dir / "home");

    const int paths = 3, users = 2;
    std::vector<std::string> dbs;
    for (int p = 0; p < paths; ++p) {
        storage::open_database(dir / ("db" + std::to_string(p)), true);
        dbs.push_back(dir.str() + "/db" + std::to_string(p));
        auto db = storage::open_database(dbs.back(), false);
        REQUIRE(db->execute_autocommit("CREATE TABLE T(A INTEGER)").success);
    }

    struct ModelSession {
        int open_tx = 0;
        bool write_mode = false;
        int cursors = 0;
    };
    std::map<SessionKey, ModelSession> model;
    std::map<uint64_t, SessionKey> model_cursors;
    std::vector<uint64_t> live_cursors;
    auto model_writer_open = [&](const std::string& path) {
        for (const auto& [key, s] : model)
            if (key.path == path && s.open_tx > 0 && s.write_mode) return true;
        return false;
    };
    auto model_total_tx = [&] {
        int n = 0;
        for (const auto& [key, s] : model) n += s.open_tx;
        return n;
    };
    auto check_against_model = [&] {
        SessionReport report = kernel.status();
        REQUIRE(report.rows.size() == model.size());
        size_t i = 0;
        for (const auto& [key, s] : model) {
            // every surviving entry has a positive gauge: eviction soundness
            REQUIRE(s.open_tx + s.cursors > 0);
            CHECK(report.rows[i].path == key.path);
            CHECK(report.rows[i].user == key.user);
            CHECK(report.rows[i].open_transactions == s.open_tx);
            CHECK(report.rows[i].gauge == s.open_tx + s.cursors);
            ++i;
        }
    };

    std::mt19937_64 rng(20250810);
    auto pick_key = [&] {
        return SessionKey{dbs[(size_t)std::uniform_int_distribution<int>(0, paths - 1)(rng)],
                          "u" + std::to_string(std::uniform_int_distribution<int>(1, users)(rng))};
    };

    for (int event = 0; event < 1000; ++event) {
        int kind = std::uniform_int_distribution<int>(0, 99)(rng);
        if (kind < 35) { // plain EXECUTE
            SessionKey key = pick_key();
            bool write_stmt = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
            std::string stmt = write_stmt ? "INSERT INTO T VALUES (1)" : "SELECT COUNT(*) FROM T";
            SqlOutcome out = kernel.execute(exec_req(key.path, key.user, stmt));
            auto it = model.find(key);
            bool has_tx = it != model.end() && it->second.open_tx > 0;
            if (has_tx) {
                bool expect_ok = !write_stmt || it->second.write_mode;
                CHECK(out.success == expect_ok);
            } else {
                // auto transaction: writer exclusion applies even to reads
                bool blocked = model_writer_open(key.path) || model_total_tx() >= 5;
                CHECK(out.success == !blocked);
            }
        } else if (kind < 55) { // open explicit
            SessionKey key = pick_key();
            bool write = std::uniform_int_distribution<int>(0, 2)(rng) == 0;
            bool expect_already = model.count(key) && model[key].open_tx > 0;
            bool expect_cap = model_total_tx() >= 5;
            bool expect_writer = model_writer_open(key.path);
            try {
                kernel.open_explicit_transaction(key, write ? TxMode::Write : TxMode::Read);
                CHECK_FALSE(expect_already);
                CHECK_FALSE(expect_cap);
                CHECK_FALSE(expect_writer);
                auto& s = model[key];
                s.open_tx = 1;
                s.write_mode = write;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::TransactionAlreadyOpen)
                    CHECK(expect_already);
                else if (e.code() == ErrorCode::TransactionLimitExceeded)
                    CHECK(expect_cap);
                else if (e.code() == ErrorCode::WriterBusy)
                    CHECK(expect_writer);
                else
                    FAIL("unexpected error ", e.what());
            }
        } else if (kind < 75) { // close explicit
            SessionKey key = pick_key();
            bool expect_open = model.count(key) && model[key].open_tx > 0;
            try {
                kernel.close_explicit_transaction(
                    key, std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? TxVerdict::Commit
                                                                            : TxVerdict::Rollback);
                CHECK(expect_open);
                auto& s = model[key];
                s.open_tx = 0;
                s.write_mode = false;
                if (s.cursors == 0) model.erase(key);
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::UnknownTransaction);
                CHECK_FALSE(expect_open);
            }
        } else if (kind < 85) { // cursor-holding execute
            SessionKey key = pick_key();
            auto exec =
                kernel.execute_holding_cursor(exec_req(key.path, key.user, "SELECT * FROM T"));
            auto it = model.find(key);
            bool has_tx = it != model.end() && it->second.open_tx > 0;
            bool blocked = !has_tx && (model_writer_open(key.path) || model_total_tx() >= 5);
            CHECK(exec.outcome.success == !blocked);
            if (exec.outcome.success) {
                ++model[key].cursors;
                model_cursors[exec.cursor_id] = key;
                live_cursors.push_back(exec.cursor_id);
            }
        } else if (kind < 95) { // release a cursor
            if (!live_cursors.empty()) {
                size_t i =
                    std::uniform_int_distribution<size_t>(0, live_cursors.size() - 1)(rng);
                uint64_t id = live_cursors[i];
                live_cursors.erase(live_cursors.begin() + (long)i);
                kernel.release_cursor(id);
                auto key = model_cursors[id];
                model_cursors.erase(id);
                if (model.count(key)) {
                    auto& s = model[key];
                    if (s.cursors > 0) --s.cursors;
                    if (s.cursors == 0 && s.open_tx == 0) model.erase(key);
                }
            }
        } else { // disconnect
            SessionKey key = pick_key();
            kernel.disconnect(key);
            if (model.count(key)) {
                for (auto it = model_cursors.begin(); it != model_cursors.end();) {
                    if (it->second == key) {
                        live_cursors.erase(
                            std::find(live_cursors.begin(), live_cursors.end(), it->first));
                        it = model_cursors.erase(it);
                    } else {
                        ++it;
                    }
                }
                model.erase(key);
            }
        }
        check_against_model();
        CHECK(kernel.session_count() == model.size());
    }

    for (uint64_t id : live_cursors) kernel.release_cursor(id);
    for (const auto& [key, s] : model)
        if (s.open_tx > 0) kernel.close_explicit_transaction(key, TxVerdict::Rollback);
}
