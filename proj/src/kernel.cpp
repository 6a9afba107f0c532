#include "ibdwb/kernel.hpp"

namespace ibdwb {

using storage::TxMode;
using storage::TxVerdict;

Kernel::Kernel(std::filesystem::path home) : home_(std::move(home)) {
    storage::open_database(home_, /*create_if_missing=*/true);
}

Kernel::DispatchResult Kernel::dispatch(const KernelRequest& request) {
    DispatchResult result;
    switch (request.action) {
    case KernelRequest::Action::Execute:
        result.outcome = execute(request);
        break;
    case KernelRequest::Action::Disconnect:
        disconnect({request.path, request.user});
        break;
    case KernelRequest::Action::Status:
        result.report = status();
        break;
    }
    return result;
}

Kernel::Session& Kernel::session_for(const SessionKey& key) {
    auto it = sessions_.find(key);
    if (it != sessions_.end()) return it->second;
    Session session;
    session.key = key;
    session.db = storage::open_database(key.path, /*create_if_missing=*/false);
    return sessions_.emplace(key, std::move(session)).first->second;
}

void Kernel::evict_if_idle(const SessionKey& key) {
    auto it = sessions_.find(key);
    if (it != sessions_.end() && it->second.gauge() == 0) sessions_.erase(it);
}

SqlOutcome Kernel::execute_locked(const KernelRequest& request, bool hold_cursor,
                                  uint64_t* cursor_out) {
    if (request.statement.empty())
        return SqlOutcome::fail(ErrorCode::MalformedRequest, "EXECUTE needs a statement",
                                request.statement);
    SessionKey key{request.path, request.user};
    Session* session;
    try {
        session = &session_for(key);
    } catch (const Error& e) {
        return SqlOutcome::fail(e.code(), e.what(), request.statement);
    }

    SqlOutcome outcome = session->tx ? session->tx->execute(request.statement)
                                     : session->db->execute_autocommit(request.statement);

    if (hold_cursor && outcome.success) {
        uint64_t id = next_cursor_++;
        cursors_[id] = key;
        ++session->cursors;
        if (cursor_out) *cursor_out = id;
    }
    evict_if_idle(key);
    return outcome;
}

SqlOutcome Kernel::execute(const KernelRequest& request) {
    std::lock_guard lock(mu_);
    return execute_locked(request, false, nullptr);
}

Kernel::CursorExecution Kernel::execute_holding_cursor(const KernelRequest& request) {
    std::lock_guard lock(mu_);
    CursorExecution result;
    result.outcome = execute_locked(request, true, &result.cursor_id);
    return result;
}

void Kernel::release_cursor(uint64_t cursor_id) {
    std::lock_guard lock(mu_);
    auto it = cursors_.find(cursor_id);
    if (it == cursors_.end()) {
        log_message(LogLevel::Warn, "release of unknown cursor " + std::to_string(cursor_id));
        return;
    }
    SessionKey key = it->second;
    cursors_.erase(it);
    auto sit = sessions_.find(key);
    if (sit != sessions_.end() && sit->second.cursors > 0) {
        --sit->second.cursors;
        evict_if_idle(key);
    }
}

void Kernel::disconnect(const SessionKey& key) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(key);
    if (it == sessions_.end()) return; // idempotent
    if (it->second.tx) {
        try {
            it->second.tx->end(TxVerdict::Rollback);
        } catch (const Error&) {
        }
        it->second.tx.reset();
    }
    // orphan any cursors still pointing at this session
    for (auto cit = cursors_.begin(); cit != cursors_.end();) {
        if (cit->second == key)
            cit = cursors_.erase(cit);
        else
            ++cit;
    }
    sessions_.erase(it);
}

SessionReport Kernel::status() const {
    std::lock_guard lock(mu_);
    SessionReport report;
    for (const auto& [key, session] : sessions_) {
        report.rows.push_back(
            {key.path, key.user, session.open_transactions(), session.gauge()});
    }
    return report;
}

size_t Kernel::session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

uint64_t Kernel::open_explicit_transaction(const SessionKey& key, TxMode mode) {
    std::lock_guard lock(mu_);
    Session& session = session_for(key);
    if (session.tx)
        throw Error(ErrorCode::TransactionAlreadyOpen,
                    "session already holds an open transaction");
    try {
        session.tx.emplace(session.db->begin(mode));
    } catch (const Error&) {
        evict_if_idle(key); // do not leak a freshly registered idle session
        throw;
    }
    return session.tx->id();
}

void Kernel::close_explicit_transaction(const SessionKey& key, TxVerdict verdict) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(key);
    if (it == sessions_.end() || !it->second.tx)
        throw Error(ErrorCode::UnknownTransaction, "session has no open transaction");
    storage::Transaction tx = std::move(*it->second.tx);
    it->second.tx.reset();
    try {
        tx.end(verdict);
    } catch (const Error&) {
        evict_if_idle(key);
        throw;
    }
    evict_if_idle(key);
}

} // namespace ibdwb
