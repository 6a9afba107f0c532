#include "ibdwb/itemset.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace ibdwb::plugins {

namespace {

std::string upper_copy(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

using Itemset = std::vector<std::string>;

// candidates of size k+1 from frequent sets of size k sharing a (k-1)-prefix
std::vector<Itemset> generate_candidates(const std::vector<Itemset>& frequent) {
    std::vector<Itemset> candidates;
    std::set<Itemset> frequent_lookup(frequent.begin(), frequent.end());
    for (size_t i = 0; i < frequent.size(); ++i) {
        for (size_t j = i + 1; j < frequent.size(); ++j) {
            const Itemset& a = frequent[i];
            const Itemset& b = frequent[j];
            bool prefix_equal = true;
            for (size_t k = 0; k + 1 < a.size(); ++k)
                if (a[k] != b[k]) {
                    prefix_equal = false;
                    break;
                }
            if (!prefix_equal || a.back() >= b.back()) continue;
            Itemset candidate = a;
            candidate.push_back(b.back());
            // every k-subset must itself be frequent
            bool prune = false;
            for (size_t drop = 0; drop < candidate.size() && !prune; ++drop) {
                Itemset subset;
                for (size_t k = 0; k < candidate.size(); ++k)
                    if (k != drop) subset.push_back(candidate[k]);
                if (!frequent_lookup.count(subset)) prune = true;
            }
            if (!prune) candidates.push_back(std::move(candidate));
        }
    }
    return candidates;
}

bool contains_all(const std::set<std::string>& txn, const Itemset& items) {
    for (const auto& item : items)
        if (!txn.count(item)) return false;
    return true;
}

} // namespace

std::vector<ItemsetResult> mine_itemsets(const std::vector<std::vector<std::string>>& transactions,
                                         uint64_t minsup) {
    std::vector<std::set<std::string>> txns;
    txns.reserve(transactions.size());
    for (const auto& t : transactions) txns.emplace_back(t.begin(), t.end());

    std::vector<ItemsetResult> results;

    // L1
    std::map<std::string, uint64_t> singles;
    for (const auto& t : txns)
        for (const auto& item : t) ++singles[item];
    std::vector<Itemset> level;
    for (const auto& [item, count] : singles) {
        if (count < minsup) continue;
        level.push_back({item});
        results.push_back({{item}, count});
    }

    while (!level.empty()) {
        std::vector<Itemset> candidates = generate_candidates(level);
        std::vector<Itemset> next;
        for (auto& candidate : candidates) {
            uint64_t support = 0;
            for (const auto& t : txns)
                if (contains_all(t, candidate)) ++support;
            if (support < minsup) continue;
            results.push_back({candidate, support});
            next.push_back(std::move(candidate));
        }
        level = std::move(next);
    }

    std::sort(results.begin(), results.end(), [](const ItemsetResult& a, const ItemsetResult& b) {
        if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
        return a.items < b.items;
    });
    return results;
}

std::vector<ItemsetResult> frequent_itemsets(const ibdwb_host_services* services, void* host_ctx,
                                             const ItemsetQuery& query) {
    if (query.minsup < 1) throw Error(ErrorCode::MalformedRequest, "minsup must be at least 1");
    std::string statement = "SELECT " + upper_copy(query.txn_column) + ", " +
                            upper_copy(query.item_column) + " FROM " + upper_copy(query.table);
    ibdwb_result* result = nullptr;
    int32_t status = services->execute_sql(host_ctx, query.database.c_str(), query.user.c_str(),
                                           query.password.c_str(), statement.c_str(), &result);
    if (status != 0) {
        ErrorCode code = static_cast<ErrorCode>(status);
        throw Error(code, std::string("cannot read transactions (") + error_code_name(code) + ")");
    }

    std::map<std::string, std::set<std::string>> grouped;
    while (services->result_next_row(result)) {
        uint64_t txn_len = 0, item_len = 0;
        const char* txn = services->result_column_text(result, 0, &txn_len);
        const char* item = services->result_column_text(result, 1, &item_len);
        if (!txn || !item) continue; // NULL on either side: no pair
        grouped[std::string(txn, txn_len)].insert(std::string(item, item_len));
    }
    services->result_close(result);

    std::vector<std::vector<std::string>> transactions;
    transactions.reserve(grouped.size());
    for (const auto& [_, items] : grouped)
        transactions.emplace_back(items.begin(), items.end());
    return mine_itemsets(transactions, query.minsup);
}

} // namespace ibdwb::plugins
