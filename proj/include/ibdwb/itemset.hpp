#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibdwb/common.hpp"
#include "ibdwb/plugin_abi.h"

namespace ibdwb::plugins {

struct ItemsetQuery {
    std::string database;
    std::string table;
    std::string item_column;
    std::string txn_column;
    uint64_t minsup = 1;
    std::string user = "plug";
    std::string password;
};

struct ItemsetResult {
    std::vector<std::string> items; // sorted
    uint64_t support = 0;
    bool operator==(const ItemsetResult&) const = default;
};

// Level-wise frequent-itemset mining over (transaction, item) pairs read
// through the host services. Results carry every itemset with support >=
// minsup, items sorted, ordered by (size, items). Throws Error on unknown
// table/columns reported by the host.
std::vector<ItemsetResult> frequent_itemsets(const ibdwb_host_services* services, void* host_ctx,
                                             const ItemsetQuery& query);

// Level-wise mining over already-materialized transactions (the core the
// host-facing entry delegates to).
std::vector<ItemsetResult> mine_itemsets(const std::vector<std::vector<std::string>>& transactions,
                                         uint64_t minsup);

} // namespace ibdwb::plugins
