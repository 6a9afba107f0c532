// Discoverer module: level-wise frequent-itemset mining. The minimum
// support comes from the registered INIT string ("minsup <n>"); the data
// location comes from IBDWB_MODULE_ARGS:
//   db=<database dir> table=<name> item=<column> txn=<column> [user=<u>] [out=<file>]
// Results go to the log and, when out= is given, to that file as
// item1,item2<TAB>support lines.
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ibdwb/common.hpp"
#include "ibdwb/itemset.hpp"
#include "ibdwb/module_args.hpp"
#include "ibdwb/plugin_abi.h"

using namespace ibdwb;

namespace {

uint64_t minsup_from_init(const char* init, uint64_t init_len, const ibdwb_host_services* svc,
                          void* ctx) {
    std::istringstream in(std::string(init ? init : "", init_len));
    std::string word;
    uint64_t value = 0;
    if (in >> word && word == "minsup" && in >> value && value >= 1) return value;
    svc->log(ctx, IBDWB_LOG_WARN, "itemsetwiz: INIT does not carry 'minsup <n>'; using 1");
    return 1;
}

} // namespace

extern "C" int32_t WIZARDMAIN(void* host_ctx, const ibdwb_host_services* services,
                              const char* init, uint64_t init_len) {
    auto args = plugins::parse_module_args(std::getenv(plugins::kModuleArgsEnv));
    auto missing = [&](const char* key) {
        bool absent = !args.count(key);
        if (absent)
            services->log(host_ctx, IBDWB_LOG_ERROR,
                          (std::string("itemsetwiz: missing argument ") + key).c_str());
        return absent;
    };
    if (missing("db") || missing("table") || missing("item") || missing("txn"))
        return static_cast<int32_t>(ErrorCode::MalformedRequest);

    plugins::ItemsetQuery query;
    query.database = args["db"];
    query.table = args["table"];
    query.item_column = args["item"];
    query.txn_column = args["txn"];
    query.minsup = minsup_from_init(init, init_len, services, host_ctx);
    if (args.count("user")) query.user = args["user"];

    try {
        auto results = plugins::frequent_itemsets(services, host_ctx, query);
        std::ofstream out;
        if (args.count("out")) {
            out.open(args["out"], std::ios::binary | std::ios::trunc);
            if (!out) {
                services->log(host_ctx, IBDWB_LOG_ERROR,
                              ("itemsetwiz: cannot write " + args["out"]).c_str());
                return static_cast<int32_t>(ErrorCode::IoFailure);
            }
        }
        for (const auto& r : results) {
            std::string items;
            for (size_t i = 0; i < r.items.size(); ++i) {
                if (i) items += ",";
                items += r.items[i];
            }
            services->log(host_ctx, IBDWB_LOG_INFO,
                          ("itemsetwiz: {" + items + "}: " + std::to_string(r.support)).c_str());
            if (out.is_open()) out << items << '\t' << r.support << '\n';
        }
        return 0;
    } catch (const Error& e) {
        services->log(host_ctx, IBDWB_LOG_ERROR, (std::string("itemsetwiz: ") + e.what()).c_str());
        return static_cast<int32_t>(e.code());
    } catch (...) {
        return static_cast<int32_t>(ErrorCode::IoFailure);
    }
}
