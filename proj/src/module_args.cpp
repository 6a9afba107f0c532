#include "ibdwb/module_args.hpp"

#include <sstream>

namespace ibdwb::plugins {

std::map<std::string, std::string> parse_module_args(const char* raw) {
    std::map<std::string, std::string> args;
    if (!raw) return args;
    std::istringstream in(raw);
    std::string token;
    while (in >> token) {
        size_t eq = token.find('=');
        if (eq == std::string::npos) continue;
        args[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return args;
}

} // namespace ibdwb::plugins
