#pragma once

#include <map>
#include <string>

namespace ibdwb::plugins {

// Run parameters for module activations travel in the IBDWB_MODULE_ARGS
// environment variable as space-separated key=value tokens (the ABI itself
// carries only the registered INIT string). Values cannot contain spaces.
inline constexpr const char* kModuleArgsEnv = "IBDWB_MODULE_ARGS";

std::map<std::string, std::string> parse_module_args(const char* raw);

} // namespace ibdwb::plugins
