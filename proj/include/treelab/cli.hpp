#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "treelab/io.hpp"

namespace treelab {

inline constexpr const char* kToolName = "treelab";
inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 2 config error, 3 invariant violation, 4 resource
// exhaustion.
int cli_main(const std::vector<std::string>& args);

// Dispatch a resolved command config into `outdir`, returning the artifact
// file names written (manifest excluded). Reruns go through the same path, so
// identical configs produce byte-identical artifacts.
std::vector<std::string> run_command(const std::string& command, const Json& config,
                                     const std::filesystem::path& outdir);

}  // namespace treelab
