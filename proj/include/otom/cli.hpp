#pragma once

// Command-line front end: `otom <haar|qkr|chirikov|choi|check|selftest>`.
// Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.

#include <ostream>
#include <string>
#include <vector>

namespace otom {

inline constexpr const char* kArtifactVersion = "otom 1.0.0";

/// args excludes the program name. Data files go to --out-dir, human-readable
/// summaries to `out`, diagnostics and progress lines to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace otom
