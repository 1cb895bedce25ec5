// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace natres::cli {

// Exit codes of the natres tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;          // bad flags or config, message names the key path
inline constexpr int kExitNoResult = 2;       // not measurable, or no resistant configuration found
inline constexpr int kExitRuntime = 3;        // data, I/O or training failure

// Entry point of the tool: config, audit, pipeline, report, fed-audit.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace natres::cli
