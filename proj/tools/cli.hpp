// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsav::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kGuardError = 3,
    kInternalError = 4,
};

/// Runs one CLI invocation; args excludes the program name. Diagnostics go
/// to `err`, help text and summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gsav::cli
