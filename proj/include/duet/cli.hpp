// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/env.hpp>

#include <string_view>

namespace duet
{

/// Exit codes: 0 ok, 1 verification or evaluation failure, 2 configuration or input error, 3 replay mismatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMismatch = 3;

/// Domain registry for the command line.
DomainPtr domain_by_name(std::string_view name);

/// Entry point of the duet command-line tool.
int run_cli(int argc, char** argv);

} // namespace duet
