#pragma once

#include <iosfwd>

namespace estimand::cli {

/// Exit codes: 0 success, 1 validation error, 2 numerical error. Errors are
/// reported on `err` as a JSON object.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace estimand::cli
