#pragma once

#include <iosfwd>

namespace hsflow::cli {

/// Exit codes: 0 success, 1 input or precondition error, 2 numerical contract violation.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsflow::cli
