#pragma once

#include <iosfwd>

namespace npsurv::cli {

/// Entry point of the `npsurv` command line. Returns the process exit code:
/// 0 success, 1 computational failure, 2 usage or validation error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace npsurv::cli
