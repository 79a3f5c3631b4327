#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pptkit::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kValidation = 3,
    kIo = 4,
    kDataFormat = 5,
};

/// Runs one command line. args[0] is the program name. Reports go to `out`,
/// structured errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pptkit::cli
