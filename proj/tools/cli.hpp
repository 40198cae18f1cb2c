#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wassercalc::cli {

// Dispatches one CLI invocation. Exit codes: 0 success, 2 input/validation
// error, 3 solver failure, 4 NotStationary under --assert-stationary.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wassercalc::cli
