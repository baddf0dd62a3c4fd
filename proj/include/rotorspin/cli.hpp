#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rotorspin {

// Entry point of the rotorspin tool. Returns 0 on success, 2 on command-line
// misuse, 1 on runtime failure (message names the failing module).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace rotorspin
