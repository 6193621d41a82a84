#ifndef LATE_CLI_H_
#define LATE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace late {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// args excludes the program name. Reports go to --out (or the configured
// output_path) when given, otherwise to `out`; messages go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace late

#endif  // LATE_CLI_H_
