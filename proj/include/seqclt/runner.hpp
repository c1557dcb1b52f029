#ifndef SEQCLT_RUNNER_HPP
#define SEQCLT_RUNNER_HPP

#include <string>
#include <vector>

namespace seqclt {

// Orchestrates one CLI invocation. Returns the process exit code:
// 0 completed/pass, 1 malformed config or usage, 2 failed diagnostic,
// 3 inconclusive or conflicting evidence.
int run_cli(const std::vector<std::string>& args);

} // namespace seqclt

#endif
