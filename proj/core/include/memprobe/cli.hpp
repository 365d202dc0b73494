#pragma once

#include <ostream>

namespace memprobe {

/// Entry point of the memprobe tool. Subcommands: run, resume, report,
/// compare, selftest. Returns 0 on success, 1 on a data or runtime error
/// and 2 on a usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memprobe
