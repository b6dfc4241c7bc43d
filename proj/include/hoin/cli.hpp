#pragma once

namespace hoin {

// full command-line entry point (kept in the library so tests can run it
// in-process); returns the process exit code: 0 ok, 2 config error, 3 divergence
int cli_main(int argc, const char* const* argv);

} // namespace hoin
