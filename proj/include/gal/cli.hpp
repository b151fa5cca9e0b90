#pragma once

namespace gal {

/// Full command-line front end. Returns the process exit code:
/// 0 success, 1 usage/config/contract error, 2 numeric abort during
/// training, 3 bound verification found a counterexample.
int run_cli(int argc, const char* const* argv);

}  // namespace gal
