// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: prep, synth, train, eval, trace, ablate.
//
// Exit codes: 0 success, 1 runtime failure (divergence, IO), 2 usage error or
// malformed input. A failed command that has an output directory leaves a
// "<command>.failed" marker there holding the one-line cause.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tlsqkt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadInput = 2;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace tlsqkt::cli
