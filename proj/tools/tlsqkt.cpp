// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/cli/cli.hpp"

int main(int argc, char** argv) { return tlsqkt::cli::main(argc, argv); }
