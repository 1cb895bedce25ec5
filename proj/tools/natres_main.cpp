// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "natres/cli/commands.hpp"

int main(int argc, char** argv) { return natres::cli::run_command(argc, argv, std::cout, std::cerr); }
