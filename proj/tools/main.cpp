// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gsav::cli::run(args, std::cout, std::cerr);
}
