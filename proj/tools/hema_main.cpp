// SPDX-License-Identifier: Apache-2.0
#include "hema/cli.hpp"

int main(int argc, char** argv) { return hema::cli::run(argc, argv); }
