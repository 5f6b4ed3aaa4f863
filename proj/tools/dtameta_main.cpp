// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#include "dtameta/cli.hpp"

int main(int argc, char** argv) { return dtameta::cli::run(argc, argv); }
