#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kgdd/cli.hpp"

int main(int argc, char** argv) {
    // Reports go to stdout; keep the log out of them.
    spdlog::set_default_logger(spdlog::stderr_color_mt("kgdd"));
    return kgdd::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
