// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is nonzero if any criterion fails.

#include <cstdlib>
#include <iostream>

#include "peerfx/acceptance.hpp"

int main(int argc, char** argv) {
    peerfx::AcceptanceOptions opt;
    opt.jobs = 1;
    if (argc > 1) opt.seed = std::strtoull(argv[1], nullptr, 10);
    if (argc > 2) opt.jobs = std::atoi(argv[2]);
    try {
        const auto results = peerfx::run_acceptance(opt);
        return peerfx::print_acceptance(results, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite aborted: " << e.what() << "\n";
        return 2;
    }
}
