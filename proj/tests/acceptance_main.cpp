// Runs every verification suite and prints one line per criterion.
// Exit status is nonzero if any suite fails.

#include <cstdio>

#include "sqmean/acceptance.hpp"

int main() {
    bool all = true;
    for (const auto& r : sqmean::run_acceptance()) {
        std::printf("%s  %-22s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.details.c_str());
        all = all && r.passed;
    }
    return all ? 0 : 1;
}
