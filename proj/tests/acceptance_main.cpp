#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <exception>
#include <string>

#include "noiselab/acceptance.hpp"
#include "noiselab/special.hpp"

int main(int argc, char** argv)
{
    noiselab::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) {
            opt.quick = true;
        } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::string ids = argv[++i];
            for (std::size_t a = 0, b; a <= ids.size(); a = b + 1) {
                b = std::min(ids.find(',', a), ids.size());
                opt.only.push_back(ids.substr(a, b - a));
            }
        } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
            opt.out_dir = argv[++i];
        } else {
            std::fprintf(stderr, "usage: %s [--quick] [--only A1,A2,...] [--out DIR]\n", argv[0]);
            return 2;
        }
    }
    if (const char* shift = std::getenv("NOISELAB_FAULT_CDF_SHIFT"))
        noiselab::testing::set_cdf_fault(std::strtod(shift, nullptr));
    try {
        auto report = noiselab::run_acceptance(opt);
        std::fputs(report.table().c_str(), stdout);
        return report.all_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 4;
    }
}
