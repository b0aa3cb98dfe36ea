#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "gvs/cli.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
    // Keep large training temporaries on the heap instead of fresh mappings.
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
    return gvs::run_cli(argc, argv, std::cout, std::cerr);
}
