// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/parallel.hpp>

#include <omp.h>

#include <cstdlib>
#include <string>

namespace gsav::parallel {

int max_threads() { return omp_get_max_threads(); }

void set_num_threads(int n) { omp_set_num_threads(n > 0 ? n : 1); }

int apply_thread_env() {
    if (const char* v = std::getenv(kThreadEnvVar)) {
        try {
            const int n = std::stoi(v);
            if (n > 0) set_num_threads(n);
        } catch (const std::exception&) {
            // Ignored: a malformed override leaves the OpenMP default.
        }
    }
    return max_threads();
}

ScopedThreads::ScopedThreads(int n) : previous_(omp_get_max_threads()) { set_num_threads(n); }

ScopedThreads::~ScopedThreads() { omp_set_num_threads(previous_); }

} // namespace gsav::parallel
