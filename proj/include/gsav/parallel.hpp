// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace gsav::parallel {

/// Name of the environment variable that overrides the OpenMP thread count.
inline constexpr const char* kThreadEnvVar = "GSAV_NUM_THREADS";

int max_threads();
void set_num_threads(int n);

/// Applies GSAV_NUM_THREADS when set to a positive integer. Returns the
/// thread count in effect afterwards.
int apply_thread_env();

/// RAII override of the OpenMP thread count; restores the previous value.
class ScopedThreads {
  public:
    explicit ScopedThreads(int n);
    ~ScopedThreads();
    ScopedThreads(const ScopedThreads&) = delete;
    ScopedThreads& operator=(const ScopedThreads&) = delete;

  private:
    int previous_;
};

} // namespace gsav::parallel
