#pragma once

namespace poac {

/// Degree of parallelism for OpenMP regions. 0 selects the hardware default.
void set_num_threads(int n);
int num_threads();

/// Reads POAC_THREADS; returns 0 when unset or invalid.
int threads_from_env();

}  // namespace poac
