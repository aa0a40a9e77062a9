#pragma once

namespace ensobs {

/// Number of worker threads for the parallel kernels. Honors the
/// ENSEMBLE_SCOPE_THREADS environment variable; falls back to the
/// OpenMP default (or 1 when built without OpenMP).
int num_threads();

/// True when the library was built with OpenMP support.
bool has_openmp();

}  // namespace ensobs
