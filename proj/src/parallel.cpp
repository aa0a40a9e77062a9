#include "ensobs/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef ENSOBS_HAVE_OPENMP
#include <omp.h>
#endif

namespace ensobs {

int num_threads() {
#ifdef ENSOBS_HAVE_OPENMP
  int nt = omp_get_max_threads();
#else
  int nt = 1;
#endif
  if (const char* env = std::getenv("ENSEMBLE_SCOPE_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1 && cap < nt) nt = cap;
    } catch (...) {
      // ignore malformed values
    }
  }
  return nt;
}

bool has_openmp() {
#ifdef ENSOBS_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace ensobs
