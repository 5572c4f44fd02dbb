#pragma once

#include <cstddef>
#include <functional>

namespace raydiff {

/// Worker count used when a caller passes jobs <= 0. Defaults to the number
/// of logical cores; the CLI overrides it with --jobs.
int default_jobs();
void set_default_jobs(int jobs);

/// Runs task(i) for i in [0, n) on a pool of `jobs` threads. Tasks must write
/// only to their own slot of a caller-owned buffer; the caller reduces in
/// index order, which keeps results independent of the worker count.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, int jobs = 0);

}  // namespace raydiff
