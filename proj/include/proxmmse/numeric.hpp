#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace proxmmse {

/// Sum with a fixed pairwise reduction tree: the result depends only on the
/// input order, never on scheduling.
double pairwise_sum(std::span<const double> values);

/// log(sum exp(v_i)) with max shift; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> log_values);

/// Shortest decimal string that round-trips to the same double.
std::string format_shortest(double v);

/// Fixed 17-significant-digit decimal.
std::string format_g17(double v);

/// Worker count for batch loops: hardware concurrency, capped by the
/// PROXMMSE_THREADS environment variable when set.
unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// is visited exactly once; the first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body&& body);

}  // namespace proxmmse

#include "proxmmse/detail/parallel_impl.hpp"
