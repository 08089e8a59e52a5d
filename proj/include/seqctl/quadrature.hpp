#pragma once

#include <cstddef>
#include <vector>

namespace seqctl {

/// Composite Simpson weights for `points` equispaced nodes with spacing h.
/// An odd number of intervals closes with the 3/8 rule on the last three;
/// two nodes fall back to the trapezoid rule.
std::vector<double> simpson_weights(std::size_t points, double h);

}  // namespace seqctl
