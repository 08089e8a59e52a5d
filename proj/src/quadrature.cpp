#include "seqctl/quadrature.hpp"

#include "seqctl/errors.hpp"

namespace seqctl {

std::vector<double> simpson_weights(std::size_t points, double h) {
    if (points < 2) throw Error(ErrorCode::InvalidInput, "simpson_weights: need at least two nodes");
    std::vector<double> w(points, 0.0);
    const std::size_t intervals = points - 1;
    if (intervals == 1) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    const std::size_t simpson_intervals = (intervals % 2 == 0) ? intervals : intervals - 3;
    for (std::size_t i = 0; i + 2 <= simpson_intervals; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (simpson_intervals != intervals) {
        const std::size_t s = simpson_intervals;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    return w;
}

}  // namespace seqctl
