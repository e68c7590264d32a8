#include "certlab/types.hpp"

#include "parse_util.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace certlab {

NormOrder::NormOrder(double p) : p_(p) {
    if (!(p > 0.0)) {
        throw std::invalid_argument(fmt::format("norm order must be positive (got {})", p));
    }
}

NormOrder NormOrder::parse(std::string_view text) {
    return NormOrder(detail::parse_double(text, "norm order p"));
}

std::string NormOrder::str() const {
    return is_infinite() ? std::string("inf") : fmt::format("{}", p_);
}

ProbabilityPair::ProbabilityPair(double p1_, double p2_) : p1(p1_), p2(p2_) {
    if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0)) {
        throw std::invalid_argument(fmt::format("probabilities must lie in [0, 1] (got p1={}, p2={})", p1, p2));
    }
}

}  // namespace certlab
