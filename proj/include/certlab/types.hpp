#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace certlab {

/// Norm order p in (0, inf]. Infinity is stored as +inf so that
/// reciprocal() is exactly 0 and every d^(a - 1/p) formula needs no branch.
class NormOrder {
public:
    explicit NormOrder(double p);

    static NormOrder infinity() { return NormOrder(std::numeric_limits<double>::infinity()); }
    // Accepts positive reals and the literal "inf".
    static NormOrder parse(std::string_view text);

    double value() const { return p_; }
    double reciprocal() const { return 1.0 / p_; }
    bool is_infinite() const { return p_ == std::numeric_limits<double>::infinity(); }
    std::string str() const;

    friend bool operator==(NormOrder a, NormOrder b) { return a.p_ == b.p_; }
    friend bool operator<(NormOrder a, NormOrder b) { return a.p_ < b.p_; }

private:
    double p_;
};

/// Probabilities of the top two classes. Each lies in [0, 1]; ordering and
/// feasibility are exposed as predicates because the bound calculators must
/// still evaluate (and flag) pairs outside a theorem's hypotheses.
struct ProbabilityPair {
    ProbabilityPair(double p1, double p2);

    // Binary-case pair (p1, 1 - p1).
    static ProbabilityPair binary(double p1) { return ProbabilityPair(p1, 1.0 - p1); }

    bool ordered() const { return p2 <= p1; }
    bool feasible() const { return ordered() && p1 + p2 <= 1.0 + 1e-12; }

    double p1;
    double p2;
};

}  // namespace certlab
