#pragma once

#include <functional>
#include <span>

namespace certlab {

/// Deterministic base classifier h: R^d -> {0, ..., C-1}.
///
/// classify() is called concurrently from sampling workers and must not
/// mutate shared state.
class BaseClassifier {
public:
    virtual ~BaseClassifier() = default;

    virtual int num_classes() const = 0;
    virtual int classify(std::span<const double> z) const = 0;
};

// Adapts a callable; used by the python bindings and in tests.
class FunctionClassifier final : public BaseClassifier {
public:
    using Fn = std::function<int(std::span<const double>)>;

    FunctionClassifier(int num_classes, Fn fn) : num_classes_(num_classes), fn_(std::move(fn)) {}

    int num_classes() const override { return num_classes_; }
    int classify(std::span<const double> z) const override { return fn_(z); }

private:
    int num_classes_;
    Fn fn_;
};

}  // namespace certlab
