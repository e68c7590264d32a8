#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace certlab {

struct VerifyCell {
    nlohmann::json params;
    double statistic;
    double stderr_;
    double expected;
    bool pass;
};

struct VerifyReport {
    std::string suite;
    std::vector<VerifyCell> cells;

    bool pass() const;
    nlohmann::json to_json() const;
};

struct VerifyParams {
    // lemma2 / box / l1 geometry; unset values fall back to each suite's grid.
    std::vector<std::size_t> dims;
    double b = 1.0;
    std::vector<double> eps;
    double step = 0.02;
    std::size_t n = 100'000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

// Suite names: lemma1, lemma2, box, l1, flip, scaling, dominance, crossing.
const std::vector<std::string>& suite_names();

VerifyReport run_suite(const std::string& name, const VerifyParams& params);

}  // namespace certlab
