#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlm/common.hpp"

namespace vlm {

struct PrfScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct EvalResult {
    std::string task;
    int64_t n_samples = 0;
    double accuracy = 0;
    std::optional<PrfScores> prf; // binary tasks only
    double aggregate_f1 = 0;
    std::map<uint64_t, double> per_seed_accuracy;
};

// Case-normalized, whitespace-trimmed comparison.
std::string normalize_answer(const std::string& s);

// Fraction of exact matches after normalization.
double exact_match_accuracy(const std::vector<std::string>& predictions,
                            const std::vector<std::string>& references);

// Binary precision/recall/F1 with "yes" as the positive class. Accepts
// yes/no/y/n (case-insensitive); anything else is a parse error.
// Zero-denominator cases return 0.
PrfScores binary_prf(const std::vector<std::string>& predictions,
                     const std::vector<std::string>& references);

// Arithmetic mean of the three subset F1 scores.
double pope_aggregate(double random_f1, double popular_f1, double adversarial_f1);

} // namespace vlm
