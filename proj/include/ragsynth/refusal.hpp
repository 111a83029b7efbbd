/// @file refusal.hpp
/// @brief Unanswerable-example construction and negative-ratio control,
///        including the ratio sweep.
#pragma once

#include <random>
#include <utility>
#include <vector>

#include "ragsynth/dataset.hpp"

namespace ragsynth::refusal {

struct RatioPlan {
    double target_ratio = 0.0;
    std::size_t achieved_count = 0;  // negatives in the emitted dataset
    std::size_t total = 0;

    double achieved_ratio() const {
        return total == 0 ? 0.0 : static_cast<double>(achieved_count) / static_cast<double>(total);
    }
};

// Negatives needed so that k/(P+k) lands within rounding of the target:
// k = round(target * P / (1 - target)), half-up.
long required_negatives(std::size_t positives, double target_ratio);

// Builds an unanswerable example by withholding the gold passage: the context
// holds only topically related distractors and the target output is the
// canonical refusal phrase.
dataset::QAExample build_negative(const std::string& question,
                                  const std::vector<ingest::Passage>& related_pool,
                                  const ingest::Passage& gold,
                                  const context::DistractorOptions& options, std::mt19937_64& rng);

// Mixes all positives with k seeded, sampled-without-replacement negatives and
// shuffles. Errors state the shortfall when the negative pool cannot meet the
// target.
std::pair<std::vector<dataset::QAExample>, RatioPlan> enforce_ratio(
    const std::vector<dataset::QAExample>& positives,
    const std::vector<dataset::QAExample>& negatives, double target_ratio, std::mt19937_64& rng);

// 0.10 to 0.30 in 2-point increments (11 ratios).
std::vector<double> default_sweep_grid();

// One manifest per ratio, each independently seeded from (seed, ratio).
std::vector<dataset::DatasetManifest> sweep_manifests(
    const std::vector<dataset::QAExample>& positives,
    const std::vector<dataset::QAExample>& negatives, const std::vector<double>& ratios,
    uint64_t seed);

std::string format_ratio(double ratio);  // "0.22"

}  // namespace ragsynth::refusal
