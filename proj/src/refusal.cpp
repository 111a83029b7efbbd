#include "ragsynth/refusal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ragsynth/common.hpp"

namespace ragsynth::refusal {

long required_negatives(std::size_t positives, double target_ratio) {
    if (target_ratio <= 0.0) return 0;
    return std::llround(target_ratio * static_cast<double>(positives) / (1.0 - target_ratio));
}

dataset::QAExample build_negative(const std::string& question,
                                  const std::vector<ingest::Passage>& related_pool,
                                  const ingest::Passage& gold,
                                  const context::DistractorOptions& options,
                                  std::mt19937_64& rng) {
    auto distractors = context::select_distractors(gold, related_pool, options, rng);

    dataset::QAExample example;
    example.id = "neg-" + hex64(fnv1a64(question + '\x1f' + gold.id)).substr(0, 12);
    example.question = question;
    example.context = context::assemble_negative_context(distractors);
    example.answer = dataset::kRefusalPhrase;
    example.answerable = false;
    example.stage_tag = dataset::StageTag::stage2;
    example.provenance = dataset::Provenance::refusal_neg;
    dataset::validate(example);
    return example;
}

std::pair<std::vector<dataset::QAExample>, RatioPlan> enforce_ratio(
    const std::vector<dataset::QAExample>& positives,
    const std::vector<dataset::QAExample>& negatives, double target_ratio, std::mt19937_64& rng) {
    if (target_ratio < 0.0 || target_ratio > 0.5)
        throw UsageError("negative target ratio must lie in [0, 0.5], got " +
                         std::to_string(target_ratio));

    const long k = required_negatives(positives.size(), target_ratio);
    if (k > static_cast<long>(negatives.size()))
        throw DataError("negative pool shortfall: target ratio " + format_ratio(target_ratio) +
                        " over " + std::to_string(positives.size()) + " positives requires " +
                        std::to_string(k) + " negatives, only " +
                        std::to_string(negatives.size()) + " available");

    // Partial Fisher-Yates: the first k slots are a uniform sample without
    // replacement, in sampled order.
    std::vector<std::size_t> index(negatives.size());
    std::iota(index.begin(), index.end(), 0);
    for (long i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> draw(static_cast<std::size_t>(i),
                                                        index.size() - 1);
        std::swap(index[static_cast<std::size_t>(i)], index[draw(rng)]);
    }

    std::vector<dataset::QAExample> dataset_out = positives;
    dataset_out.reserve(positives.size() + static_cast<std::size_t>(k));
    for (long i = 0; i < k; ++i) dataset_out.push_back(negatives[index[static_cast<std::size_t>(i)]]);

    for (std::size_t i = dataset_out.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> draw(0, i - 1);
        std::swap(dataset_out[i - 1], dataset_out[draw(rng)]);
    }

    RatioPlan plan;
    plan.target_ratio = target_ratio;
    plan.achieved_count = static_cast<std::size_t>(k);
    plan.total = dataset_out.size();
    return {std::move(dataset_out), plan};
}

std::vector<double> default_sweep_grid() {
    std::vector<double> grid;
    for (int pct = 10; pct <= 30; pct += 2) grid.push_back(pct / 100.0);
    return grid;
}

std::string format_ratio(double ratio) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", ratio);
    return buf;
}

std::vector<dataset::DatasetManifest> sweep_manifests(
    const std::vector<dataset::QAExample>& positives,
    const std::vector<dataset::QAExample>& negatives, const std::vector<double>& ratios,
    uint64_t seed) {
    std::vector<dataset::DatasetManifest> manifests;
    manifests.reserve(ratios.size());
    for (double ratio : ratios) {
        uint64_t child_seed = derive_seed(seed, "sweep", format_ratio(ratio));
        std::mt19937_64 rng(child_seed);
        auto [examples, plan] = enforce_ratio(positives, negatives, ratio, rng);

        dataset::DatasetManifest manifest;
        manifest.name = "ratio_" + format_ratio(ratio);
        manifest.stage_tag = dataset::StageTag::stage2;
        manifest.strategy = "ratio_sweep";
        manifest.seed = child_seed;
        manifest.target_ratio = ratio;
        manifest.achieved_ratio = plan.achieved_ratio();
        manifest.metadata = ojson{{"best_ratio_landmark", 0.22},
                                  {"degradation_onset_landmark", 0.26}};
        manifest.examples = std::move(examples);
        dataset::recount_provenance(manifest);
        manifests.push_back(std::move(manifest));
    }
    return manifests;
}

}  // namespace ragsynth::refusal
