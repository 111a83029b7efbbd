/// @file dataset.hpp
/// @brief The example-level training/eval record, dataset manifests, and their
///        jsonl serialization. Every artifact file starts with a header record
///        carrying the config hash that produced it.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ragsynth/context_assembly.hpp"
#include "ragsynth/jsonl.hpp"

namespace ragsynth::dataset {

inline constexpr const char* kRefusalPhrase = "I don't know.";

enum class StageTag { stage1, stage2, eval };
enum class Provenance { rag_v1_like, sec_synth, web_like, refusal_neg, single_step };

const char* stage_tag_name(StageTag tag);
StageTag stage_tag_from_name(const std::string& name);
const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct QAExample {
    std::string id;
    std::string question;
    context::NumberedContext context;
    std::string answer;
    std::vector<int> cited_sources;
    bool answerable = true;
    StageTag stage_tag = StageTag::stage1;
    Provenance provenance = Provenance::sec_synth;
};

// Enforces the record invariants: unanswerable examples carry exactly the
// canonical refusal and no citations; answerable examples cite at least one
// in-range source.
void validate(const QAExample& example);

ojson example_to_json(const QAExample& example);
QAExample example_from_json(const ojson& j);

// ---------------------------------------------------------------------------
// Artifact headers
// ---------------------------------------------------------------------------

ojson make_artifact_header(const std::string& artifact, const std::string& config_hash);

// Verifies the header and returns the data records that follow it. A hash
// mismatch is an error unless force is set; expected_hash empty skips the check.
std::vector<ojson> check_artifact_header(std::vector<ojson> records, const std::string& artifact,
                                         const std::string& expected_hash, bool force);

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

struct DatasetManifest {
    std::string name;
    StageTag stage_tag = StageTag::stage1;
    std::string strategy;  // external_only | internal_only | combined | curriculum | ratio_sweep | ratio
    uint64_t seed = 0;
    double target_ratio = 0.0;
    double achieved_ratio = 0.0;
    std::map<std::string, std::size_t> counts_by_provenance;
    ojson metadata;  // inert annotations (LR schedule, sweep landmarks)
    std::vector<QAExample> examples;
};

// Informational learning-rate metadata carried on curriculum manifests; the
// toolkit never trains.
ojson stage_lr_metadata(StageTag tag);

void recount_provenance(DatasetManifest& manifest);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest,
                    const std::string& config_hash);
DatasetManifest read_manifest(const std::filesystem::path& path,
                              const std::string& expected_hash = "", bool force = false);

std::vector<QAExample> read_examples(const std::filesystem::path& path,
                                     const std::string& expected_hash = "", bool force = false);
void write_examples(const std::filesystem::path& path, const std::vector<QAExample>& examples,
                    const std::string& config_hash);

}  // namespace ragsynth::dataset
