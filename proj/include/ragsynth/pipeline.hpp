/// @file pipeline.hpp
/// @brief End-to-end driver: configuration, seed fan-out, stage manifests, and
///        the full ingest -> synth -> assembly -> judge -> refusal -> manifest
///        -> fidelity pipeline. Stages run sequentially; work inside a stage is
///        parallel per item with per-item derived seeds, so output is
///        independent of scheduling.
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ragsynth/context_assembly.hpp"
#include "ragsynth/dataset.hpp"
#include "ragsynth/gateway.hpp"
#include "ragsynth/ingest.hpp"
#include "ragsynth/qa_synth.hpp"

namespace ragsynth::pipeline {

struct GatewaySettings {
    std::string backend = "mock";  // mock | http
    std::string endpoint_url;
    std::string api_token;  // supports env:VAR indirection
    std::string model_name;
    int max_parallel = 4;
    int retry_max = 3;
    int timeout_ms = 30000;
    int backoff_ms = 250;
    std::string mock_script;  // jsonl rule file; empty = built-in rules
    bool mock_strict = true;
    double temperature_generate = 0.7;
    double temperature_judge = 0.0;
    int max_tokens = 512;
};

struct PipelineConfig {
    uint64_t seed = 42;

    std::vector<std::string> input_paths;
    std::string input_format = "jsonl";  // jsonl | plain_text
    std::string real_queries_path;       // optional: enables the fidelity stage
    std::string lexicon_path;            // optional: defaults to the built-in lexicon
    std::string rag_v1_pool_path;        // optional external example pools
    std::string web_pool_path;

    ingest::ChunkPolicy chunk;
    synth::StyleWeights styles = synth::StyleWeights::defaults();

    int questions_per_passage = 2;
    double alternate_share = 0.23;       // contrastive + template share
    double contrastive_sub_share = 0.6;  // split inside the alternate share
    int gen_max_retries = 2;

    double negative_share = 0.35;  // question slots reserved for negatives
    double target_ratio = 0.22;
    std::vector<double> sweep_grid;  // empty = default 0.10..0.30 step 0.02

    context::DistractorOptions distractors;
    context::PositionMixture position;

    double judge_threshold = 5.0;
    std::string judge_reference_mode = "gold_passage";  // gold_passage | self

    std::string manifest_strategy = "curriculum";

    GatewaySettings gateway;
};

ojson config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const ojson& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Embedded in every artifact header; downstream subcommands refuse mismatched
// inputs unless forced.
std::string config_hash(const PipelineConfig& config);

// Builds the configured backend (built-in mock rules when no script is given).
gateway::Gateway make_gateway(const PipelineConfig& config);
const std::vector<gateway::MockRule>& default_mock_rules();

// Runs fn(0..n-1) on up to `threads` workers; the first exception wins and is
// rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Stage manifests
// ---------------------------------------------------------------------------

using PoolMap = std::map<dataset::Provenance, std::vector<dataset::QAExample>>;

// external_only -> one manifest from {rag_v1_like, sec_synth};
// internal_only -> one from {web_like, refusal_neg};
// combined      -> one shuffled union of everything;
// curriculum    -> stage1 (external) then stage2 (internal), each tagged and
//                  carrying its learning-rate metadata.
std::vector<dataset::DatasetManifest> build_stage_manifests(const PoolMap& pools,
                                                            const std::string& strategy,
                                                            uint64_t seed);

// ---------------------------------------------------------------------------
// Pipeline stages (shared by run_pipeline and the per-stage CLI subcommands)
// ---------------------------------------------------------------------------

struct QuestionRecord {
    std::string id;
    synth::CandidateQuestion q;
    bool negative_track = false;  // reserved for gold-withheld negatives
};

struct AnswerRecord {
    QuestionRecord question;
    synth::GroundedAnswer answer;
};

ojson question_to_json(const QuestionRecord& rec);
QuestionRecord question_from_json(const ojson& j);
ojson answer_to_json(const AnswerRecord& rec);
AnswerRecord answer_from_json(const ojson& j);

ojson passage_to_json(const ingest::Passage& p);
ingest::Passage passage_from_json(const ojson& j);

// Per-item failures are dropped (appended to drop_log), not fatal.
using DropLog = std::vector<std::string>;

std::vector<QuestionRecord> stage_genq(const PipelineConfig& config,
                                       const std::vector<ingest::Passage>& passages,
                                       gateway::Gateway& gw, DropLog* drop_log = nullptr);

// Grounded answers over gold-only contexts with hint = 1; refusals are dropped.
std::vector<AnswerRecord> stage_genans(const PipelineConfig& config,
                                       const std::vector<QuestionRecord>& questions,
                                       const std::vector<ingest::Passage>& passages,
                                       gateway::Gateway& gw, DropLog* drop_log = nullptr);

// Distractor injection, positional placement, citation renumbering.
std::vector<dataset::QAExample> stage_assemble(const PipelineConfig& config,
                                               const std::vector<AnswerRecord>& answers,
                                               const std::vector<ingest::Passage>& passages,
                                               DropLog* drop_log = nullptr);

struct JudgeStageResult {
    std::vector<dataset::QAExample> kept;
    std::vector<dataset::QAExample> dropped;
    std::vector<ojson> audit;  // {example_id, verdict, kept}
};

JudgeStageResult stage_judge(const PipelineConfig& config,
                             const std::vector<dataset::QAExample>& examples,
                             gateway::Gateway& gw, DropLog* drop_log = nullptr);

std::vector<dataset::QAExample> stage_negatives(const PipelineConfig& config,
                                                const std::vector<QuestionRecord>& questions,
                                                const std::vector<ingest::Passage>& passages,
                                                DropLog* drop_log = nullptr);

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct RunResult {
    std::filesystem::path out_dir;
    std::string config_hash;
    std::size_t documents = 0;
    std::size_t passages = 0;
    std::size_t questions = 0;
    std::size_t answered = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::size_t negatives = 0;
    std::size_t dataset_size = 0;
    std::vector<std::string> manifest_names;
    std::vector<std::string> warnings;
};

// Executes every stage, writing artifacts under out_dir. While a run is in
// flight artifacts live under out_dir/partial/ and move to out_dir on success,
// so a failed run leaves its completed stages behind for inspection.
RunResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir,
                       std::ostream* log = nullptr);

// The resolved execution plan, printable without touching any gateway.
std::string dry_run_plan(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace ragsynth::pipeline
