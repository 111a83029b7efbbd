#include "ragsynth/dataset.hpp"

#include <sstream>

#include "ragsynth/common.hpp"

namespace ragsynth::dataset {

const char* stage_tag_name(StageTag tag) {
    switch (tag) {
        case StageTag::stage1: return "stage1";
        case StageTag::stage2: return "stage2";
        case StageTag::eval: return "eval";
    }
    return "stage1";
}

StageTag stage_tag_from_name(const std::string& name) {
    if (name == "stage1") return StageTag::stage1;
    if (name == "stage2") return StageTag::stage2;
    if (name == "eval") return StageTag::eval;
    throw DataError("unknown stage tag: " + name);
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::rag_v1_like: return "rag_v1_like";
        case Provenance::sec_synth: return "sec_synth";
        case Provenance::web_like: return "web_like";
        case Provenance::refusal_neg: return "refusal_neg";
        case Provenance::single_step: return "single_step";
    }
    return "sec_synth";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "rag_v1_like") return Provenance::rag_v1_like;
    if (name == "sec_synth") return Provenance::sec_synth;
    if (name == "web_like") return Provenance::web_like;
    if (name == "refusal_neg") return Provenance::refusal_neg;
    if (name == "single_step") return Provenance::single_step;
    throw DataError("unknown provenance: " + name);
}

void validate(const QAExample& example) {
    if (example.id.empty()) throw DataError("example has empty id");
    if (!example.answerable) {
        if (example.answer != kRefusalPhrase)
            throw DataError("unanswerable example " + example.id +
                            " must carry the canonical refusal phrase");
        if (!example.cited_sources.empty())
            throw DataError("unanswerable example " + example.id + " must not cite sources");
        return;
    }
    if (example.cited_sources.empty())
        throw DataError("answerable example " + example.id + " has no citations");
    for (int k : example.cited_sources)
        if (k < 1 || k > static_cast<int>(example.context.sources.size()))
            throw DataError("example " + example.id + " cites out-of-range source [" +
                            std::to_string(k) + "]");
    if (example.context.gold_index < 0 ||
        example.context.gold_index > static_cast<int>(example.context.sources.size()))
        throw DataError("example " + example.id + " has invalid gold index");
}

ojson example_to_json(const QAExample& example) {
    ojson sources = ojson::array();
    for (const auto& p : example.context.sources)
        sources.push_back(ojson{{"id", p.id}, {"doc_id", p.doc_id}, {"text", p.text}});
    return ojson{
        {"id", example.id},
        {"question", example.question},
        {"sources", std::move(sources)},
        {"gold_index", example.context.gold_index},
        {"answer", example.answer},
        {"cited_sources", example.cited_sources},
        {"answerable", example.answerable},
        {"stage_tag", stage_tag_name(example.stage_tag)},
        {"provenance", provenance_name(example.provenance)},
    };
}

QAExample example_from_json(const ojson& j) {
    QAExample example;
    example.id = j.at("id").get<std::string>();
    example.question = j.at("question").get<std::string>();
    for (const auto& s : j.at("sources")) {
        ingest::Passage p;
        p.id = s.at("id").get<std::string>();
        p.doc_id = s.value("doc_id", "");
        p.text = s.at("text").get<std::string>();
        example.context.sources.push_back(std::move(p));
    }
    example.context.gold_index = j.value("gold_index", 0);
    example.context.rendered = context::render_context_block(example.context.sources);
    example.answer = j.at("answer").get<std::string>();
    example.cited_sources = j.value("cited_sources", std::vector<int>{});
    example.answerable = j.at("answerable").get<bool>();
    example.stage_tag = stage_tag_from_name(j.value("stage_tag", "stage1"));
    example.provenance = provenance_from_name(j.value("provenance", "sec_synth"));
    return example;
}

// =============================================================================
// Artifact headers
// =============================================================================

ojson make_artifact_header(const std::string& artifact, const std::string& config_hash) {
    return ojson{{"record_kind", "header"}, {"artifact", artifact}, {"config_hash", config_hash}};
}

std::vector<ojson> check_artifact_header(std::vector<ojson> records, const std::string& artifact,
                                         const std::string& expected_hash, bool force) {
    if (records.empty() || records.front().value("record_kind", "") != "header")
        throw DataError("artifact file is missing its header record (expected artifact '" +
                        artifact + "')");
    const ojson& header = records.front();
    if (!artifact.empty() && header.value("artifact", "") != artifact)
        throw DataError("artifact header names '" + header.value("artifact", "") +
                        "', expected '" + artifact + "'");
    if (!expected_hash.empty() && !force) {
        std::string found = header.value("config_hash", "");
        if (found != expected_hash)
            throw DataError("config hash mismatch: artifact built with " + found +
                            ", current config is " + expected_hash + " (use --force to override)");
    }
    records.erase(records.begin());
    return records;
}

// =============================================================================
// Manifests
// =============================================================================

ojson stage_lr_metadata(StageTag tag) {
    // Conflicting max sequence lengths appear in the source configs; both are
    // retained verbatim for downstream trainers rather than picking one.
    ojson common{{"max_seq_len_variants", {16384, 65536}},
                 {"max_seq_len_note", "source configs disagree; both values retained"}};
    if (tag == StageTag::stage1)
        return ojson{{"learning_rate", 1e-6}, {"schedule", "cosine"}, {"training", common}};
    if (tag == StageTag::stage2)
        return ojson{{"learning_rate", 5e-6}, {"schedule", "linear"}, {"training", common}};
    return ojson::object();
}

void recount_provenance(DatasetManifest& manifest) {
    manifest.counts_by_provenance.clear();
    for (const auto& e : manifest.examples)
        ++manifest.counts_by_provenance[provenance_name(e.provenance)];
}

namespace {

ojson manifest_header(const DatasetManifest& manifest, const std::string& config_hash) {
    ojson counts = ojson::object();
    for (const auto& [k, v] : manifest.counts_by_provenance) counts[k] = v;
    return ojson{
        {"record_kind", "manifest_header"},
        {"name", manifest.name},
        {"config_hash", config_hash},
        {"seed", manifest.seed},
        {"stage_tag", stage_tag_name(manifest.stage_tag)},
        {"strategy", manifest.strategy},
        {"target_ratio", manifest.target_ratio},
        {"achieved_ratio", manifest.achieved_ratio},
        {"total", manifest.examples.size()},
        {"counts_by_provenance", std::move(counts)},
        {"metadata", manifest.metadata.is_null() ? ojson::object() : manifest.metadata},
    };
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest,
                    const std::string& config_hash) {
    std::ostringstream out;
    out << manifest_header(manifest, config_hash).dump() << '\n';
    for (const auto& e : manifest.examples) out << example_to_json(e).dump() << '\n';
    atomic_write_text(path, out.str());
}

DatasetManifest read_manifest(const std::filesystem::path& path, const std::string& expected_hash,
                              bool force) {
    auto records = read_jsonl(path);
    if (records.empty() || records.front().value("record_kind", "") != "manifest_header")
        throw DataError("manifest file is missing its header record: " + path.string());
    const ojson& header = records.front();
    if (!expected_hash.empty() && !force) {
        std::string found = header.value("config_hash", "");
        if (found != expected_hash)
            throw DataError("config hash mismatch: manifest built with " + found +
                            ", current config is " + expected_hash +
                            " (use --force to override)");
    }
    DatasetManifest manifest;
    manifest.name = header.value("name", "");
    manifest.seed = header.value("seed", uint64_t{0});
    manifest.stage_tag = stage_tag_from_name(header.value("stage_tag", "stage1"));
    manifest.strategy = header.value("strategy", "");
    manifest.target_ratio = header.value("target_ratio", 0.0);
    manifest.achieved_ratio = header.value("achieved_ratio", 0.0);
    manifest.metadata = header.value("metadata", ojson::object());
    for (std::size_t i = 1; i < records.size(); ++i)
        manifest.examples.push_back(example_from_json(records[i]));
    recount_provenance(manifest);
    return manifest;
}

std::vector<QAExample> read_examples(const std::filesystem::path& path,
                                     const std::string& expected_hash, bool force) {
    auto records = read_jsonl(path);
    if (!records.empty() && records.front().value("record_kind", "") == "manifest_header")
        return read_manifest(path, expected_hash, force).examples;
    records = check_artifact_header(std::move(records), "", expected_hash, force);
    std::vector<QAExample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(example_from_json(r));
    return out;
}

void write_examples(const std::filesystem::path& path, const std::vector<QAExample>& examples,
                    const std::string& config_hash) {
    std::ostringstream out;
    out << make_artifact_header("examples", config_hash).dump() << '\n';
    for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
    atomic_write_text(path, out.str());
}

}  // namespace ragsynth::dataset
