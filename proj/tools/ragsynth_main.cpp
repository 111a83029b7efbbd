/// @file ragsynth_main.cpp
/// @brief Command-line surface. Every subcommand accepts --config/--seed/--out;
///        --dry-run prints the resolved plan without any gateway calls.
///        Exit codes: 0 success, 1 usage error, 2 data error, 3 gateway error.
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ragsynth/common.hpp"
#include "ragsynth/dataset.hpp"
#include "ragsynth/eval.hpp"
#include "ragsynth/fidelity.hpp"
#include "ragsynth/judge.hpp"
#include "ragsynth/lexicon.hpp"
#include "ragsynth/pipeline.hpp"
#include "ragsynth/refusal.hpp"
#include "ragsynth/text.hpp"

namespace fs = std::filesystem;
using namespace ragsynth;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out = "out";
    bool dry_run = false;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--out", opts.out, "output directory")->capture_default_str();
    cmd->add_flag("--dry-run", opts.dry_run, "print the resolved plan; no gateway calls");
    cmd->add_flag("--force", opts.force, "accept artifacts with mismatched config hashes");
}

pipeline::PipelineConfig resolve_config(const CommonOpts& opts) {
    pipeline::PipelineConfig config;
    if (!opts.config_path.empty()) config = pipeline::load_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

std::vector<ingest::Passage> load_passages(const fs::path& path, const std::string& hash,
                                           bool force) {
    auto records = dataset::check_artifact_header(read_jsonl(path), "passages", hash, force);
    std::vector<ingest::Passage> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(pipeline::passage_from_json(r));
    return out;
}

std::vector<pipeline::QuestionRecord> load_questions(const fs::path& path,
                                                     const std::string& hash, bool force) {
    auto records = dataset::check_artifact_header(read_jsonl(path), "questions", hash, force);
    std::vector<pipeline::QuestionRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(pipeline::question_from_json(r));
    return out;
}

std::vector<pipeline::AnswerRecord> load_answers(const fs::path& path, const std::string& hash,
                                                 bool force) {
    auto records = dataset::check_artifact_header(read_jsonl(path), "answers", hash, force);
    std::vector<pipeline::AnswerRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(pipeline::answer_from_json(r));
    return out;
}

// Examples from a manifest, a headered artifact, or a bare jsonl (external data).
std::vector<dataset::QAExample> load_examples_lenient(const fs::path& path,
                                                      const std::string& hash, bool force) {
    auto records = read_jsonl(path);
    if (records.empty()) return {};
    std::string kind = records.front().value("record_kind", "");
    if (kind == "manifest_header") return dataset::read_manifest(path, hash, force).examples;
    if (kind == "header")
        records = dataset::check_artifact_header(std::move(records), "", hash, force);
    std::vector<dataset::QAExample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(dataset::example_from_json(r));
    return out;
}

void write_records_file(const fs::path& path, const std::string& artifact,
                        const std::string& hash, const std::vector<ojson>& records) {
    std::string buf = dataset::make_artifact_header(artifact, hash).dump() + "\n";
    for (const auto& r : records) buf += r.dump() + "\n";
    atomic_write_text(path, buf);
}

void print_drops(const pipeline::DropLog& drops) {
    for (const auto& d : drops) std::cerr << "[drop] " << d << '\n';
}

fidelity::QuestionCorpus load_corpus(const fs::path& path, const std::string& label) {
    fidelity::QuestionCorpus corpus;
    corpus.label = label;
    if (path.extension() == ".jsonl") {
        auto records = read_jsonl(path);
        for (const auto& r : records) {
            if (!r.is_object()) {
                if (r.is_string()) corpus.questions.push_back(r.get<std::string>());
                continue;
            }
            std::string kind = r.value("record_kind", "");
            if (!kind.empty()) continue;  // skip artifact/manifest headers
            if (r.contains("question"))
                corpus.questions.push_back(r.at("question").get<std::string>());
            else if (r.contains("text"))
                corpus.questions.push_back(r.at("text").get<std::string>());
        }
    } else {
        for (const auto& line : text::split_lines(read_text_file(path))) {
            std::string q = text::strip(line);
            if (!q.empty()) corpus.questions.push_back(std::move(q));
        }
    }
    return corpus;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ragsynth: citation-grounded RAG training data synthesis and evaluation"};
    app.require_subcommand(1);

    // Shared option blocks (one instance per subcommand).
    std::map<std::string, CommonOpts> common;
    auto sub = [&](const std::string& name, const std::string& desc) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common(cmd, common[name]);
        return cmd;
    };

    // ingest
    std::vector<std::string> ingest_inputs;
    std::string ingest_format;
    auto* cmd_ingest = sub("ingest", "load source documents into documents.jsonl");
    cmd_ingest->add_option("--input", ingest_inputs, "input files (overrides config paths)");
    cmd_ingest->add_option("--format", ingest_format, "plain_text | jsonl");

    // chunk
    std::string chunk_documents;
    auto* cmd_chunk = sub("chunk", "segment documents into passage-length chunks");
    cmd_chunk->add_option("--documents", chunk_documents, "documents.jsonl")->required();

    // genq
    std::string genq_passages;
    auto* cmd_genq = sub("genq", "generate style-conditioned questions per passage");
    cmd_genq->add_option("--passages", genq_passages, "passages.jsonl")->required();

    // genans
    std::string genans_questions, genans_passages;
    auto* cmd_genans = sub("genans", "generate hinted grounded answers on gold contexts");
    cmd_genans->add_option("--questions", genans_questions, "questions.jsonl")->required();
    cmd_genans->add_option("--passages", genans_passages, "passages.jsonl")->required();

    // assemble
    std::string asm_answers, asm_passages;
    auto* cmd_assemble =
        sub("assemble", "inject distractors, place the gold passage, renumber citations");
    cmd_assemble->add_option("--answers", asm_answers, "answers.jsonl")->required();
    cmd_assemble->add_option("--passages", asm_passages, "passages.jsonl")->required();

    // negatives
    std::string neg_questions, neg_passages;
    auto* cmd_negatives = sub("negatives", "build gold-withheld refusal examples");
    cmd_negatives->add_option("--questions", neg_questions, "questions.jsonl")->required();
    cmd_negatives->add_option("--passages", neg_passages, "passages.jsonl")->required();

    // judge
    std::string judge_examples;
    auto* cmd_judge = sub("judge", "score examples with the answer-quality judge and filter");
    cmd_judge->add_option("--examples", judge_examples, "examples.jsonl")->required();

    // sweep
    std::string sweep_positives, sweep_negatives;
    std::vector<double> sweep_grid;
    auto* cmd_sweep = sub("sweep", "emit one ratio-controlled manifest per grid point");
    cmd_sweep->add_option("--positives", sweep_positives, "positive examples file")->required();
    cmd_sweep->add_option("--negatives", sweep_negatives, "negative examples file")->required();
    cmd_sweep->add_option("--grid", sweep_grid, "ratios (default 0.10..0.30 step 0.02)");

    // fidelity
    std::string fid_gen, fid_real, fid_lexicon;
    auto* cmd_fidelity = sub("fidelity", "distribution-fidelity report: generated vs real");
    cmd_fidelity->add_option("--gen", fid_gen, "generated question corpus")->required();
    cmd_fidelity->add_option("--real", fid_real, "real query corpus")->required();
    cmd_fidelity->add_option("--lexicon", fid_lexicon, "term lexicon file (default built-in)");

    // manifest
    std::string man_positives, man_negatives, man_strategy = "curriculum";
    std::string man_rag_pool, man_web_pool;
    auto* cmd_manifest = sub("manifest", "build stage/data-strategy manifests from pools");
    cmd_manifest->add_option("--positives", man_positives, "positive examples file")->required();
    cmd_manifest->add_option("--negatives", man_negatives, "negative examples file");
    cmd_manifest->add_option("--strategy", man_strategy,
                             "external_only | internal_only | combined | curriculum")
        ->capture_default_str();
    cmd_manifest->add_option("--rag-pool", man_rag_pool, "external rag_v1-like pool");
    cmd_manifest->add_option("--web-pool", man_web_pool, "external web-like pool");

    // eval
    std::string eval_test, eval_pred;
    bool eval_missing_as_refusal = false;
    double eval_overlap_threshold = 0.5;
    auto* cmd_eval = sub("eval", "score predictions against a labeled test set");
    cmd_eval->add_option("--test", eval_test, "test set jsonl (QAExample records)")->required();
    cmd_eval->add_option("--pred", eval_pred, "predictions jsonl {example_id, response}")
        ->required();
    cmd_eval->add_flag("--missing-as-refusal", eval_missing_as_refusal,
                       "count missing predictions as refusals instead of failing");
    cmd_eval->add_option("--overlap-threshold", eval_overlap_threshold,
                         "token-overlap F1 correctness threshold")
        ->capture_default_str();

    // run
    auto* cmd_run = sub("run", "execute the full pipeline");
    (void)cmd_run;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // 0 covers --help; everything else is a usage error
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        const CommonOpts& opts = common[name];
        auto config = resolve_config(opts);
        const std::string hash = pipeline::config_hash(config);
        const fs::path out_dir(opts.out);

        if (opts.dry_run && name != "run") {
            std::cout << name << ": dry run (config_hash " << hash << ", out " << opts.out
                      << ")\n";
            return 0;
        }

        if (name == "ingest") {
            if (!ingest_inputs.empty()) config.input_paths = ingest_inputs;
            if (!ingest_format.empty()) config.input_format = ingest_format;
            if (config.input_paths.empty()) throw UsageError("no input files given");
            if (config.input_format != "plain_text" && config.input_format != "jsonl")
                throw UsageError("unknown input format: " + config.input_format);
            auto docs = ingest::load_documents(
                {config.input_paths.begin(), config.input_paths.end()},
                config.input_format == "plain_text" ? ingest::InputFormat::plain_text
                                                    : ingest::InputFormat::jsonl);
            std::vector<ojson> records;
            for (const auto& d : docs)
                records.push_back(ojson{{"id", d.id},
                                        {"title", d.title},
                                        {"text", d.body},
                                        {"source_kind", ingest::source_kind_name(d.source_kind)}});
            write_records_file(out_dir / "documents.jsonl", "documents", hash, records);
            std::cout << "documents: " << docs.size() << "\n";
        } else if (name == "chunk") {
            auto records =
                dataset::check_artifact_header(read_jsonl(chunk_documents), "documents", hash,
                                               opts.force);
            std::vector<ojson> out;
            std::size_t count = 0;
            for (const auto& r : records) {
                ingest::Document doc;
                doc.id = r.at("id").get<std::string>();
                doc.title = r.value("title", doc.id);
                doc.body = r.at("text").get<std::string>();
                doc.source_kind = ingest::source_kind_from_name(r.value("source_kind", "generic"));
                for (const auto& p : ingest::chunk_document(doc, config.chunk)) {
                    out.push_back(pipeline::passage_to_json(p));
                    ++count;
                }
            }
            write_records_file(out_dir / "passages.jsonl", "passages", hash, out);
            std::cout << "passages: " << count << "\n";
        } else if (name == "genq") {
            auto passages = load_passages(genq_passages, hash, opts.force);
            auto gw = pipeline::make_gateway(config);
            pipeline::DropLog drops;
            auto questions = pipeline::stage_genq(config, passages, gw, &drops);
            print_drops(drops);
            std::vector<ojson> records;
            for (const auto& q : questions) records.push_back(pipeline::question_to_json(q));
            write_records_file(out_dir / "questions.jsonl", "questions", hash, records);
            std::cout << "questions: " << questions.size() << "\n";
        } else if (name == "genans") {
            auto questions = load_questions(genans_questions, hash, opts.force);
            auto passages = load_passages(genans_passages, hash, opts.force);
            auto gw = pipeline::make_gateway(config);
            pipeline::DropLog drops;
            auto answers = pipeline::stage_genans(config, questions, passages, gw, &drops);
            print_drops(drops);
            std::vector<ojson> records;
            for (const auto& a : answers) records.push_back(pipeline::answer_to_json(a));
            write_records_file(out_dir / "answers.jsonl", "answers", hash, records);
            std::cout << "answers: " << answers.size() << "\n";
        } else if (name == "assemble") {
            auto answers = load_answers(asm_answers, hash, opts.force);
            auto passages = load_passages(asm_passages, hash, opts.force);
            pipeline::DropLog drops;
            auto examples = pipeline::stage_assemble(config, answers, passages, &drops);
            print_drops(drops);
            dataset::write_examples(out_dir / "examples.jsonl", examples, hash);
            std::cout << "examples: " << examples.size() << "\n";
        } else if (name == "negatives") {
            auto questions = load_questions(neg_questions, hash, opts.force);
            auto passages = load_passages(neg_passages, hash, opts.force);
            pipeline::DropLog drops;
            auto negatives = pipeline::stage_negatives(config, questions, passages, &drops);
            print_drops(drops);
            dataset::write_examples(out_dir / "negatives.jsonl", negatives, hash);
            std::cout << "negatives: " << negatives.size() << "\n";
        } else if (name == "judge") {
            auto examples = load_examples_lenient(judge_examples, hash, opts.force);
            auto gw = pipeline::make_gateway(config);
            pipeline::DropLog drops;
            auto judged = pipeline::stage_judge(config, examples, gw, &drops);
            print_drops(drops);
            write_records_file(out_dir / "judge_audit.jsonl", "judge_audit", hash, judged.audit);
            dataset::write_examples(out_dir / "kept.jsonl", judged.kept, hash);
            dataset::write_examples(out_dir / "dropped.jsonl", judged.dropped, hash);
            std::cout << "kept: " << judged.kept.size() << " dropped: " << judged.dropped.size()
                      << "\n";
        } else if (name == "sweep") {
            auto positives = load_examples_lenient(sweep_positives, hash, opts.force);
            auto negatives = load_examples_lenient(sweep_negatives, hash, opts.force);
            auto grid = sweep_grid.empty()
                            ? (config.sweep_grid.empty() ? refusal::default_sweep_grid()
                                                         : config.sweep_grid)
                            : sweep_grid;
            auto manifests = refusal::sweep_manifests(positives, negatives, grid, config.seed);
            for (const auto& m : manifests) {
                fs::path dir = out_dir / "sweep" / m.name;
                dataset::write_manifest(dir / "manifest.jsonl", m, hash);
                std::cout << m.name << ": total " << m.examples.size() << " achieved "
                          << m.achieved_ratio << "\n";
            }
            std::cout << "manifests: " << manifests.size() << "\n";
        } else if (name == "fidelity") {
            auto gen = load_corpus(fid_gen, "generated");
            auto real = load_corpus(fid_real, "real");
            auto lex = fid_lexicon.empty() ? lexicon::default_financial_terms()
                                           : lexicon::load_lexicon_file(fid_lexicon);
            auto report = fidelity::fidelity_report(gen, real, lex);
            std::string table = fidelity::render_fidelity_table(report, gen, real);
            atomic_write_text(out_dir / "fidelity_report.txt", table);
            ojson j = fidelity::fidelity_to_json(report, gen.label, real.label);
            j["config_hash"] = hash;
            atomic_write_text(out_dir / "fidelity_report.json", j.dump(2) + "\n");
            std::cout << table;
        } else if (name == "manifest") {
            pipeline::PoolMap pools;
            auto positives = load_examples_lenient(man_positives, hash, opts.force);
            for (auto& e : positives) pools[e.provenance].push_back(e);
            if (!man_negatives.empty()) {
                auto negatives = load_examples_lenient(man_negatives, hash, opts.force);
                for (auto& e : negatives) pools[e.provenance].push_back(e);
            }
            if (!man_rag_pool.empty()) {
                auto pool = load_examples_lenient(man_rag_pool, "", true);
                auto& dst = pools[dataset::Provenance::rag_v1_like];
                dst.insert(dst.end(), pool.begin(), pool.end());
            }
            if (!man_web_pool.empty()) {
                auto pool = load_examples_lenient(man_web_pool, "", true);
                auto& dst = pools[dataset::Provenance::web_like];
                dst.insert(dst.end(), pool.begin(), pool.end());
            }
            auto manifests = pipeline::build_stage_manifests(pools, man_strategy, config.seed);
            fs::create_directories(out_dir / "manifests");
            for (const auto& m : manifests) {
                dataset::write_manifest(out_dir / "manifests" / (m.name + ".jsonl"), m, hash);
                std::cout << m.name << ": " << m.examples.size() << " example(s)\n";
            }
        } else if (name == "eval") {
            auto test_set = load_examples_lenient(eval_test, "", true);
            std::vector<evalh::Prediction> predictions;
            for (const auto& r : read_jsonl(eval_pred)) {
                if (r.is_object() && !r.value("record_kind", "").empty()) continue;
                predictions.push_back(
                    {r.at("example_id").get<std::string>(), r.at("response").get<std::string>()});
            }
            evalh::RunEvalOptions eval_opts;
            eval_opts.missing_as_refusal = eval_missing_as_refusal;
            eval_opts.scorer = evalh::overlap_scorer(eval_overlap_threshold);
            auto report = evalh::run_eval(test_set, predictions, eval_opts);
            std::string table = evalh::render_eval_table(report);
            atomic_write_text(out_dir / "eval_report.txt", table);
            atomic_write_text(out_dir / "eval_report.json",
                              evalh::eval_to_json(report).dump(2) + "\n");
            std::cout << table;
        } else if (name == "run") {
            if (opts.dry_run) {
                std::cout << pipeline::dry_run_plan(config, out_dir);
                return 0;
            }
            auto result = pipeline::run_pipeline(config, out_dir, &std::cerr);
            std::cout << "documents: " << result.documents << "\n"
                      << "passages:  " << result.passages << "\n"
                      << "questions: " << result.questions << "\n"
                      << "answered:  " << result.answered << "\n"
                      << "kept:      " << result.kept << "\n"
                      << "negatives: " << result.negatives << "\n"
                      << "dataset:   " << result.dataset_size << "\n"
                      << "hash:      " << result.config_hash << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
