#include <doctest.h>

#include "air/hash.hpp"
#include "air/pipeline.hpp"
#include "support.hpp"
#include "toy_run.hpp"

using namespace air;
using airtest::TempDir;

TEST_CASE("budget formulas match the loop structure") {
    IirConfig iir;  // judge-doc, check on, 5 iterations
    CHECK(iir_loop_calls_per_doc(iir) == 20);
    CHECK(export_calls_per_doc(iir) == 2);

    iir.reuse_post_check_response = true;
    CHECK(iir_loop_calls_per_doc(iir) == 15);

    iir.reuse_post_check_response = false;
    iir.check_enabled = false;
    CHECK(iir_loop_calls_per_doc(iir) == 10);

    iir.mode = JudgmentMode::no_judge;
    CHECK(iir_loop_calls_per_doc(iir) == 5);

    iir.mode = JudgmentMode::judge_model_ref;
    iir.check_enabled = true;
    CHECK(iir_loop_calls_per_doc(iir) == 21);  // +1 cached reference answer

    IirConfig baseline;
    baseline.iterations = 0;
    baseline.response_source = ResponseSource::refined_doc;
    CHECK(iir_loop_calls_per_doc(baseline) == 0);
    CHECK(export_calls_per_doc(baseline) == 0);
}

TEST_CASE("toy pipeline runs end-to-end on the scripted mock") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());

    Services services = build_services(
        config, std::filesystem::path(config.out_dir) / stage_files::kAudit);
    PipelineResult result = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));

    auto out = std::filesystem::path(config.out_dir);
    CHECK(std::filesystem::exists(out / stage_files::kFiltered));
    CHECK(std::filesystem::exists(out / stage_files::kFilterReport));
    CHECK(std::filesystem::exists(out / stage_files::kSelected));
    CHECK(std::filesystem::exists(out / stage_files::kIig));
    CHECK(std::filesystem::exists(out / stage_files::kTraces));
    CHECK(std::filesystem::exists(out / stage_files::kDataset));
    CHECK(std::filesystem::exists(out / stage_files::kStatsDir / "report.json"));
    CHECK(std::filesystem::exists(out / stage_files::kManifest));
    CHECK(std::filesystem::exists(out / stage_files::kAudit));

    // 6 in, 2 rejected, 3 sampled
    CHECK(read_documents_jsonl(out / stage_files::kFiltered).size() == 4);
    auto selected = read_documents_jsonl(out / stage_files::kSelected);
    CHECK(selected.size() == 3);
    auto samples = read_dataset_jsonl(out / stage_files::kDataset);
    REQUIRE(samples.size() == 3);
    for (const DatasetSample& sample : samples) {
        CHECK(sample.constraint_set_used == "c_n_prime");
        CHECK(sample.num_constraints == 3);  // checks no,yes,no,no,yes
        CHECK(sample.final_response == airtest::toy_final_response(sample.doc_id));
        CHECK(sample.final_response != airtest::toy_refined(sample.doc_id));
    }

    // traces carry the full loop
    auto traces = read_traces_jsonl(out / stage_files::kTraces);
    REQUIRE(traces.size() == 3);
    for (const RefinementTrace& trace : traces) {
        CHECK(trace.steps.size() == 5);
        CHECK(trace.c_n.size() == 5);
        CHECK(trace.c_n_prime.size() == 3);
    }
}

TEST_CASE("toy pipeline call budget: 25 logical calls per exported document") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());

    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));

    auto samples =
        read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
    REQUIRE(samples.size() == 3);
    for (const DatasetSample& sample : samples) {
        CHECK(services.gateway->counter().by_doc(sample.doc_id) == 25);
    }
}

TEST_CASE("toy pipeline with reuse flag: 20 logical calls per exported document") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path(), /*reuse_post_check_response=*/true);
    PipelineConfig config = airtest::toy_config(tmp.path());
    config.iir.reuse_post_check_response = true;

    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));

    auto samples =
        read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
    REQUIRE(samples.size() == 3);
    for (const DatasetSample& sample : samples) {
        CHECK(services.gateway->counter().by_doc(sample.doc_id) == 20);
    }
}

TEST_CASE("rerun after success skips every stage with zero LLM calls") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());

    {
        Services services = build_services(config);
        REQUIRE(run_all(config, services, RunOptions{}).ok);
    }
    // fresh services: untouched mock script, fresh counter
    Services services = build_services(config);
    PipelineResult again = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(again.ok, (again.failed_stage + ": " + again.error));
    CHECK(services.gateway->counter().total() == 0);
}

TEST_CASE("editing a stage output forces that stage and everything after to recompute") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());
    auto out = std::filesystem::path(config.out_dir);

    {
        Services services = build_services(config);
        REQUIRE(run_all(config, services, RunOptions{}).ok);
    }
    std::string iig_before = airtest::read_file(out / stage_files::kIig);
    // hand-edit the iig output
    airtest::write_file(out / stage_files::kIig, iig_before + "\n");

    // iig and all later stages need their scripted calls again
    airtest::write_toy_inputs(tmp.path());
    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));
    CHECK(services.gateway->counter().by_template("back_translate") == 3);
    CHECK(services.gateway->counter().by_template("final_response") == 3);
    // corpus and sample stages stayed skipped: no embedding recompute needed,
    // and the filtered output is untouched
    CHECK(airtest::read_file(out / stage_files::kIig) != iig_before + "\n");
}

TEST_CASE("config change invalidates resume entirely") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());
    {
        Services services = build_services(config);
        REQUIRE(run_all(config, services, RunOptions{}).ok);
    }
    airtest::write_toy_inputs(tmp.path());
    config.sample.seed = 18;  // different config hash
    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));
    CHECK(services.gateway->counter().total() > 0);
}

TEST_CASE("two cold runs produce byte-identical exports and stats") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());

    auto run_into = [&](const std::string& out_name) {
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.out_dir = (tmp.path() / out_name).string();
        airtest::write_toy_inputs(tmp.path());
        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));
        return std::filesystem::path(config.out_dir);
    };
    auto out1 = run_into("out1");
    auto out2 = run_into("out2");

    for (const char* name : {stage_files::kFiltered, stage_files::kSelected, stage_files::kIig,
                             stage_files::kTraces, stage_files::kDataset}) {
        CHECK(sha256_file(out1 / name) == sha256_file(out2 / name));
    }
    for (const auto& entry : std::filesystem::directory_iterator(out1 / stage_files::kStatsDir)) {
        auto other = out2 / stage_files::kStatsDir / entry.path().filename();
        REQUIRE(std::filesystem::exists(other));
        CHECK(sha256_file(entry.path()) == sha256_file(other));
    }
}

TEST_CASE("failure at an LLM stage still persists earlier stage outputs") {
    TempDir tmp;
    airtest::write_file(tmp.path() / "corpus.jsonl", airtest::toy_corpus_jsonl());
    // empty script: the first back_translate call has no match
    atomic_write_text(tmp.path() / "script.json", "[]");
    PipelineConfig config = airtest::toy_config(tmp.path());

    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    CHECK(!result.ok);
    CHECK(result.failed_stage == "iig");
    auto out = std::filesystem::path(config.out_dir);
    CHECK(std::filesystem::exists(out / stage_files::kFiltered));
    CHECK(std::filesystem::exists(out / stage_files::kSelected));
    CHECK(std::filesystem::exists(out / stage_files::kManifest));
    CHECK(!std::filesystem::exists(out / stage_files::kIig));

    // the saved manifest lets a corrected rerun skip corpus and sample
    airtest::write_toy_inputs(tmp.path());
    Services retry_services = build_services(config);
    PipelineResult retry = run_all(config, retry_services, RunOptions{});
    REQUIRE_MESSAGE(retry.ok, (retry.failed_stage + ": " + retry.error));
}

TEST_CASE("baseline export modes: refined-doc vs regenerated") {
    SUBCASE("back-translation baseline: response equals R verbatim") {
        TempDir tmp;
        airtest::write_file(tmp.path() / "corpus.jsonl", airtest::toy_corpus_jsonl());
        std::vector<MockRule> script;
        for (const std::string& id : airtest::kToyKeptIds) {
            script.push_back({"back_translate",
                              {{"doc_id", id}},
                              {},
                              "<instruction>" + airtest::toy_instruction(id) + "</instruction>"});
            script.push_back({"refine_document",
                              {{"doc_id", id}},
                              {},
                              "<refined>" + airtest::toy_refined(id) + "</refined>"});
            script.push_back({"score_instruction", {{"doc_id", id}}, {}, "<score>5</score>"});
            script.push_back({"classify_domain",
                              {{"text", airtest::toy_instruction(id)}},
                              {},
                              "<domain>technology</domain>"});
        }
        atomic_write_text(tmp.path() / "script.json",
                          MockChatBackend::rules_to_json(script).dump(2));
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.iir.iterations = 0;
        config.iir.mode = JudgmentMode::no_judge;
        config.iir.response_source = ResponseSource::refined_doc;

        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        REQUIRE(samples.size() == 3);
        for (const DatasetSample& sample : samples) {
            CHECK(sample.final_response == airtest::toy_refined(sample.doc_id));
            CHECK(sample.final_instruction == airtest::toy_instruction(sample.doc_id));
            CHECK(sample.constraint_set_used == "none");
            CHECK(sample.num_constraints == 0);
        }
    }
    SUBCASE("back-and-forth baseline: response is regenerated, not R") {
        TempDir tmp;
        airtest::write_file(tmp.path() / "corpus.jsonl", airtest::toy_corpus_jsonl());
        std::vector<MockRule> script;
        for (const std::string& id : airtest::kToyKeptIds) {
            script.push_back({"back_translate",
                              {{"doc_id", id}},
                              {},
                              "<instruction>" + airtest::toy_instruction(id) + "</instruction>"});
            script.push_back({"refine_document",
                              {{"doc_id", id}},
                              {},
                              "<refined>" + airtest::toy_refined(id) + "</refined>"});
            script.push_back({"score_instruction", {{"doc_id", id}}, {}, "<score>5</score>"});
            script.push_back({"final_response", {{"doc_id", id}}, {},
                              airtest::toy_final_response(id)});
            script.push_back({"classify_domain",
                              {{"text", airtest::toy_instruction(id)}},
                              {},
                              "<domain>technology</domain>"});
        }
        atomic_write_text(tmp.path() / "script.json",
                          MockChatBackend::rules_to_json(script).dump(2));
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.iir.iterations = 0;
        config.iir.mode = JudgmentMode::no_judge;
        config.iir.response_source = ResponseSource::regenerated;

        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        REQUIRE_MESSAGE(result.ok, (result.failed_stage + ": " + result.error));
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        REQUIRE(samples.size() == 3);
        for (const DatasetSample& sample : samples) {
            CHECK(sample.final_response == airtest::toy_final_response(sample.doc_id));
            CHECK(sample.final_response != airtest::toy_refined(sample.doc_id));
        }
    }
}

TEST_CASE("dry run performs zero calls and reports the call budget") {
    TempDir tmp;
    airtest::write_toy_inputs(tmp.path());
    PipelineConfig config = airtest::toy_config(tmp.path());

    std::ostringstream log;
    RunOptions options;
    options.dry_run = true;
    options.log = &log;
    Services none;
    PipelineResult result = run_all(config, none, options);
    REQUIRE(result.ok);
    std::string text = log.str();
    CHECK(text.find("3 sampled") != std::string::npos);
    CHECK(text.find("stage iig: 3 docs x 3 calls/doc = 9") != std::string::npos);
    CHECK(text.find("stage refine: 3 docs x 20 calls/doc = 60") != std::string::npos);
    CHECK(text.find("stage export: 3 docs x 2 calls/doc = 6") != std::string::npos);
    // no out_dir side effects
    CHECK(!std::filesystem::exists(std::filesystem::path(config.out_dir)));
}
