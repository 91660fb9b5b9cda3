// Acceptance suite: every criterion prints one [PASS]/[FAIL] line; the
// process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "air/config.hpp"
#include "air/hash.hpp"
#include "air/pipeline.hpp"
#include "air/stats.hpp"
#include "air/text.hpp"
#include "support.hpp"
#include "toy_run.hpp"

using namespace air;
using airtest::TempDir;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

template <typename T, typename U>
void require_eq(const T& actual, const U& expected, const std::string& what) {
    if (!(actual == expected)) {
        std::ostringstream oss;
        oss << what << ": got " << actual << ", expected " << expected;
        throw CheckFailure(oss.str());
    }
}

// --- criterion 1: filter fidelity ---------------------------------------------

std::string spaced_bangs(int n) {
    std::string out;
    for (int i = 0; i < n; ++i) out += "! ";
    if (!out.empty()) out.pop_back();
    return out;
}

std::string letter_words(int n) {
    std::string out;
    for (int i = 0; i < n; ++i) out += "a ";
    if (!out.empty()) out.pop_back();
    return out;
}

void criterion_filter_fidelity() {
    FilterConfig config;  // 50 / 2048 words, paragraph repeat > 2, char run > 8
    std::string paragraph = airtest::words(20, "p");

    struct Expected {
        std::string id;
        std::string text;
        Verdict verdict;
        FilterReason reason;
    };
    std::vector<Expected> cases = {
        {"words-49", airtest::words(49), Verdict::rejected, FilterReason::too_short},
        {"words-50", airtest::words(50), Verdict::kept, FilterReason::none},
        {"words-2048", airtest::words(2048), Verdict::kept, FilterReason::none},
        {"words-2049", airtest::words(2049), Verdict::rejected, FilterReason::too_long},
        // 60 letters vs 60 symbols: a tie does not exceed
        {"symbols-eq", letter_words(60) + " " + spaced_bangs(60), Verdict::kept,
         FilterReason::none},
        // one extra symbol tips it
        {"symbols-gt", letter_words(60) + " " + spaced_bangs(61), Verdict::rejected,
         FilterReason::symbol_ratio},
        {"para-2x", paragraph + "\n\n" + paragraph + "\n\n" + airtest::words(20, "q"),
         Verdict::kept, FilterReason::none},
        {"para-3x", paragraph + "\n\n" + paragraph + "\n\n" + paragraph, Verdict::rejected,
         FilterReason::redundancy},
        {"run-8", airtest::words(50) + " " + std::string(8, '-'), Verdict::kept,
         FilterReason::none},
        {"run-9", airtest::words(50) + " " + std::string(9, '-'), Verdict::rejected,
         FilterReason::redundancy},
        {"clean", airtest::words(120, "topic"), Verdict::kept, FilterReason::none},
        // short AND symbol-heavy: length is checked first
        {"short-and-symbols", "$$$$$", Verdict::rejected, FilterReason::too_short},
    };
    require_eq(cases.size(), std::size_t{12}, "crafted suite size");

    std::vector<Document> docs;
    for (const Expected& c : cases) docs.push_back(make_document(c.id, c.text));
    FilterOutcome outcome = run_filters(docs, config);
    require_eq(outcome.reports.size(), cases.size(), "one report per document");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        require(outcome.reports[i].verdict == cases[i].verdict,
                cases[i].id + ": wrong verdict");
        require(outcome.reports[i].reason == cases[i].reason, cases[i].id + ": wrong reason");
    }
}

// --- criterion 2: sampler oracle equivalence -----------------------------------

// Brute-force re-simulation written independently of density_sample.
std::vector<std::string> oracle_chain(const std::vector<EmbeddedDoc>& pool, std::size_t n,
                                      uint64_t seed) {
    std::vector<bool> used(pool.size(), false);
    std::mt19937_64 engine(seed);
    std::size_t last = static_cast<std::size_t>(engine() % pool.size());
    used[last] = true;
    std::vector<std::string> out{pool[last].doc_id};
    while (out.size() < std::min(n, pool.size())) {
        std::size_t winner = pool.size();
        double winner_sim = 0.0;
        for (std::size_t c = 0; c < pool.size(); ++c) {
            if (used[c]) continue;
            double dot = 0.0;
            double nl = 0.0;
            double nc = 0.0;
            for (std::size_t k = 0; k < pool[c].vector.size(); ++k) {
                dot += pool[last].vector[k] * pool[c].vector[k];
                nl += pool[last].vector[k] * pool[last].vector[k];
                nc += pool[c].vector[k] * pool[c].vector[k];
            }
            double sim = dot / (std::sqrt(nl) * std::sqrt(nc));
            if (winner == pool.size() || sim < winner_sim ||
                (sim == winner_sim && pool[c].doc_id < pool[winner].doc_id)) {
                winner = c;
                winner_sim = sim;
            }
        }
        used[winner] = true;
        last = winner;
        out.push_back(pool[winner].doc_id);
    }
    return out;
}

void criterion_sampler_oracle() {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t size = 2 + rng() % 199;  // <= 200
        std::size_t dim = 2 + rng() % 15;    // <= 16
        std::size_t n = 1 + rng() % size;
        uint64_t seed = rng();
        std::vector<EmbeddedDoc> pool;
        for (std::size_t i = 0; i < size; ++i) {
            std::vector<double> v(dim);
            double norm = 0.0;
            while (norm == 0.0) {
                for (double& x : v) x = dist(rng);
                norm = 0.0;
                for (double x : v) norm += x * x;
            }
            char id[16];
            std::snprintf(id, sizeof(id), "d%05zu", i);
            pool.push_back({id, unit_normalize(std::move(v))});
        }
        SampleSelection selection = density_sample(pool, n, seed);
        std::vector<std::string> expected = oracle_chain(pool, n, seed);
        require(selection.selected_ids == expected,
                "trial " + std::to_string(trial) + ": selection disagrees with the oracle");
    }
}

// --- criterion 3: judged refinement loop simulation -----------------------------

void criterion_refinement_simulation() {
    const std::string doc_id = "sim-doc";
    std::vector<MockRule> script;
    const std::vector<std::string> checks = {"no", "yes", "no", "no", "yes"};
    for (std::size_t i = 1; i <= checks.size(); ++i) {
        script.push_back({"current_response", {}, {}, "pre " + std::to_string(i)});
        script.push_back({"generate_constraint_doc_ref", {}, {},
                          "<constraint>rule number " + std::to_string(i) + "</constraint>"});
        script.push_back({"current_response", {}, {}, "post " + std::to_string(i)});
        script.push_back(
            {"check_constraint", {}, {}, "<satisfied>" + checks[i - 1] + "</satisfied>"});
    }
    auto gateway = airtest::make_mock_gateway(script);
    IirOptions options;  // n_max 5, judge-doc, check on
    RefinementTrace trace = run_refinement_loop(
        gateway, airtest::guidance_role(), airtest::current_role(), doc_id,
        RefinedDocument{doc_id, "reference"}, "Base instruction", options);

    require_eq(trace.c_n.size(), std::size_t{5}, "|C_n|");
    require_eq(trace.c_n_prime.size(), std::size_t{3}, "|C_n'|");
    std::vector<int> prime_iterations;
    for (const Constraint& c : trace.c_n_prime) prime_iterations.push_back(c.iteration);
    require(prime_iterations == std::vector<int>{1, 3, 4}, "C_n' must be {c1, c3, c4}");
    for (const Constraint& c : trace.c_n_prime) {
        require(is_duplicate_constraint(trace.c_n, c.text), "C_n' must be a subset of C_n");
    }

    // mechanical instruction chain: exactly 5 requirement lines, in order
    const std::string& final_chain = trace.steps.back().instruction_after;
    require_eq(count_requirement_lines(final_chain), 5, "requirement lines");
    std::size_t cursor = 0;
    for (int i = 1; i <= 5; ++i) {
        std::size_t at = final_chain.find("rule number " + std::to_string(i));
        require(at != std::string::npos, "constraint " + std::to_string(i) + " present");
        require(at >= cursor, "constraints in iteration order");
        cursor = at;
    }

    // the mechanical fallback path of the combine step yields the same shape
    auto fallback_gateway = airtest::make_mock_gateway(
        {{"combine_instruction", {}, {}, "<instruction>dropped everything</instruction>"}});
    std::string fallback = combine_instruction(fallback_gateway, airtest::guidance_role(),
                                               "Base instruction", trace.c_n, doc_id);
    require_eq(count_requirement_lines(fallback), 5, "fallback requirement lines");
}

// --- criterion 4: configuration constants --------------------------------------

void criterion_config_constants() {
    PipelineConfig config = default_config();
    require_eq(config.corpus.min_words, 50, "corpus.min_words");
    require_eq(config.corpus.max_words, 2048, "corpus.max_words");
    require_eq(config.iig.score_threshold, 4, "iig.score_threshold");
    require_eq(config.iir.iterations, 5, "iir.iterations");
    require(config.iir.mode == JudgmentMode::judge_doc_ref, "iir.mode must be judge-doc");
    require(config.iir.check_enabled, "iir.check must default on");
    require_eq(kConstraintTypeLabels.size(), std::size_t{12}, "constraint taxonomy size");
    const std::vector<std::string> expected_labels = {
        "data_format",     "document_structure", "domain_specific_format",
        "inclusion",       "exclusion",          "citation",
        "prior_condition", "target_audience",    "tone_and_style",
        "emotion",         "linguistic_characteristics", "multilingual"};
    for (std::size_t i = 0; i < expected_labels.size(); ++i) {
        require_eq(std::string(kConstraintTypeLabels[i]), expected_labels[i],
                   "taxonomy label " + std::to_string(i));
    }
    require(validate_config(config).empty(), "default config must validate");
}

// --- criterion 5: end-to-end determinism ---------------------------------------

std::filesystem::path run_toy(const TempDir& tmp, const std::string& out_name) {
    PipelineConfig config = airtest::toy_config(tmp.path());
    config.out_dir = (tmp.path() / out_name).string();
    airtest::write_toy_inputs(tmp.path());
    Services services = build_services(config);
    PipelineResult result = run_all(config, services, RunOptions{});
    require(result.ok, "pipeline run failed at '" + result.failed_stage + "': " + result.error);
    return std::filesystem::path(config.out_dir);
}

void criterion_determinism() {
    TempDir tmp;
    auto out1 = run_toy(tmp, "out1");
    auto out2 = run_toy(tmp, "out2");
    require_eq(sha256_file(out1 / stage_files::kDataset), sha256_file(out2 / stage_files::kDataset),
               "export JSONL sha256");
    int csvs = 0;
    for (const auto& entry : std::filesystem::directory_iterator(out1 / stage_files::kStatsDir)) {
        if (entry.path().extension() != ".csv") continue;
        ++csvs;
        auto other = out2 / stage_files::kStatsDir / entry.path().filename();
        require(std::filesystem::exists(other), "missing " + other.string());
        require_eq(sha256_file(entry.path()), sha256_file(other),
                   entry.path().filename().string() + " sha256");
    }
    require(csvs >= 4, "stats CSVs present");
}

// --- criterion 6: call-budget bound --------------------------------------------

void criterion_call_budget() {
    {
        TempDir tmp;
        airtest::write_toy_inputs(tmp.path());
        PipelineConfig config = airtest::toy_config(tmp.path());
        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        require(result.ok, "run failed: " + result.error);
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        require_eq(samples.size(), std::size_t{3}, "exported documents");
        for (const DatasetSample& sample : samples) {
            require_eq(services.gateway->counter().by_doc(sample.doc_id), 25LL,
                       sample.doc_id + " call count");
        }
    }
    {
        TempDir tmp;
        airtest::write_toy_inputs(tmp.path(), /*reuse_post_check_response=*/true);
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.iir.reuse_post_check_response = true;
        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        require(result.ok, "reuse run failed: " + result.error);
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        require_eq(samples.size(), std::size_t{3}, "exported documents (reuse)");
        for (const DatasetSample& sample : samples) {
            require_eq(services.gateway->counter().by_doc(sample.doc_id), 20LL,
                       sample.doc_id + " call count with reuse");
        }
    }
}

// --- criterion 7: stats correctness --------------------------------------------

void criterion_stats() {
    // five hand-computed strings
    require_eq(unique_trigrams("a b c d"), 2, R"(trigrams "a b c d")");
    require_eq(unique_trigrams("a a a a"), 1, R"(trigrams "a a a a")");
    require_eq(unique_trigrams("a b"), 0, R"(trigrams "a b")");
    require_eq(unique_trigrams("one two three four five"), 3, R"(trigrams five words)");
    require_eq(unique_trigrams("x y x y x y"), 2, R"(trigrams "x y x y x y")");

    // hand-binned lengths: tokens 10 and 30 with bins [0-19], [20-39]
    LengthHistogram hist;
    hist.bin_width = 20;
    hist.add(10);
    hist.add(30);
    require_eq(hist.bins.at(0), 1LL, "bin [0,19]");
    require_eq(hist.bins.at(1), 1LL, "bin [20,39]");

    // per-iteration histograms over the scripted toy run sum to the number
    // of traces at each iteration
    TempDir tmp;
    auto out = run_toy(tmp, "out");
    auto traces = read_traces_jsonl(out / stage_files::kTraces);
    std::ifstream report_in(out / stage_files::kStatsDir / "report.json");
    Json report = Json::parse(report_in);
    for (int iteration = 1; iteration <= 5; ++iteration) {
        const Json& iter = report["per_iteration"][std::to_string(iteration)];
        long long total = iter["unclassified"].get<long long>();
        for (const auto& [label, count] : iter["constraint_type_histogram"].items()) {
            total += count.get<long long>();
        }
        require_eq(total, static_cast<long long>(traces.size()),
                   "iteration " + std::to_string(iteration) + " histogram mass");
    }
}

// --- criterion 8: baseline modes ------------------------------------------------

void criterion_baselines() {
    auto base_script = [](bool with_final) {
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
            if (with_final) {
                script.push_back({"final_response", {{"doc_id", id}}, {},
                                  airtest::toy_final_response(id)});
            }
            script.push_back({"classify_domain",
                              {{"text", airtest::toy_instruction(id)}},
                              {},
                              "<domain>technology</domain>"});
        }
        return script;
    };

    {
        // back-translation baseline: --mode none --iterations 0, response = R
        TempDir tmp;
        airtest::write_file(tmp.path() / "corpus.jsonl", airtest::toy_corpus_jsonl());
        atomic_write_text(tmp.path() / "script.json",
                          MockChatBackend::rules_to_json(base_script(false)).dump(2));
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.iir.iterations = 0;
        config.iir.mode = JudgmentMode::no_judge;
        config.iir.response_source = ResponseSource::refined_doc;
        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        require(result.ok, "back-translation baseline failed: " + result.error);
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        require_eq(samples.size(), std::size_t{3}, "baseline sample count");
        for (const DatasetSample& sample : samples) {
            require(sample.final_response == airtest::toy_refined(sample.doc_id),
                    sample.doc_id + ": response must equal R verbatim");
        }
    }
    {
        // back-and-forth baseline: regenerated response differs from R
        TempDir tmp;
        airtest::write_file(tmp.path() / "corpus.jsonl", airtest::toy_corpus_jsonl());
        atomic_write_text(tmp.path() / "script.json",
                          MockChatBackend::rules_to_json(base_script(true)).dump(2));
        PipelineConfig config = airtest::toy_config(tmp.path());
        config.iir.iterations = 0;
        config.iir.mode = JudgmentMode::no_judge;
        config.iir.response_source = ResponseSource::regenerated;
        Services services = build_services(config);
        PipelineResult result = run_all(config, services, RunOptions{});
        require(result.ok, "back-and-forth baseline failed: " + result.error);
        auto samples =
            read_dataset_jsonl(std::filesystem::path(config.out_dir) / stage_files::kDataset);
        require_eq(samples.size(), std::size_t{3}, "baseline sample count");
        for (const DatasetSample& sample : samples) {
            require(sample.final_response == airtest::toy_final_response(sample.doc_id),
                    sample.doc_id + ": response must be the regenerated text");
            require(sample.final_response != airtest::toy_refined(sample.doc_id),
                    sample.doc_id + ": response must differ from R");
        }
    }
}

struct Criterion {
    int id;
    std::string name;
    long max_ms;  // 0 = no bound
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "filter fidelity on the 12-document boundary suite", 1000, criterion_filter_fidelity},
        {2, "sampler matches the brute-force oracle on 50 random pools", 10000,
         criterion_sampler_oracle},
        {3, "judged refinement loop simulation (checks no,yes,no,no,yes)", 1000,
         criterion_refinement_simulation},
        {4, "default configuration constants and constraint taxonomy", 0,
         criterion_config_constants},
        {5, "end-to-end determinism: byte-identical export and stats", 5000,
         criterion_determinism},
        {6, "call budget: 25 calls per exported doc (20 with reuse)", 0, criterion_call_budget},
        {7, "stats correctness: trigrams, bins, histogram mass", 0, criterion_stats},
        {8, "baseline export modes: refined-doc vs regenerated", 0, criterion_baselines},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.body();
        } catch (const std::exception& err) {
            error = err.what();
        }
        auto t1 = std::chrono::steady_clock::now();
        long ms = static_cast<long>(
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count());
        if (error.empty() && criterion.max_ms > 0 && ms > criterion.max_ms) {
            error = "exceeded time bound of " + std::to_string(criterion.max_ms) + " ms";
        }
        if (error.empty()) {
            std::cout << "[PASS] criterion " << criterion.id << ": " << criterion.name << " ("
                      << ms << " ms)\n";
        } else {
            ++failures;
            std::cout << "[FAIL] criterion " << criterion.id << ": " << criterion.name << " — "
                      << error << "\n";
        }
    }
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all 8 criteria passed\n";
    return 0;
}
