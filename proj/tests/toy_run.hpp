#pragma once

// Toy six-document corpus plus a fully scripted mock for end-to-end runs:
// two documents fail the corpus filters, three of the remaining four are
// sampled, and every sampled document walks the whole judged loop.

#include <string>
#include <vector>

#include "air/config.hpp"
#include "air/llm.hpp"
#include "air/store.hpp"
#include "support.hpp"

namespace airtest {

inline const std::vector<std::string> kToyKeptIds = {"doc-a", "doc-b", "doc-c", "doc-d"};
inline const std::vector<std::string> kToyChecks = {"no", "yes", "no", "no", "yes"};

inline std::string toy_corpus_jsonl() {
    auto line = [](const std::string& id, const std::string& text) {
        return air::Json{{"id", id}, {"text", text}}.dump() + "\n";
    };
    std::string out;
    out += line("doc-a", "how to bake bread at home with simple flour and patient kneading");
    out += line("doc-b", "trail guide for mountain hiking with maps water and weather advice");
    out += line("doc-c", "beginner guide to personal budgeting savings accounts and spending plans");
    out += line("doc-d", "care instructions for indoor plants light watering soil and seasonal pruning");
    out += line("doc-e", "too short");
    out += line("doc-f", "!! @@ ## $$ %% aa bb");
    return out;
}

inline std::string toy_instruction(const std::string& id) {
    return "Write about topic " + id;
}

inline std::string toy_refined(const std::string& id) {
    return "REFINED " + id + ": the reference answer derived from the document";
}

inline std::string toy_constraint(const std::string& id, int i) {
    return "constraint " + std::to_string(i) + " for " + id;
}

// With checks {no,yes,no,no,yes}, C_n' = {c1, c3, c4}.
inline std::string toy_combined(const std::string& id) {
    return toy_instruction(id) + " including " + toy_constraint(id, 1) + " and " +
           toy_constraint(id, 3) + " and " + toy_constraint(id, 4);
}

inline std::string toy_final_response(const std::string& id) {
    return "FINAL RESPONSE for " + id + " honoring every requirement";
}

// Script for one document across iig, refine, export and stats. Rules are
// keyed by doc-scoped bindings so parallel workers match deterministically.
inline void append_toy_doc_script(std::vector<air::MockRule>& script, const std::string& id,
                                  bool reuse_post_check_response = false) {
    using air::MockRule;
    script.push_back({"back_translate",
                      {{"doc_id", id}},
                      {},
                      "<instruction>" + toy_instruction(id) + "</instruction>"});
    script.push_back({"refine_document",
                      {{"doc_id", id}},
                      {},
                      "<refined>" + toy_refined(id) + "</refined>"});
    script.push_back({"score_instruction", {{"doc_id", id}}, {}, "<score>5</score>"});
    for (std::size_t i = 1; i <= kToyChecks.size(); ++i) {
        if (!reuse_post_check_response) {
            script.push_back({"current_response", {{"doc_id", id}}, {},
                              "pre answer " + std::to_string(i) + " for " + id});
        }
        script.push_back({"generate_constraint_doc_ref",
                          {{"doc_id", id}},
                          {},
                          "<constraint>" + toy_constraint(id, static_cast<int>(i)) +
                              "</constraint>"});
        script.push_back({"current_response", {{"doc_id", id}}, {},
                          "post answer " + std::to_string(i) + " for " + id});
        script.push_back({"check_constraint", {{"doc_id", id}}, {},
                          "<satisfied>" + kToyChecks[i - 1] + "</satisfied>"});
    }
    script.push_back({"combine_instruction",
                      {{"doc_id", id}},
                      {},
                      "<instruction>" + toy_combined(id) + "</instruction>"});
    script.push_back({"final_response", {{"doc_id", id}}, {}, toy_final_response(id)});
    // stats stage: one type per judged constraint, one domain per sample
    const char* type_cycle[] = {"inclusion", "data_format", "citation", "exclusion",
                                "tone_and_style"};
    for (std::size_t i = 1; i <= kToyChecks.size(); ++i) {
        script.push_back({"classify_constraint_type",
                          {{"constraint", toy_constraint(id, static_cast<int>(i))}},
                          {},
                          "<type>" + std::string(type_cycle[i - 1]) + "</type>"});
    }
    script.push_back({"classify_domain",
                      {{"text", toy_combined(id)}},
                      {},
                      "<domain>technology</domain>"});
}

inline std::vector<air::MockRule> toy_full_script(bool reuse_post_check_response = false) {
    std::vector<air::MockRule> script;
    for (const std::string& id : kToyKeptIds) {
        append_toy_doc_script(script, id, reuse_post_check_response);
    }
    return script;
}

// Mock-backed config over the toy corpus: loose filters, n=3, seed=17,
// five iterations with the check on.
inline air::PipelineConfig toy_config(const std::filesystem::path& dir) {
    air::PipelineConfig config = air::default_config();
    config.run_id = "toy";
    config.out_dir = (dir / "out").string();
    config.workers = 2;
    config.corpus.input = (dir / "corpus.jsonl").string();
    config.corpus.min_words = 5;
    config.corpus.max_words = 64;
    config.sample.n = 3;
    config.sample.seed = 17;
    config.llm.backend = air::BackendKind::mock;
    config.llm.mock_script = (dir / "script.json").string();
    config.llm.retry_base_ms = 0;
    config.embedding.backend = air::EmbeddingBackendKind::local_hash;
    config.embedding.local_dim = 16;
    return config;
}

inline void write_toy_inputs(const std::filesystem::path& dir,
                             bool reuse_post_check_response = false) {
    write_file(dir / "corpus.jsonl", toy_corpus_jsonl());
    air::atomic_write_text(
        dir / "script.json",
        air::MockChatBackend::rules_to_json(toy_full_script(reuse_post_check_response)).dump(2));
}

}  // namespace airtest
