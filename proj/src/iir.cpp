#include "air/iir.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "air/errors.hpp"
#include "air/text.hpp"

namespace air {

namespace {

constexpr std::string_view kRequirementPrefix = "Additional requirement: ";

}  // namespace

std::string_view to_string(JudgmentMode mode) {
    switch (mode) {
        case JudgmentMode::no_judge: return "no_judge";
        case JudgmentMode::judge_model_ref: return "judge_model_ref";
        case JudgmentMode::judge_doc_ref: return "judge_doc_ref";
    }
    return "judge_doc_ref";
}

std::optional<JudgmentMode> judgment_mode_from_string(std::string_view name) {
    if (name == "no_judge" || name == "none") return JudgmentMode::no_judge;
    if (name == "judge_model_ref" || name == "judge-model") return JudgmentMode::judge_model_ref;
    if (name == "judge_doc_ref" || name == "judge-doc") return JudgmentMode::judge_doc_ref;
    return std::nullopt;
}

std::string_view to_string(TraceStatus status) {
    switch (status) {
        case TraceStatus::complete: return "complete";
        case TraceStatus::constraint_exhausted: return "constraint_exhausted";
        case TraceStatus::partial: return "partial";
    }
    return "complete";
}

std::string add_constraint(const std::string& instruction, const std::string& constraint) {
    if (trim(constraint).empty()) {
        throw std::invalid_argument("add_constraint: empty constraint");
    }
    std::string out = instruction;
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
    out.append(kRequirementPrefix);
    out.append(constraint);
    return out;
}

int count_requirement_lines(const std::string& instruction) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = instruction.find(kRequirementPrefix, pos)) != std::string::npos) {
        if (pos == 0 || instruction[pos - 1] == '\n') ++count;
        pos += kRequirementPrefix.size();
    }
    return count;
}

bool is_duplicate_constraint(const std::vector<Constraint>& prior, const std::string& text) {
    const std::string key = normalize_for_comparison(text);
    return std::any_of(prior.begin(), prior.end(), [&](const Constraint& c) {
        return normalize_for_comparison(c.text) == key;
    });
}

std::optional<std::string> judge_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                            JudgmentMode mode, const std::string& instruction,
                                            const std::string& response,
                                            const std::string& reference,
                                            const std::string& doc_id,
                                            const std::vector<Constraint>& prior) {
    Bindings bindings{{"instruction", instruction}, {"doc_id", doc_id}};
    std::string template_name;
    switch (mode) {
        case JudgmentMode::no_judge:
            template_name = "generate_constraint_no_judge";
            break;
        case JudgmentMode::judge_model_ref:
            template_name = "generate_constraint_model_ref";
            bindings["response"] = response;
            bindings["reference"] = reference;
            break;
        case JudgmentMode::judge_doc_ref:
            template_name = "generate_constraint_doc_ref";
            bindings["response"] = response;
            bindings["reference"] = reference;
            break;
    }
    TaggedResult result = gateway.complete_tagged(
        guidance, template_name, bindings, "constraint",
        [&prior](std::string& value) -> std::optional<std::string> {
            if (is_duplicate_constraint(prior, value)) {
                return "That constraint was already used. Produce a different constraint.";
            }
            return std::nullopt;
        });
    if (!result.ok) return std::nullopt;
    return result.value;
}

std::optional<bool> check_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                     const std::string& response, const std::string& constraint,
                                     const std::string& doc_id) {
    bool parsed = false;
    TaggedResult result = gateway.complete_tagged(
        guidance, "check_constraint",
        {{"response", response}, {"constraint", constraint}, {"doc_id", doc_id}}, "satisfied",
        [&parsed](std::string& value) -> std::optional<std::string> {
            std::string lowered = to_lower_ascii(trim(value));
            if (lowered == "yes") {
                parsed = true;
                return std::nullopt;
            }
            if (lowered == "no") {
                parsed = false;
                return std::nullopt;
            }
            return "Answer with exactly yes or no.";
        });
    if (!result.ok) return std::nullopt;
    return parsed;
}

RefinementTrace run_refinement_loop(LlmGateway& gateway, const ModelRole& guidance,
                                    const ModelRole& current, const std::string& doc_id,
                                    const RefinedDocument& refined,
                                    const std::string& initial_instruction,
                                    const IirOptions& options) {
    RefinementTrace trace;
    trace.doc_id = doc_id;
    trace.initial_instruction = initial_instruction;
    trace.refined_document = refined.text;
    trace.judgment_mode = options.mode;
    trace.check_enabled = options.check_enabled;

    std::string instruction = initial_instruction;
    std::string previous_post_response;

    try {
        std::string reference;
        if (options.mode == JudgmentMode::judge_doc_ref) {
            reference = refined.text;
        } else if (options.mode == JudgmentMode::judge_model_ref) {
            // The guidance model's own answer to I0, generated once per
            // document and reused across iterations.
            reference = gateway
                            .complete(guidance, "reference_response",
                                      {{"instruction", initial_instruction}, {"doc_id", doc_id}})
                            .raw_response;
        }

        for (int i = 1; i <= options.n_max; ++i) {
            RefinementStep step;
            step.iteration = i;
            step.instruction_before = instruction;

            if (options.mode != JudgmentMode::no_judge) {
                if (options.reuse_post_check_response) {
                    step.response = previous_post_response;  // empty on iteration 1
                } else {
                    step.response = gateway
                                        .complete(current, "current_response",
                                                  {{"instruction", instruction},
                                                   {"doc_id", doc_id}})
                                        .raw_response;
                }
            }

            auto constraint_text =
                judge_constraint(gateway, guidance, options.mode, instruction, step.response,
                                 reference, doc_id, trace.c_n);
            if (!constraint_text) {
                trace.status = TraceStatus::constraint_exhausted;
                trace.failure = "no new constraint at iteration " + std::to_string(i);
                break;
            }

            Constraint constraint;
            constraint.text = *constraint_text;
            constraint.iteration = i;
            step.constraint = constraint.text;

            instruction = add_constraint(instruction, constraint.text);
            step.instruction_after = instruction;

            const bool need_post_response =
                options.check_enabled ||
                (options.reuse_post_check_response && options.mode != JudgmentMode::no_judge &&
                 i < options.n_max);
            if (need_post_response) {
                step.response_after = gateway
                                          .complete(current, "current_response",
                                                    {{"instruction", instruction},
                                                     {"doc_id", doc_id}})
                                          .raw_response;
                previous_post_response = step.response_after;
            }

            if (options.check_enabled) {
                step.check_passed = check_constraint(gateway, guidance, step.response_after,
                                                     constraint.text, doc_id);
                constraint.satisfied_after_add = step.check_passed;
                if (step.check_passed.has_value() && !*step.check_passed) {
                    trace.c_n_prime.push_back(constraint);
                }
            }

            trace.c_n.push_back(constraint);
            trace.steps.push_back(std::move(step));
        }
    } catch (const TransportError& err) {
        trace.status = TraceStatus::partial;
        trace.failure = err.what();
    }
    return trace;
}

// --- Export ------------------------------------------------------------------

std::string_view to_string(ConstraintSetChoice choice) {
    switch (choice) {
        case ConstraintSetChoice::auto_select: return "auto";
        case ConstraintSetChoice::c_n: return "cn";
        case ConstraintSetChoice::c_n_prime: return "cn-prime";
    }
    return "auto";
}

std::optional<ConstraintSetChoice> constraint_set_from_string(std::string_view name) {
    if (name == "auto") return ConstraintSetChoice::auto_select;
    if (name == "cn" || name == "c_n") return ConstraintSetChoice::c_n;
    if (name == "cn-prime" || name == "c_n_prime") return ConstraintSetChoice::c_n_prime;
    return std::nullopt;
}

std::string_view to_string(ResponseSource source) {
    return source == ResponseSource::regenerated ? "regenerated" : "refined-doc";
}

std::optional<ResponseSource> response_source_from_string(std::string_view name) {
    if (name == "regenerated") return ResponseSource::regenerated;
    if (name == "refined-doc" || name == "refined_doc") return ResponseSource::refined_doc;
    return std::nullopt;
}

bool rewrite_covers_constraints(const std::string& rewrite,
                                const std::vector<Constraint>& constraints, double threshold) {
    std::vector<std::string> rewrite_words = content_words(rewrite);
    std::unordered_set<std::string> present(rewrite_words.begin(), rewrite_words.end());
    for (const Constraint& constraint : constraints) {
        std::vector<std::string> words = content_words(constraint.text);
        if (words.empty()) continue;
        std::size_t hits = 0;
        for (const std::string& word : words) {
            if (present.contains(word)) ++hits;
        }
        if (static_cast<double>(hits) < threshold * static_cast<double>(words.size())) {
            return false;
        }
    }
    return true;
}

std::string combine_instruction(LlmGateway& gateway, const ModelRole& guidance,
                                const std::string& initial_instruction,
                                const std::vector<Constraint>& constraints,
                                const std::string& doc_id) {
    if (constraints.empty()) return initial_instruction;

    auto mechanical = [&] {
        std::string out = initial_instruction;
        for (const Constraint& constraint : constraints) out = add_constraint(out, constraint.text);
        return out;
    };

    std::string listed;
    for (const Constraint& constraint : constraints) {
        listed += "- " + constraint.text + "\n";
    }
    TaggedResult result = gateway.complete_tagged(
        guidance, "combine_instruction",
        {{"instruction", initial_instruction}, {"constraints", listed}, {"doc_id", doc_id}},
        "instruction");
    if (!result.ok) return mechanical();
    if (!rewrite_covers_constraints(result.value, constraints)) return mechanical();
    return result.value;
}

std::optional<DatasetSample> export_sample(LlmGateway& gateway, const ModelRole& guidance,
                                           const RefinementTrace& trace,
                                           const ExportOptions& options) {
    if (trace.status == TraceStatus::partial) return std::nullopt;

    ConstraintSetChoice choice = options.constraint_set;
    if (choice == ConstraintSetChoice::auto_select) {
        choice = trace.check_enabled ? ConstraintSetChoice::c_n_prime : ConstraintSetChoice::c_n;
    }
    const std::vector<Constraint>& chosen =
        choice == ConstraintSetChoice::c_n_prime ? trace.c_n_prime : trace.c_n;

    DatasetSample sample;
    sample.doc_id = trace.doc_id;
    sample.judgment_mode = std::string(to_string(trace.judgment_mode));
    sample.num_constraints = static_cast<int>(chosen.size());
    sample.constraint_set_used =
        trace.steps.empty() ? "none"
                            : (choice == ConstraintSetChoice::c_n_prime ? "c_n_prime" : "c_n");

    try {
        sample.final_instruction =
            combine_instruction(gateway, guidance, trace.initial_instruction, chosen,
                                trace.doc_id);
        if (options.response_source == ResponseSource::refined_doc) {
            sample.final_response = trace.refined_document;
        } else {
            sample.final_response =
                gateway
                    .complete(guidance, "final_response",
                              {{"instruction", sample.final_instruction},
                               {"doc_id", trace.doc_id}})
                    .raw_response;
            if (trim(sample.final_response).empty()) return std::nullopt;
        }
    } catch (const TransportError&) {
        return std::nullopt;
    }
    return sample;
}

// --- Serialization -----------------------------------------------------------

Json to_json(const Constraint& constraint) {
    Json j{{"text", constraint.text}, {"iteration", constraint.iteration}};
    j["satisfied_after_add"] = constraint.satisfied_after_add.has_value()
                                   ? Json(*constraint.satisfied_after_add)
                                   : Json(nullptr);
    if (constraint.type_label) j["type_label"] = *constraint.type_label;
    return j;
}

namespace {

Constraint constraint_from_json(const Json& j) {
    Constraint constraint;
    constraint.text = j.at("text").get<std::string>();
    constraint.iteration = j.at("iteration").get<int>();
    if (j.contains("satisfied_after_add") && !j["satisfied_after_add"].is_null()) {
        constraint.satisfied_after_add = j["satisfied_after_add"].get<bool>();
    }
    if (j.contains("type_label") && !j["type_label"].is_null()) {
        constraint.type_label = j["type_label"].get<std::string>();
    }
    return constraint;
}

}  // namespace

Json to_json(const RefinementTrace& trace) {
    Json steps = Json::array();
    for (const RefinementStep& step : trace.steps) {
        Json s{{"iteration", step.iteration},
               {"instruction_before", step.instruction_before},
               {"response", step.response},
               {"constraint", step.constraint},
               {"instruction_after", step.instruction_after},
               {"response_after", step.response_after}};
        s["check_passed"] =
            step.check_passed.has_value() ? Json(*step.check_passed) : Json(nullptr);
        steps.push_back(std::move(s));
    }
    Json c_n = Json::array();
    for (const Constraint& c : trace.c_n) c_n.push_back(to_json(c));
    Json c_n_prime = Json::array();
    for (const Constraint& c : trace.c_n_prime) c_n_prime.push_back(to_json(c));
    return Json{{"doc_id", trace.doc_id},
                {"initial_instruction", trace.initial_instruction},
                {"refined_document", trace.refined_document},
                {"judgment_mode", std::string(to_string(trace.judgment_mode))},
                {"check_enabled", trace.check_enabled},
                {"status", std::string(to_string(trace.status))},
                {"failure", trace.failure},
                {"steps", steps},
                {"c_n", c_n},
                {"c_n_prime", c_n_prime}};
}

RefinementTrace trace_from_json(const Json& j) {
    RefinementTrace trace;
    trace.doc_id = j.at("doc_id").get<std::string>();
    trace.initial_instruction = j.at("initial_instruction").get<std::string>();
    trace.refined_document = j.at("refined_document").get<std::string>();
    if (auto mode = judgment_mode_from_string(j.at("judgment_mode").get<std::string>())) {
        trace.judgment_mode = *mode;
    }
    trace.check_enabled = j.at("check_enabled").get<bool>();
    std::string status = j.at("status").get<std::string>();
    if (status == "partial") {
        trace.status = TraceStatus::partial;
    } else if (status == "constraint_exhausted") {
        trace.status = TraceStatus::constraint_exhausted;
    }
    trace.failure = j.value("failure", std::string());
    for (const Json& s : j.at("steps")) {
        RefinementStep step;
        step.iteration = s.at("iteration").get<int>();
        step.instruction_before = s.at("instruction_before").get<std::string>();
        step.response = s.at("response").get<std::string>();
        step.constraint = s.at("constraint").get<std::string>();
        step.instruction_after = s.at("instruction_after").get<std::string>();
        step.response_after = s.at("response_after").get<std::string>();
        if (s.contains("check_passed") && !s["check_passed"].is_null()) {
            step.check_passed = s["check_passed"].get<bool>();
        }
        trace.steps.push_back(std::move(step));
    }
    for (const Json& c : j.at("c_n")) trace.c_n.push_back(constraint_from_json(c));
    for (const Json& c : j.at("c_n_prime")) trace.c_n_prime.push_back(constraint_from_json(c));
    return trace;
}

Json to_json(const DatasetSample& sample) {
    return Json{{"instruction", sample.final_instruction},
                {"response", sample.final_response},
                {"meta", Json{{"doc_id", sample.doc_id},
                              {"num_constraints", sample.num_constraints},
                              {"constraint_set", sample.constraint_set_used},
                              {"judgment_mode", sample.judgment_mode}}}};
}

}  // namespace air
