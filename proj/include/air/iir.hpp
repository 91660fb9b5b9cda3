#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "air/iig.hpp"
#include "air/llm.hpp"

namespace air {

enum class JudgmentMode { no_judge, judge_model_ref, judge_doc_ref };

std::string_view to_string(JudgmentMode mode);
std::optional<JudgmentMode> judgment_mode_from_string(std::string_view name);

struct Constraint {
    std::string text;
    int iteration = 0;
    // Outcome of the check step; nullopt when the check was off or failed to
    // parse.
    std::optional<bool> satisfied_after_add;
    std::optional<std::string> type_label;
};

struct RefinementStep {
    int iteration = 0;
    std::string instruction_before;
    std::string response;  // pre-add answer A_i; empty when not generated
    std::string constraint;
    std::string instruction_after;
    std::string response_after;  // post-add answer; empty when not generated
    std::optional<bool> check_passed;
};

enum class TraceStatus { complete, constraint_exhausted, partial };

std::string_view to_string(TraceStatus status);

struct RefinementTrace {
    std::string doc_id;
    std::string initial_instruction;
    std::string refined_document;
    std::vector<RefinementStep> steps;
    std::vector<Constraint> c_n;        // every judged constraint
    std::vector<Constraint> c_n_prime;  // constraints still unsatisfied after the add
    JudgmentMode judgment_mode = JudgmentMode::judge_doc_ref;
    bool check_enabled = true;
    TraceStatus status = TraceStatus::complete;
    std::string failure;  // set for partial traces
};

struct IirOptions {
    int n_max = 5;
    JudgmentMode mode = JudgmentMode::judge_doc_ref;
    bool check_enabled = true;
    // Reuse each post-check response as the next iteration's judged response,
    // cutting current-model calls to one per iteration. The first iteration
    // is then judged against the reference alone.
    bool reuse_post_check_response = false;
};

// Appends a delimited requirement line; no model call.
// Throws std::invalid_argument on an empty constraint.
std::string add_constraint(const std::string& instruction, const std::string& constraint);

int count_requirement_lines(const std::string& instruction);

// Case- and whitespace-insensitive duplicate test against prior constraints.
bool is_duplicate_constraint(const std::vector<Constraint>& prior, const std::string& text);

// One new imperative constraint, or nullopt after the corrective retry (loop
// terminates early).
std::optional<std::string> judge_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                            JudgmentMode mode, const std::string& instruction,
                                            const std::string& response,
                                            const std::string& reference,
                                            const std::string& doc_id,
                                            const std::vector<Constraint>& prior);

// Parsed yes/no; nullopt = check failed to parse (logged, joins neither
// check-derived set).
std::optional<bool> check_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                     const std::string& response, const std::string& constraint,
                                     const std::string& doc_id);

// The judged constraint loop for one document.
RefinementTrace run_refinement_loop(LlmGateway& gateway, const ModelRole& guidance,
                                    const ModelRole& current, const std::string& doc_id,
                                    const RefinedDocument& refined,
                                    const std::string& initial_instruction,
                                    const IirOptions& options);

// --- Export ------------------------------------------------------------------

enum class ConstraintSetChoice { auto_select, c_n, c_n_prime };
enum class ResponseSource { regenerated, refined_doc };

std::string_view to_string(ConstraintSetChoice choice);
std::optional<ConstraintSetChoice> constraint_set_from_string(std::string_view name);
std::string_view to_string(ResponseSource source);
std::optional<ResponseSource> response_source_from_string(std::string_view name);

struct DatasetSample {
    std::string doc_id;
    std::string final_instruction;
    std::string final_response;
    std::string constraint_set_used;  // "c_n" | "c_n_prime" | "none"
    int num_constraints = 0;
    std::string judgment_mode;
};

struct ExportOptions {
    ConstraintSetChoice constraint_set = ConstraintSetChoice::auto_select;
    ResponseSource response_source = ResponseSource::regenerated;
};

// True when the rewrite carries >= `threshold` of each constraint's content
// words.
bool rewrite_covers_constraints(const std::string& rewrite,
                                const std::vector<Constraint>& constraints,
                                double threshold = 0.8);

// Fluent merge of the instruction and constraint set via the guidance model;
// falls back to mechanical add_constraint chaining when the rewrite drops
// content. An empty set returns the instruction unchanged without a call.
std::string combine_instruction(LlmGateway& gateway, const ModelRole& guidance,
                                const std::string& initial_instruction,
                                const std::vector<Constraint>& constraints,
                                const std::string& doc_id);

// Builds the final sample from a trace: choose set, combine, generate (or
// copy) the response. nullopt = dropped (partial trace or failed generation).
std::optional<DatasetSample> export_sample(LlmGateway& gateway, const ModelRole& guidance,
                                           const RefinementTrace& trace,
                                           const ExportOptions& options);

Json to_json(const Constraint& constraint);
Json to_json(const RefinementTrace& trace);
RefinementTrace trace_from_json(const Json& j);
Json to_json(const DatasetSample& sample);

}  // namespace air
