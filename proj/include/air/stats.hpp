#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "air/iir.hpp"
#include "air/llm.hpp"

namespace air {

// The 12-type constraint taxonomy used for dataset reporting.
inline constexpr std::array<std::string_view, 12> kConstraintTypeLabels = {
    "data_format",
    "document_structure",
    "domain_specific_format",
    "inclusion",
    "exclusion",
    "citation",
    "prior_condition",
    "target_audience",
    "tone_and_style",
    "emotion",
    "linguistic_characteristics",
    "multilingual",
};

bool is_constraint_type_label(std::string_view label);

std::vector<std::string> default_domain_labels();

struct LengthHistogram {
    int bin_width = 20;
    std::map<int, long long> bins;  // bin index -> count; bin i covers [i*w, (i+1)*w)
    long long total = 0;

    void add(int tokens);
};

struct IterationStats {
    std::map<std::string, long long> constraint_types;
    long long unclassified = 0;
    double mean_unique_trigrams = 0.0;
    double mean_token_length = 0.0;
    long long count = 0;  // instructions observed at this iteration
};

struct StatsReport {
    // Iteration 0 carries the initial instructions; >=1 the refined ones.
    std::map<int, IterationStats> per_iteration;
    std::map<std::string, long long> domain_histogram;
    long long domain_unclassified = 0;
    LengthHistogram instruction_lengths;
    LengthHistogram response_lengths;
    long long samples_counted = 0;
    long long traces_counted = 0;
    long long skipped_records = 0;
};

// One of the 12 labels, or nullopt (unclassified) after the corrective retry.
std::optional<std::string> classify_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                               const std::string& constraint);

std::optional<std::string> classify_domain(LlmGateway& gateway, const ModelRole& guidance,
                                           const std::string& text,
                                           const std::vector<std::string>& domain_labels);

struct StatsOptions {
    std::vector<std::string> domain_labels;  // empty = defaults
    int length_bin_width = 20;
    int workers = 1;
};

StatsReport build_report(LlmGateway& gateway, const ModelRole& guidance,
                         const std::vector<RefinementTrace>& traces,
                         const std::vector<DatasetSample>& samples,
                         const StatsOptions& options);

// report.json, constraint_types_iter_<i>.csv, domains.csv, lengths.csv,
// trends.csv under out_dir. Returns relative paths with file contents.
std::vector<std::pair<std::string, std::string>> render_report_files(const StatsReport& report);

Json to_json(const StatsReport& report);

// True when the sequence never decreases (trend helper; reported, not
// enforced, for fluent rewrites).
bool non_decreasing(const std::vector<double>& values);

}  // namespace air
