#include "air/stats.hpp"

#include <algorithm>
#include <sstream>

#include "air/parallel.hpp"
#include "air/text.hpp"

namespace air {

bool is_constraint_type_label(std::string_view label) {
    return std::find(kConstraintTypeLabels.begin(), kConstraintTypeLabels.end(), label) !=
           kConstraintTypeLabels.end();
}

std::vector<std::string> default_domain_labels() {
    return {"technology", "health",     "education",  "finance",  "law",
            "travel",     "food",       "sports",     "entertainment", "science",
            "history",    "politics",   "business",   "art",      "music",
            "literature", "environment", "fashion",   "gaming",   "religion"};
}

void LengthHistogram::add(int tokens) {
    if (tokens < 0) tokens = 0;
    ++bins[tokens / bin_width];
    ++total;
}

std::optional<std::string> classify_constraint(LlmGateway& gateway, const ModelRole& guidance,
                                               const std::string& constraint) {
    std::string types;
    for (std::string_view label : kConstraintTypeLabels) {
        types += "- ";
        types += label;
        types += "\n";
    }
    TaggedResult result = gateway.complete_tagged(
        guidance, "classify_constraint_type", {{"constraint", constraint}, {"types", types}},
        "type", [](std::string& value) -> std::optional<std::string> {
            value = to_lower_ascii(trim(value));
            std::replace(value.begin(), value.end(), ' ', '_');
            if (!is_constraint_type_label(value)) {
                return "Reply with one of the listed type names exactly.";
            }
            return std::nullopt;
        });
    if (!result.ok) return std::nullopt;
    return result.value;
}

std::optional<std::string> classify_domain(LlmGateway& gateway, const ModelRole& guidance,
                                           const std::string& text,
                                           const std::vector<std::string>& domain_labels) {
    std::string domains;
    for (const std::string& label : domain_labels) domains += "- " + label + "\n";
    TaggedResult result = gateway.complete_tagged(
        guidance, "classify_domain", {{"text", text}, {"domains", domains}}, "domain",
        [&domain_labels](std::string& value) -> std::optional<std::string> {
            value = to_lower_ascii(trim(value));
            if (std::find(domain_labels.begin(), domain_labels.end(), value) ==
                domain_labels.end()) {
                return "Reply with one of the listed domain names exactly.";
            }
            return std::nullopt;
        });
    if (!result.ok) return std::nullopt;
    return result.value;
}

StatsReport build_report(LlmGateway& gateway, const ModelRole& guidance,
                         const std::vector<RefinementTrace>& traces,
                         const std::vector<DatasetSample>& samples,
                         const StatsOptions& options) {
    StatsReport report;
    report.instruction_lengths.bin_width = options.length_bin_width;
    report.response_lengths.bin_width = options.length_bin_width;
    const std::vector<std::string> domain_labels =
        options.domain_labels.empty() ? default_domain_labels() : options.domain_labels;

    // Constraint types, classified in parallel then folded in trace order.
    struct ConstraintRef {
        int iteration;
        std::string text;
    };
    std::vector<ConstraintRef> constraints;
    for (const RefinementTrace& trace : traces) {
        ++report.traces_counted;
        for (const Constraint& c : trace.c_n) {
            if (c.text.empty() || c.iteration < 1) {
                ++report.skipped_records;
                continue;
            }
            constraints.push_back({c.iteration, c.text});
        }
    }
    std::vector<std::optional<std::string>> labels =
        parallel_map<ConstraintRef, std::optional<std::string>>(
            constraints, options.workers, [&](const ConstraintRef& ref) {
                return classify_constraint(gateway, guidance, ref.text);
            });
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        IterationStats& iter = report.per_iteration[constraints[i].iteration];
        if (labels[i]) {
            ++iter.constraint_types[*labels[i]];
        } else {
            ++iter.unclassified;
        }
    }

    // Instruction evolution per iteration: 0 = initial instruction.
    std::map<int, std::pair<double, double>> sums;  // iteration -> (trigrams, tokens)
    std::map<int, long long> counts;
    for (const RefinementTrace& trace : traces) {
        sums[0].first += unique_trigrams(trace.initial_instruction);
        sums[0].second += word_count(trace.initial_instruction);
        ++counts[0];
        for (const RefinementStep& step : trace.steps) {
            sums[step.iteration].first += unique_trigrams(step.instruction_after);
            sums[step.iteration].second += word_count(step.instruction_after);
            ++counts[step.iteration];
        }
    }
    for (const auto& [iteration, totals] : sums) {
        IterationStats& iter = report.per_iteration[iteration];
        iter.count = counts[iteration];
        iter.mean_unique_trigrams = totals.first / static_cast<double>(counts[iteration]);
        iter.mean_token_length = totals.second / static_cast<double>(counts[iteration]);
    }

    // Domains and lengths over the exported samples.
    std::vector<std::optional<std::string>> domains =
        parallel_map<DatasetSample, std::optional<std::string>>(
            samples, options.workers, [&](const DatasetSample& sample) {
                return classify_domain(gateway, guidance, sample.final_instruction,
                                       domain_labels);
            });
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ++report.samples_counted;
        if (domains[i]) {
            ++report.domain_histogram[*domains[i]];
        } else {
            ++report.domain_unclassified;
        }
        report.instruction_lengths.add(word_count(samples[i].final_instruction));
        report.response_lengths.add(word_count(samples[i].final_response));
    }
    return report;
}

bool non_decreasing(const std::vector<double>& values) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1]) return false;
    }
    return true;
}

Json to_json(const StatsReport& report) {
    Json per_iteration = Json::object();
    for (const auto& [iteration, stats] : report.per_iteration) {
        Json types = Json::object();
        for (const auto& [label, count] : stats.constraint_types) types[label] = count;
        per_iteration[std::to_string(iteration)] =
            Json{{"constraint_type_histogram", types},
                 {"unclassified", stats.unclassified},
                 {"mean_unique_trigrams", stats.mean_unique_trigrams},
                 {"mean_token_length", stats.mean_token_length},
                 {"count", stats.count}};
    }
    Json domains = Json::object();
    for (const auto& [label, count] : report.domain_histogram) domains[label] = count;
    auto hist_json = [](const LengthHistogram& hist) {
        Json bins = Json::array();
        for (const auto& [bin, count] : hist.bins) {
            bins.push_back(Json{{"lo", bin * hist.bin_width},
                                {"hi", (bin + 1) * hist.bin_width - 1},
                                {"count", count}});
        }
        return Json{{"bin_width", hist.bin_width}, {"total", hist.total}, {"bins", bins}};
    };
    return Json{{"per_iteration", per_iteration},
                {"domain_histogram", domains},
                {"domain_unclassified", report.domain_unclassified},
                {"instruction_length_hist", hist_json(report.instruction_lengths)},
                {"response_length_hist", hist_json(report.response_lengths)},
                {"samples_counted", report.samples_counted},
                {"traces_counted", report.traces_counted},
                {"skipped_records", report.skipped_records}};
}

std::vector<std::pair<std::string, std::string>> render_report_files(const StatsReport& report) {
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("report.json", to_json(report).dump(2) + "\n");

    for (const auto& [iteration, stats] : report.per_iteration) {
        if (iteration == 0) continue;  // no constraints at iteration 0
        std::ostringstream csv;
        csv << "constraint_type,count\n";
        for (std::string_view label : kConstraintTypeLabels) {
            auto it = stats.constraint_types.find(std::string(label));
            csv << label << "," << (it == stats.constraint_types.end() ? 0 : it->second) << "\n";
        }
        csv << "unclassified," << stats.unclassified << "\n";
        files.emplace_back("constraint_types_iter_" + std::to_string(iteration) + ".csv",
                           csv.str());
    }

    {
        std::ostringstream csv;
        csv << "domain,count\n";
        for (const auto& [label, count] : report.domain_histogram) {
            csv << label << "," << count << "\n";
        }
        csv << "unclassified," << report.domain_unclassified << "\n";
        files.emplace_back("domains.csv", csv.str());
    }

    {
        std::ostringstream csv;
        csv << "bin_lo,bin_hi,instruction_count,response_count\n";
        std::map<int, std::pair<long long, long long>> merged;
        for (const auto& [bin, count] : report.instruction_lengths.bins) {
            merged[bin].first = count;
        }
        for (const auto& [bin, count] : report.response_lengths.bins) {
            merged[bin].second = count;
        }
        const int width = report.instruction_lengths.bin_width;
        for (const auto& [bin, counts] : merged) {
            csv << bin * width << "," << (bin + 1) * width - 1 << "," << counts.first << ","
                << counts.second << "\n";
        }
        files.emplace_back("lengths.csv", csv.str());
    }

    {
        std::ostringstream csv;
        csv << "iteration,mean_unique_trigrams,mean_token_length,count\n";
        for (const auto& [iteration, stats] : report.per_iteration) {
            csv << iteration << "," << stats.mean_unique_trigrams << ","
                << stats.mean_token_length << "," << stats.count << "\n";
        }
        files.emplace_back("trends.csv", csv.str());
    }
    return files;
}

}  // namespace air
