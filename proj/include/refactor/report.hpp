#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "refactor/config.hpp"
#include "refactor/corpus.hpp"
#include "refactor/pipeline.hpp"

namespace refactor::report {

/// All aggregates of the refactor phase as a deterministic JSON document:
/// correctness (pass@1, pass@k, compilability), complexity with the paired
/// Wilcoxon test, size and comment tables, pair distance/similarity stats,
/// optional language proportions, Pearson correlations, and percent
/// reductions. Sections that lack data carry an explicit "defined": false.
nlohmann::json build_report(
    const std::vector<pipeline::CandidateRecord>& records, const corpus::Corpus& inputs,
    const Config& cfg,
    const std::map<std::pair<std::string, std::string>, std::string>& languages);

/// Per input program, the validated candidates ordered by (cc ascending,
/// distance ascending, sample_index); zero-distance candidates are flagged
/// as cheating cases. One JSON object per input, as JSONL lines.
std::vector<nlohmann::json> build_suggestions(
    const std::vector<pipeline::CandidateRecord>& records, const corpus::Corpus& inputs);

/// Flat section.metric,value rendering of the report document.
std::string render_csv(const nlohmann::json& report);

/// Human-readable sectioned rendering.
std::string render_text(const nlohmann::json& report);

/// Distance of each program to its externally formatted form, separately
/// for inputs and validated candidates. The formatter command receives a
/// file path argument and must print the formatted source on stdout; a
/// nonzero exit excludes that program and is counted.
nlohmann::json format_distance_report(const std::vector<pipeline::CandidateRecord>& records,
                                      const corpus::Corpus& inputs,
                                      const std::string& formatter_command);

}  // namespace refactor::report
