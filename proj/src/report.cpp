#include "refactor/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "refactor/errors.hpp"
#include "refactor/eval_metrics.hpp"

namespace refactor::report {

using nlohmann::json;

namespace {

struct Basic {
    int count = 0;
    double mean = 0;
    double stddev = 0;  // population
    double min = 0;
    double max = 0;
};

json basic_json(const std::vector<double>& values, bool with_range = false) {
    if (values.empty()) return json{{"defined", false}};
    Basic b;
    b.count = static_cast<int>(values.size());
    double sum = 0;
    b.min = values.front();
    b.max = values.front();
    for (double v : values) {
        sum += v;
        b.min = std::min(b.min, v);
        b.max = std::max(b.max, v);
    }
    b.mean = sum / b.count;
    double ss = 0;
    for (double v : values) ss += (v - b.mean) * (v - b.mean);
    b.stddev = std::sqrt(ss / b.count);
    json out{{"defined", true}, {"count", b.count}, {"mean", b.mean}, {"stddev", b.stddev}};
    if (with_range) {
        out["min"] = b.min;
        out["max"] = b.max;
    }
    return out;
}

struct InputInfo {
    const corpus::SubjectProgram* program = nullptr;
    metrics::SourceMetrics metrics;
};

using InputKey = std::pair<std::string, std::string>;

std::map<InputKey, InputInfo> collect_inputs(const corpus::Corpus& inputs) {
    std::map<InputKey, InputInfo> out;
    for (const auto& [pid, progs] : inputs.by_problem)
        for (const auto& p : progs)
            out[{pid, p.submission_id}] = {&p, metrics::measure(p.source_text)};
    return out;
}

std::vector<const pipeline::CandidateRecord*> sorted_records(
    const std::vector<pipeline::CandidateRecord>& records) {
    std::vector<const pipeline::CandidateRecord*> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
        return std::tie(a->problem_id, a->submission_id, a->sample_index, a->example_ids) <
               std::tie(b->problem_id, b->submission_id, b->sample_index, b->example_ids);
    });
    return out;
}

bool is_accepted(const pipeline::CandidateRecord& r) {
    return r.verdict && r.verdict->kind == judge::VerdictKind::Accepted;
}

double reduction_percent(double before, double after) {
    return 100.0 * (before - after) / before;
}

json try_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2) return json{{"defined", false}, {"reason", "fewer than two pairs"}};
    try {
        return json{{"defined", true}, {"count", xs.size()},
                    {"value", evalm::pearson(xs, ys)}};
    } catch (const Error& e) {
        return json{{"defined", false}, {"reason", e.what()}};
    }
}

}  // namespace

json build_report(const std::vector<pipeline::CandidateRecord>& records,
                  const corpus::Corpus& inputs, const Config& cfg,
                  const std::map<InputKey, std::string>& languages) {
    const auto input_info = collect_inputs(inputs);
    const auto ordered = sorted_records(records);
    const int n = cfg.generation.samples_per_input;

    // counts
    int total = static_cast<int>(ordered.size());
    int extracted = 0, judged = 0, accepted = 0, compilable = 0, cheating = 0;
    int unfenced = 0, multi_block = 0;
    std::map<InputKey, int> accepted_per_input;
    for (const auto* r : ordered) {
        if (r->extracted_source) ++extracted;
        if (r->unfenced) ++unfenced;
        if (r->multi_block) ++multi_block;
        if (r->verdict) {
            ++judged;
            if (r->verdict->kind != judge::VerdictKind::CompileError) ++compilable;
        }
        if (is_accepted(*r)) {
            ++accepted;
            ++accepted_per_input[{r->problem_id, r->submission_id}];
            if (r->pair_stats && r->pair_stats->distance == 0) ++cheating;
        }
    }

    json doc;
    doc["candidates"] = {{"total", total},           {"extracted", extracted},
                         {"judged", judged},         {"accepted", accepted},
                         {"cheating_cases", cheating}, {"unfenced", unfenced},
                         {"multi_block", multi_block}};

    // correctness: every input program contributes an (n, c) record
    if (total == 0 || input_info.empty()) {
        doc["correctness"] = {{"defined", false}};
    } else {
        std::vector<std::pair<int, int>> nc;
        for (const auto& [key, info] : input_info) {
            auto it = accepted_per_input.find(key);
            nc.emplace_back(n, it == accepted_per_input.end() ? 0 : it->second);
        }
        doc["correctness"] = {{"defined", true},
                              {"pass_at_1", evalm::aggregate_pass_at_k(nc, 1)},
                              {"pass_at_k", evalm::aggregate_pass_at_k(nc, n)},
                              {"k", n},
                              {"compilability", total ? static_cast<double>(compilable) / total
                                                      : 0.0}};
    }

    // per-metric pools
    std::vector<double> in_cc, in_loc, in_chars, in_tokens;
    std::vector<double> in_cm_incl, in_cm_excl, in_cm_ratio;
    for (const auto& [key, info] : input_info) {
        in_loc.push_back(info.metrics.loc);
        in_chars.push_back(static_cast<double>(info.metrics.chars));
        if (info.metrics.tokens) in_tokens.push_back(*info.metrics.tokens);
        if (info.metrics.cc) in_cc.push_back(*info.metrics.cc);
        if (info.metrics.comments) {
            in_cm_incl.push_back(info.metrics.comments->incl);
            in_cm_excl.push_back(info.metrics.comments->excl);
            in_cm_ratio.push_back(info.metrics.comments->ratio);
        }
    }
    std::vector<double> va_cc, va_loc, va_chars, va_tokens;
    std::vector<double> va_cm_incl, va_cm_excl, va_cm_ratio;
    std::vector<double> va_dist, va_sim;
    std::vector<std::pair<double, double>> cc_pairs;          // (input cc, candidate cc)
    std::vector<double> corr_in_cc, corr_dist_cc;             // (input cc, distance)
    std::vector<double> corr_in_chars, corr_dist_chars;       // (input chars, distance)
    for (const auto* r : ordered) {
        if (!is_accepted(*r) || !r->metrics) continue;
        const auto& m = *r->metrics;
        va_loc.push_back(m.loc);
        va_chars.push_back(static_cast<double>(m.chars));
        if (m.tokens) va_tokens.push_back(*m.tokens);
        if (m.cc) va_cc.push_back(*m.cc);
        if (m.comments) {
            va_cm_incl.push_back(m.comments->incl);
            va_cm_excl.push_back(m.comments->excl);
            va_cm_ratio.push_back(m.comments->ratio);
        }
        const auto& info = input_info.at({r->problem_id, r->submission_id});
        if (r->pair_stats) {
            va_dist.push_back(static_cast<double>(r->pair_stats->distance));
            va_sim.push_back(r->pair_stats->similarity);
            if (info.metrics.cc) {
                corr_in_cc.push_back(*info.metrics.cc);
                corr_dist_cc.push_back(static_cast<double>(r->pair_stats->distance));
            }
            corr_in_chars.push_back(static_cast<double>(info.metrics.chars));
            corr_dist_chars.push_back(static_cast<double>(r->pair_stats->distance));
        }
        if (m.cc && info.metrics.cc) cc_pairs.emplace_back(*info.metrics.cc, *m.cc);
    }

    // complexity
    {
        json sec;
        sec["input_cc"] = basic_json(in_cc);
        sec["validated_cc"] = basic_json(va_cc);
        if (!in_cc.empty() && !va_cc.empty()) {
            double im = 0, vm = 0;
            for (double v : in_cc) im += v;
            for (double v : va_cc) vm += v;
            im /= in_cc.size();
            vm /= va_cc.size();
            sec["cc_reduction_percent"] = reduction_percent(im, vm);
        } else {
            sec["cc_reduction_percent"] = nullptr;
        }
        if (cc_pairs.empty()) {
            sec["wilcoxon"] = {{"defined", false}, {"reason", "no paired complexities"}};
        } else {
            try {
                auto w = evalm::wilcoxon_signed_rank(cc_pairs);
                sec["wilcoxon"] = {{"defined", true},   {"statistic", w.statistic},
                                   {"p_value", w.p_value}, {"n", w.n},
                                   {"r_plus", w.r_plus},   {"r_minus", w.r_minus}};
            } catch (const Error& e) {
                sec["wilcoxon"] = {{"defined", false}, {"reason", e.what()}};
            }
        }
        doc["complexity"] = sec;
    }

    // size
    {
        json sec;
        sec["input"] = {{"loc", basic_json(in_loc)},
                        {"chars", basic_json(in_chars)},
                        {"tokens", basic_json(in_tokens)}};
        sec["validated"] = {{"loc", basic_json(va_loc)},
                            {"chars", basic_json(va_chars)},
                            {"tokens", basic_json(va_tokens)}};
        if (!in_loc.empty() && !va_loc.empty()) {
            double im = 0, vm = 0;
            for (double v : in_loc) im += v;
            for (double v : va_loc) vm += v;
            sec["loc_reduction_percent"] = reduction_percent(im / in_loc.size(), vm / va_loc.size());
        } else {
            sec["loc_reduction_percent"] = nullptr;
        }
        doc["size"] = sec;
    }

    // pair distance / similarity
    doc["distance"] = {{"distance", basic_json(va_dist, true)},
                       {"similarity", basic_json(va_sim, true)}};

    // comments
    doc["comments"] = {
        {"input",
         {{"incl", basic_json(in_cm_incl)}, {"excl", basic_json(in_cm_excl)},
          {"ratio", basic_json(in_cm_ratio)}}},
        {"validated",
         {{"incl", basic_json(va_cm_incl)}, {"excl", basic_json(va_cm_excl)},
          {"ratio", basic_json(va_cm_ratio)}}}};

    // language proportions over input programs
    if (cfg.detect_language) {
        std::map<std::string, int> tally;
        int covered = 0;
        for (const auto& [key, info] : input_info) {
            auto it = languages.find(key);
            if (it == languages.end()) continue;
            ++covered;
            ++tally[it->second];
        }
        json props = json::object();
        for (const auto& [label, count] : tally)
            props[label] = covered ? static_cast<double>(count) / covered : 0.0;
        doc["language"] = {{"defined", covered > 0}, {"covered", covered},
                           {"proportions", props}};
    } else {
        doc["language"] = {{"defined", false}, {"reason", "language detection disabled"}};
    }

    // correlations
    {
        std::vector<double> pk_x, pk_y;  // (pass@k of input, input cc)
        for (const auto& [key, info] : input_info) {
            if (!info.metrics.cc) continue;
            auto it = accepted_per_input.find(key);
            int c = it == accepted_per_input.end() ? 0 : it->second;
            pk_x.push_back(evalm::pass_at_k(n, c, n));
            pk_y.push_back(*info.metrics.cc);
        }
        doc["correlations"] = {{"input_cc_vs_distance", try_pearson(corr_in_cc, corr_dist_cc)},
                               {"input_chars_vs_distance",
                                try_pearson(corr_in_chars, corr_dist_chars)},
                               {"pass_at_k_vs_input_cc", try_pearson(pk_x, pk_y)}};
    }

    doc["config"] = {{"samples_per_input", n},
                     {"prompt_mode", format_prompt_mode(cfg.prompt_mode)},
                     {"comparison_mode", format_comparison_mode(cfg.judge.comparison_mode)}};
    return doc;
}

std::vector<json> build_suggestions(const std::vector<pipeline::CandidateRecord>& records,
                                    const corpus::Corpus& inputs) {
    std::map<InputKey, std::vector<const pipeline::CandidateRecord*>> per_input;
    for (const auto& r : records)
        if (is_accepted(r) && r.metrics && r.pair_stats)
            per_input[{r.problem_id, r.submission_id}].push_back(&r);

    std::vector<json> lines;
    for (const auto& [pid, progs] : inputs.by_problem) {
        for (const auto& p : progs) {
            auto it = per_input.find({pid, p.submission_id});
            json suggestions = json::array();
            if (it != per_input.end()) {
                auto cands = it->second;
                std::sort(cands.begin(), cands.end(), [](const auto* a, const auto* b) {
                    int acc = a->metrics->cc.value_or(0), bcc = b->metrics->cc.value_or(0);
                    return std::tie(acc, a->pair_stats->distance, a->sample_index) <
                           std::tie(bcc, b->pair_stats->distance, b->sample_index);
                });
                for (const auto* c : cands) {
                    suggestions.push_back({{"sample_index", c->sample_index},
                                           {"cc", c->metrics->cc.value_or(0)},
                                           {"distance", c->pair_stats->distance},
                                           {"similarity", c->pair_stats->similarity},
                                           {"cheating_case", c->pair_stats->distance == 0}});
                }
            }
            lines.push_back({{"problem_id", pid},
                             {"submission_id", p.submission_id},
                             {"suggestions", suggestions}});
        }
    }
    return lines;
}

namespace {

void flatten(const json& node, const std::string& prefix, std::vector<std::string>& rows) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
        return;
    }
    std::string value;
    if (node.is_null())
        value = "";
    else if (node.is_string())
        value = node.get<std::string>();
    else
        value = node.dump();
    // quote strings containing commas
    if (value.find(',') != std::string::npos) value = "\"" + value + "\"";
    rows.push_back(prefix + "," + value);
}

void render_node(const json& node, int indent, std::ostringstream& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (auto it = node.begin(); it != node.end(); ++it) {
        if (it.value().is_object()) {
            out << pad << it.key() << ":\n";
            render_node(it.value(), indent + 1, out);
        } else {
            out << pad << it.key() << ": "
                << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump())
                << "\n";
        }
    }
}

}  // namespace

std::string render_csv(const json& report) {
    std::vector<std::string> rows;
    flatten(report, "", rows);
    std::string out = "metric,value\n";
    for (const auto& r : rows) out += r + "\n";
    return out;
}

std::string render_text(const json& report) {
    std::ostringstream out;
    out << "refactoring run report\n======================\n";
    for (auto it = report.begin(); it != report.end(); ++it) {
        out << "\n[" << it.key() << "]\n";
        if (it.value().is_object())
            render_node(it.value(), 1, out);
        else
            out << "  " << it.value().dump() << "\n";
        if (it.value().is_object() && it.value().contains("defined") &&
            it.value()["defined"].is_boolean() && !it.value()["defined"].get<bool>())
            out << "  (section empty: no data)\n";
    }
    return out.str();
}

namespace {

std::optional<std::string> run_formatter(const std::string& command, const std::string& source,
                                         const std::filesystem::path& work) {
    const auto file = work / "prog.py";
    {
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out.write(source.data(), static_cast<std::streamsize>(source.size()));
        if (!out.flush()) throw Error("cannot stage formatter input " + file.string());
    }
    const std::string cmd = command + " '" + file.string() + "' 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw Error("cannot launch formatter: " + command);
    std::string formatted;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0)
        formatted.append(buf, got);
    int status = ::pclose(pipe);
    if (status != 0) return std::nullopt;
    return formatted;
}

json distance_set(const std::vector<const std::string*>& sources, const std::string& command,
                  const std::filesystem::path& work) {
    int excluded = 0;
    std::vector<double> dists;
    for (const auto* src : sources) {
        auto formatted = run_formatter(command, *src, work);
        if (!formatted) {
            ++excluded;
            continue;
        }
        dists.push_back(static_cast<double>(evalm::levenshtein(*src, *formatted)));
    }
    json out = basic_json(dists, true);
    out["excluded"] = excluded;
    out["total"] = static_cast<int>(sources.size());
    return out;
}

}  // namespace

json format_distance_report(const std::vector<pipeline::CandidateRecord>& records,
                            const corpus::Corpus& inputs, const std::string& formatter_command) {
    if (formatter_command.empty())
        throw ConfigError("formatter_command is not configured");
    char tmpl[] = "/tmp/refactor-fmt.XXXXXX";
    if (!::mkdtemp(tmpl)) throw Error("cannot create formatter work directory");
    std::filesystem::path work(tmpl);
    struct Cleanup {
        std::filesystem::path d;
        ~Cleanup() {
            std::error_code ec;
            std::filesystem::remove_all(d, ec);
        }
    } cleanup{work};

    std::vector<const std::string*> input_sources;
    for (const auto& [pid, progs] : inputs.by_problem)
        for (const auto& p : progs) input_sources.push_back(&p.source_text);

    std::vector<const pipeline::CandidateRecord*> ordered;
    for (const auto& r : records)
        if (is_accepted(r) && r.extracted_source) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
        return std::tie(a->problem_id, a->submission_id, a->sample_index) <
               std::tie(b->problem_id, b->submission_id, b->sample_index);
    });
    std::vector<const std::string*> candidate_sources;
    for (const auto* r : ordered) candidate_sources.push_back(&*r->extracted_source);

    return json{{"formatter", formatter_command},
                {"inputs", distance_set(input_sources, formatter_command, work)},
                {"validated", distance_set(candidate_sources, formatter_command, work)}};
}

}  // namespace refactor::report
