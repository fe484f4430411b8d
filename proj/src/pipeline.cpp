#include "refactor/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "refactor/errors.hpp"
#include "refactor/jsonl.hpp"
#include "refactor/prompting.hpp"
#include "refactor/report.hpp"
#include "refactor/sha256.hpp"

namespace refactor::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

judge::TestOutcome parse_outcome(std::string_view name) {
    for (judge::TestOutcome o :
         {judge::TestOutcome::Pass, judge::TestOutcome::WrongOutput,
          judge::TestOutcome::RuntimeError, judge::TestOutcome::Timeout,
          judge::TestOutcome::Oom})
        if (name == judge::outcome_name(o)) return o;
    throw Error("unknown test outcome '" + std::string(name) + "'");
}

std::string read_file_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_text(const fs::path& file, const std::string& text) {
    fs::create_directories(file.parent_path());
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out.flush()) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, file);
}

}  // namespace

json CandidateRecord::to_json() const {
    json j;
    j["phase"] = phase;
    j["problem_id"] = problem_id;
    j["submission_id"] = submission_id;
    j["example_ids"] = example_ids;
    j["sample_index"] = sample_index;
    j["extracted_source"] = extracted_source ? json(*extracted_source) : json(nullptr);
    j["unfenced"] = unfenced;
    j["multi_block"] = multi_block;
    if (verdict) {
        json tests = json::array();
        for (const auto& t : verdict->per_test)
            tests.push_back({{"test_index", t.test_index},
                             {"outcome", std::string(judge::outcome_name(t.outcome))},
                             {"digest", t.actual_output_digest},
                             {"elapsed_seconds", t.elapsed_seconds},
                             {"exit_code", t.exit_code}});
        j["verdict"] = {{"kind", std::string(judge::verdict_name(verdict->kind))},
                        {"diagnostic", verdict->diagnostic},
                        {"per_test", tests}};
    } else {
        j["verdict"] = nullptr;
    }
    if (metrics) {
        json m;
        m["loc"] = metrics->loc;
        m["chars"] = metrics->chars;
        m["tokens"] = metrics->tokens ? json(*metrics->tokens) : json(nullptr);
        m["cc"] = metrics->cc ? json(*metrics->cc) : json(nullptr);
        if (metrics->comments)
            m["comments"] = {{"incl", metrics->comments->incl},
                             {"excl", metrics->comments->excl},
                             {"ratio", metrics->comments->ratio}};
        else
            m["comments"] = nullptr;
        j["metrics"] = m;
    } else {
        j["metrics"] = nullptr;
    }
    j["pair_stats"] = pair_stats ? json{{"distance", pair_stats->distance},
                                        {"similarity", pair_stats->similarity}}
                                 : json(nullptr);
    j["error"] = error;
    return j;
}

CandidateRecord CandidateRecord::from_json(const json& j) {
    CandidateRecord r;
    r.phase = j.at("phase").get<std::string>();
    r.problem_id = j.at("problem_id").get<std::string>();
    r.submission_id = j.at("submission_id").get<std::string>();
    r.example_ids = j.at("example_ids").get<std::vector<int>>();
    r.sample_index = j.at("sample_index").get<int>();
    if (!j.at("extracted_source").is_null())
        r.extracted_source = j.at("extracted_source").get<std::string>();
    r.unfenced = j.at("unfenced").get<bool>();
    r.multi_block = j.at("multi_block").get<bool>();
    if (!j.at("verdict").is_null()) {
        const auto& v = j.at("verdict");
        judge::Verdict verdict;
        verdict.kind = judge::parse_verdict(v.at("kind").get<std::string>());
        verdict.diagnostic = v.at("diagnostic").get<std::string>();
        for (const auto& t : v.at("per_test")) {
            judge::TestResult tr;
            tr.test_index = t.at("test_index").get<int>();
            tr.outcome = parse_outcome(t.at("outcome").get<std::string>());
            tr.actual_output_digest = t.at("digest").get<std::string>();
            tr.elapsed_seconds = t.at("elapsed_seconds").get<double>();
            tr.exit_code = t.at("exit_code").get<int>();
            verdict.per_test.push_back(std::move(tr));
        }
        r.verdict = std::move(verdict);
    }
    if (!j.at("metrics").is_null()) {
        const auto& m = j.at("metrics");
        metrics::SourceMetrics sm;
        sm.loc = m.at("loc").get<int>();
        sm.chars = m.at("chars").get<std::int64_t>();
        if (!m.at("tokens").is_null()) sm.tokens = m.at("tokens").get<int>();
        if (!m.at("cc").is_null()) sm.cc = m.at("cc").get<int>();
        if (!m.at("comments").is_null()) {
            metrics::CommentCounts c;
            c.incl = m.at("comments").at("incl").get<int>();
            c.excl = m.at("comments").at("excl").get<int>();
            c.ratio = m.at("comments").at("ratio").get<double>();
            sm.comments = c;
        }
        r.metrics = sm;
    }
    if (!j.at("pair_stats").is_null()) {
        evalm::PairStats ps;
        ps.distance = j.at("pair_stats").at("distance").get<std::int64_t>();
        ps.similarity = j.at("pair_stats").at("similarity").get<double>();
        r.pair_stats = ps;
    }
    r.error = j.at("error").get<std::string>();
    return r;
}

std::string CandidateRecord::key() const {
    std::string ids;
    for (std::size_t i = 0; i < example_ids.size(); ++i) {
        if (i) ids += ",";
        ids += std::to_string(example_ids[i]);
    }
    return phase + "|" + ids + "|" + problem_id + "|" + submission_id + "|" +
           std::to_string(sample_index);
}

RunPaths::RunPaths(fs::path root_dir)
    : root(std::move(root_dir)),
      manifest(root / "manifest.json"),
      corpus_file(root / "corpus" / "selected.jsonl"),
      preprocess_stats_base(root / "corpus" / "preprocess_stats"),
      example_records(root / "records" / "example_eval.jsonl"),
      refactor_records(root / "records" / "refactor.jsonl"),
      language_records(root / "records" / "language.jsonl"),
      matrix_file(root / "score_matrix.json"),
      replay_file(root / "replay" / "responses.jsonl"),
      report_dir(root / "report") {}

std::vector<CandidateRecord> load_records(const fs::path& file) {
    if (!fs::exists(file)) return {};
    std::vector<jsonl::BadLine> bad;
    auto rows = jsonl::read_file(file, &bad);
    if (!bad.empty()) {
        // only a torn final line (killed writer) is repairable
        const bool torn_tail = bad.size() == 1 && bad.front().line_number == rows.size() + 1;
        if (!torn_tail)
            throw Error("records file " + file.string() + " is corrupt at line " +
                        std::to_string(bad.front().line_number) + ": " + bad.front().message);
        std::string repaired;
        for (const auto& row : rows) repaired += jsonl::dump_canonical(row) + "\n";
        write_file_text(file, repaired);
    }
    std::vector<CandidateRecord> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(CandidateRecord::from_json(row));
    return out;
}

Pipeline::Pipeline(PipelineOptions opts) : opts_(std::move(opts)), paths_(opts_.run_dir) {}

Pipeline::~Pipeline() = default;

json Pipeline::load_manifest() const {
    if (!fs::exists(paths_.manifest))
        throw Error("missing run manifest " + paths_.manifest.string() +
                    "; run preprocess first");
    return json::parse(read_file_text(paths_.manifest));
}

void Pipeline::save_manifest(const json& m) const {
    write_file_text(paths_.manifest, m.dump(2) + "\n");
}

corpus::ProblemSet Pipeline::load_problem_set() const {
    const auto m = load_manifest();
    return corpus::load_problems(m.at("problems_dir").get<std::string>());
}

corpus::Corpus Pipeline::load_selected(const corpus::ProblemSet& problems) const {
    corpus::DropCounts drops;
    auto selected = corpus::read_corpus(paths_.corpus_file, problems, &drops);
    if (drops.total() > 0)
        throw Error("selected corpus " + paths_.corpus_file.string() + " is corrupt: " +
                    (drops.messages.empty() ? "records dropped" : drops.messages.front()));
    return selected;
}

llm::Gateway& Pipeline::gateway() {
    if (!gateway_) {
        llm::GatewayOptions g;
        g.backend = opts_.backend;
        g.endpoint = opts_.endpoint;
        g.api_key = opts_.api_key;
        g.max_attempts = opts_.config.retry_max_attempts;
        g.base_delay_ms = opts_.config.retry_base_delay_ms;
        g.requests_per_minute = opts_.config.requests_per_minute;
        g.max_in_flight = opts_.config.gateway_concurrency;
        fs::create_directories(paths_.replay_file.parent_path());
        gateway_ = std::make_unique<llm::Gateway>(g, paths_.replay_file);
    }
    return *gateway_;
}

judge::Judge& Pipeline::judge_instance() {
    if (!judge_)
        judge_ = std::make_unique<judge::Judge>(opts_.config.judge,
                                                opts_.config.judge_concurrency);
    return *judge_;
}

void Pipeline::preprocess(const fs::path& raw_file, const fs::path& problems_dir) {
    const auto problems = corpus::load_problems(problems_dir);

    std::ifstream in(raw_file);
    if (!in) throw Error("cannot read raw corpus " + raw_file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    corpus::DropCounts drops;
    const auto collected = corpus::ingest(lines, problems, &drops);
    auto unique = corpus::dedup(collected);
    const corpus::TokenCounter counter = [](const std::string& source) {
        return metrics::measure(source).tokens.value_or(0);
    };
    auto filtered = corpus::filter_outliers(unique, counter);
    auto selected = corpus::sample(filtered, opts_.config.n_per_problem, opts_.seed);
    selected.stage = "selected";
    fs::create_directories(paths_.corpus_file.parent_path());
    corpus::write_corpus(selected, paths_.corpus_file);

    // Table-I-style stage table
    const std::vector<std::pair<std::string, const corpus::Corpus*>> stages = {
        {"Collected", &collected},
        {"Unique", &unique},
        {"Filtered", &filtered},
        {"Selected", &selected}};
    json rows = json::array();
    std::string csv = "stage,programs,mean_loc,mean_chars,mean_tokens,mean_cc\n";
    std::ostringstream txt;
    txt << "preprocessing stages\n";
    for (const auto& [name, stage] : stages) {
        const auto s = corpus::stats(*stage);
        rows.push_back({{"stage", name},
                        {"programs", s.program_count},
                        {"defined", s.defined},
                        {"mean_loc", s.mean_loc},
                        {"mean_chars", s.mean_chars},
                        {"mean_tokens", s.mean_tokens},
                        {"mean_cc", s.mean_cc}});
        csv += name + "," + std::to_string(s.program_count) + "," + json(s.mean_loc).dump() +
               "," + json(s.mean_chars).dump() + "," + json(s.mean_tokens).dump() + "," +
               json(s.mean_cc).dump() + "\n";
        txt << "  " << name << ": " << s.program_count << " programs, mean loc "
            << json(s.mean_loc).dump() << ", chars " << json(s.mean_chars).dump()
            << ", tokens " << json(s.mean_tokens).dump() << ", cc "
            << json(s.mean_cc).dump() << "\n";
    }
    txt << "dropped at ingest: not_accepted " << drops.not_accepted << ", unknown_problem "
        << drops.unknown_problem << ", malformed " << drops.malformed << "\n";
    json stats_doc = {{"rows", rows},
                      {"drops",
                       {{"not_accepted", drops.not_accepted},
                        {"unknown_problem", drops.unknown_problem},
                        {"malformed", drops.malformed}}}};
    write_file_text(fs::path(paths_.preprocess_stats_base.string() + ".json"),
                    stats_doc.dump(2) + "\n");
    write_file_text(fs::path(paths_.preprocess_stats_base.string() + ".csv"), csv);
    write_file_text(fs::path(paths_.preprocess_stats_base.string() + ".txt"), txt.str());

    json m;
    m["seed"] = opts_.seed;
    m["config"] = dump_config(opts_.config);
    m["problems_dir"] = fs::absolute(problems_dir).string();
    m["corpus_digest"] = sha256_hex(read_file_text(paths_.corpus_file));
    m["phases"] = json{{"preprocess", true}};
    if (fs::exists(paths_.manifest)) {
        // keep later-phase markers from a previous identical run
        const auto old = load_manifest();
        if (old.contains("phases"))
            for (auto it = old.at("phases").begin(); it != old.at("phases").end(); ++it)
                m["phases"][it.key()] = it.value();
    }
    save_manifest(m);
}

void Pipeline::evaluate_examples() {
    const auto problems = load_problem_set();
    const auto selected = load_selected(problems);
    const auto catalog = examples::load_catalog(opts_.catalog_dir);

    std::vector<WorkItem> items;
    for (const auto& ex : catalog)
        for (const auto& [pid, progs] : selected.by_problem)
            for (const auto& p : progs)
                items.push_back({{ex.id}, &p, &problems.at(pid)});
    run_generation_phase("example_eval", items, paths_.example_records);

    const auto records = load_records(paths_.example_records);
    std::vector<examples::CandidateVerdict> verdicts;
    for (const auto& r : records) {
        if (r.phase != "example_eval" || r.example_ids.size() != 1) continue;
        verdicts.push_back({r.example_ids.front(), r.problem_id, r.submission_id,
                            r.sample_index,
                            r.verdict && r.verdict->kind == judge::VerdictKind::Accepted});
    }
    std::vector<int> ids;
    for (const auto& ex : catalog) ids.push_back(ex.id);
    std::map<std::string, std::vector<std::string>> programs_by_problem;
    for (const auto& [pid, progs] : selected.by_problem)
        for (const auto& p : progs) programs_by_problem[pid].push_back(p.submission_id);
    const auto matrix = examples::score_example_problem(
        verdicts, ids, programs_by_problem, opts_.config.generation.samples_per_input);
    write_file_text(paths_.matrix_file, jsonl::dump_canonical(matrix.to_json()) + "\n");

    auto m = load_manifest();
    m["phases"]["example_eval"] = true;
    save_manifest(m);
}

std::map<std::string, std::vector<int>> Pipeline::select(int k) const {
    if (k < 1) throw ConfigError("k must be >= 1; zero-shot is its own prompt mode");
    if (!fs::exists(paths_.matrix_file))
        throw Error("missing score matrix " + paths_.matrix_file.string() +
                    "; run evaluate-examples first");
    const auto matrix =
        examples::ScoreMatrix::from_json(json::parse(read_file_text(paths_.matrix_file)));
    std::set<std::string> pids;
    for (const auto& [e, row] : matrix.s_ep)
        for (const auto& [pid, _] : row) pids.insert(pid);
    std::map<std::string, std::vector<int>> out;
    for (const auto& pid : pids) out[pid] = examples::select_examples(matrix, pid, k);
    return out;
}

void Pipeline::refactor() {
    const auto problems = load_problem_set();
    const auto selected = load_selected(problems);
    const auto& mode = opts_.config.prompt_mode;

    std::map<std::string, std::vector<int>> shots_per_problem;
    if (mode.kind == PromptMode::Kind::One && mode.one_example_id != "auto") {
        int id = 0;
        try {
            id = std::stoi(mode.one_example_id);
        } catch (const std::exception&) {
            throw ConfigError("prompt mode one:<id> needs an integer id or 'auto', got '" +
                              mode.one_example_id + "'");
        }
        for (const auto& [pid, _] : selected.by_problem) shots_per_problem[pid] = {id};
    } else if (mode.kind != PromptMode::Kind::Zero) {
        const int k = mode.kind == PromptMode::Kind::One ? 1 : mode.few_k;
        auto chosen = select(k);
        for (const auto& [pid, _] : selected.by_problem) {
            auto it = chosen.find(pid);
            if (it == chosen.end())
                throw Error("score matrix has no entry for problem " + pid);
            shots_per_problem[pid] = it->second;
        }
    }

    std::vector<WorkItem> items;
    for (const auto& [pid, progs] : selected.by_problem) {
        const auto it = shots_per_problem.find(pid);
        const std::vector<int> shots = it == shots_per_problem.end() ? std::vector<int>{}
                                                                     : it->second;
        for (const auto& p : progs) items.push_back({shots, &p, &problems.at(pid)});
    }
    run_generation_phase("refactor", items, paths_.refactor_records);

    if (opts_.config.detect_language) {
        std::set<std::string> done;
        if (fs::exists(paths_.language_records))
            for (const auto& row : jsonl::read_file(paths_.language_records))
                done.insert(row.at("problem_id").get<std::string>() + "|" +
                            row.at("submission_id").get<std::string>());
        jsonl::Writer writer(paths_.language_records);
        for (const auto& [pid, progs] : selected.by_problem) {
            for (const auto& p : progs) {
                if (done.count(pid + "|" + p.submission_id)) continue;
                const auto label =
                    gateway().detect_language(p.source_text, opts_.config.generation);
                writer.write(json{{"problem_id", pid},
                                  {"submission_id", p.submission_id},
                                  {"label", label}});
            }
        }
    }

    auto m = load_manifest();
    m["phases"]["refactor"] = true;
    save_manifest(m);
}

void Pipeline::run_generation_phase(const std::string& phase,
                                    const std::vector<WorkItem>& items,
                                    const fs::path& records_file) {
    fs::create_directories(records_file.parent_path());
    std::set<std::string> done;
    for (const auto& r : load_records(records_file)) done.insert(r.key());

    std::map<int, examples::RefactoringExample> examples_by_id;
    bool need_catalog = false;
    for (const auto& item : items)
        if (!item.example_ids.empty()) need_catalog = true;
    if (need_catalog)
        for (auto& ex : examples::load_catalog(opts_.catalog_dir))
            examples_by_id[ex.id] = std::move(ex);

    const int n = opts_.config.generation.samples_per_input;
    struct Pending {
        const WorkItem* item = nullptr;
        std::vector<int> missing;
    };
    std::vector<Pending> pending;
    for (const auto& item : items) {
        CandidateRecord probe;
        probe.phase = phase;
        probe.example_ids = item.example_ids;
        probe.problem_id = item.program->problem_id;
        probe.submission_id = item.program->submission_id;
        std::vector<int> missing;
        for (int s = 0; s < n; ++s) {
            probe.sample_index = s;
            if (!done.count(probe.key())) missing.push_back(s);
        }
        if (!missing.empty()) pending.push_back({&item, std::move(missing)});
    }
    if (pending.empty()) return;

    for (const auto& p : pending)
        for (int id : p.item->example_ids)
            if (!examples_by_id.count(id))
                throw ConfigError("example id " + std::to_string(id) +
                                  " is not in the catalog");

    // bring up shared services before the pool; both are internally synchronized
    auto& gw = gateway();
    judge_instance();

    jsonl::Writer writer(records_file);
    std::mutex write_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<int> processed{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto work = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const auto& p = pending[i];
            try {
                std::vector<examples::RefactoringExample> shots;
                for (int id : p.item->example_ids) shots.push_back(examples_by_id.at(id));
                const auto bundle = prompting::build_prompt(
                    opts_.config.system_instruction, shots, p.item->program->source_text,
                    "python", p.item->program->problem_id,
                    p.item->program->submission_id);
                const auto results = gw.generate(bundle, opts_.config.generation);
                for (int s : p.missing) {
                    auto record =
                        build_candidate(phase, *p.item, s, results.at(s).response_text);
                    const std::lock_guard<std::mutex> lock(write_mu);
                    writer.write(record.to_json());
                }
                const int finished = processed.fetch_add(1) + 1;
                if (opts_.abort_after_items > 0 && finished >= opts_.abort_after_items)
                    std::_Exit(3);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };

    const int workers = std::max(
        1, std::min(opts_.config.gateway_concurrency, static_cast<int>(pending.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

CandidateRecord Pipeline::build_candidate(const std::string& phase, const WorkItem& item,
                                          int sample_index,
                                          const std::string& response_text) {
    CandidateRecord record;
    record.phase = phase;
    record.example_ids = item.example_ids;
    record.problem_id = item.program->problem_id;
    record.submission_id = item.program->submission_id;
    record.sample_index = sample_index;
    prompting::Extraction extraction;
    try {
        extraction = prompting::extract_code(response_text);
    } catch (const ExtractError& e) {
        record.error = e.what();
        return record;
    }
    record.extracted_source = extraction.source;
    record.unfenced = extraction.unfenced;
    record.multi_block = extraction.multi_block;
    record.metrics = metrics::measure(extraction.source);
    record.verdict = judge_instance().validate(extraction.source, *item.problem);
    try {
        record.pair_stats = evalm::pair_stats(item.program->source_text, extraction.source);
    } catch (const Error& e) {
        record.error = e.what();
    }
    return record;
}

void Pipeline::report() const {
    const auto problems = load_problem_set();
    const auto selected = load_selected(problems);
    if (!fs::exists(paths_.refactor_records))
        throw Error("missing refactor records " + paths_.refactor_records.string() +
                    "; run refactor first");
    const auto records = load_records(paths_.refactor_records);

    std::map<std::pair<std::string, std::string>, std::string> languages;
    if (fs::exists(paths_.language_records))
        for (const auto& row : jsonl::read_file(paths_.language_records))
            languages[{row.at("problem_id").get<std::string>(),
                       row.at("submission_id").get<std::string>()}] =
                row.at("label").get<std::string>();

    const auto doc = report::build_report(records, selected, opts_.config, languages);
    fs::create_directories(paths_.report_dir);
    write_file_text(paths_.report_dir / "report.json", doc.dump(2) + "\n");
    write_file_text(paths_.report_dir / "report.csv", report::render_csv(doc));
    write_file_text(paths_.report_dir / "report.txt", report::render_text(doc));

    std::string suggestions;
    for (const auto& line : report::build_suggestions(records, selected))
        suggestions += jsonl::dump_canonical(line) + "\n";
    write_file_text(paths_.report_dir / "suggestions.jsonl", suggestions);
}

void Pipeline::format_distance() const {
    const auto problems = load_problem_set();
    const auto selected = load_selected(problems);
    if (!fs::exists(paths_.refactor_records))
        throw Error("missing refactor records " + paths_.refactor_records.string() +
                    "; run refactor first");
    const auto records = load_records(paths_.refactor_records);
    const auto doc = report::format_distance_report(records, selected,
                                                    opts_.config.formatter_command);
    fs::create_directories(paths_.report_dir);
    write_file_text(paths_.report_dir / "format_distance.json", doc.dump(2) + "\n");
    write_file_text(paths_.report_dir / "format_distance.csv", report::render_csv(doc));
    write_file_text(paths_.report_dir / "format_distance.txt", report::render_text(doc));
}

}  // namespace refactor::pipeline
