// SPDX-License-Identifier: Apache-2.0
#include "linefix/patch.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "linefix/common.hpp"
#include "linefix/process.hpp"

namespace fs = std::filesystem;

namespace linefix {

namespace {

std::vector<std::string> read_lines(const fs::path& path, bool* trailing_newline) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    *trailing_newline = !content.empty() && content.back() == '\n';
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string::npos) {
            if (start < content.size()) lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines,
                 bool trailing_newline) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path.string());
    for (size_t i = 0; i < lines.size(); ++i) {
        out << lines[i];
        if (i + 1 < lines.size() || trailing_newline) out << '\n';
    }
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && is_space(s[a])) ++a;
    while (b > a && is_space(s[b - 1])) --b;
    return s.substr(a, b - a);
}

std::string leading_indent(const std::string& s) {
    size_t a = 0;
    while (a < s.size() && is_space(s[a])) ++a;
    return s.substr(0, a);
}

fs::path make_scratch_copy(const fs::path& project_root,
                           const fs::path& scratch_dir) {
    fs::remove_all(scratch_dir);
    fs::create_directories(scratch_dir);
    fs::copy(project_root, scratch_dir,
             fs::copy_options::recursive | fs::copy_options::copy_symlinks);
    return scratch_dir;
}

bool contains_unresolvable(const std::vector<std::string>& tokens) {
    for (const auto& t : tokens)
        if (t == kReservedTokens[kPadIndex] || t == kReservedTokens[kStartIndex] ||
            t == kReservedTokens[kEndIndex] || t == kReservedTokens[kUnkIndex])
            return true;
    return false;
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::untested: return "untested";
        case Verdict::compile_fail: return "compile_fail";
        case Verdict::test_fail: return "test_fail";
        case Verdict::plausible: return "plausible";
    }
    return "?";
}

BugInstance BugInstance::load(const fs::path& project_root,
                              const fs::path& file_path, int line_no,
                              Language language) {
    BugInstance bug;
    bug.project_root = project_root;
    bug.file_path = file_path;
    bug.line_no = line_no;
    bug.language = language;
    bool nl;
    auto lines = read_lines(project_root / file_path, &nl);
    if (line_no < 1 || static_cast<size_t>(line_no) > lines.size())
        throw std::out_of_range("line " + std::to_string(line_no) +
                                " out of range for " + file_path.string());
    bug.buggy_line = lines[static_cast<size_t>(line_no) - 1];
    return bug;
}

TestOracle TestOracle::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    TestOracle o;
    o.build_command = j.at("build").get<std::vector<std::string>>();
    o.test_command = j.at("test").get<std::vector<std::string>>();
    o.failing_tests = j.value("failing_tests", std::vector<std::string>{});
    o.dev_fix_failing_tests =
        j.value("dev_fix_failing_tests", std::vector<std::string>{});
    o.timeout_build_s = j.value("timeout_build_s", 300.0);
    o.timeout_test_s = j.value("timeout_test_s", 600.0);
    return o;
}

std::string TestOracle::to_json() const {
    nlohmann::json j;
    j["build"] = build_command;
    j["test"] = test_command;
    j["failing_tests"] = failing_tests;
    j["dev_fix_failing_tests"] = dev_fix_failing_tests;
    j["timeout_build_s"] = timeout_build_s;
    j["timeout_test_s"] = timeout_test_s;
    return j.dump(2);
}

TestRun parse_test_output(const std::string& output) {
    TestRun run;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("PASS ", 0) == 0)
            run.results[trim(line.substr(5))] = true;
        else if (line.rfind("FAIL ", 0) == 0)
            run.results[trim(line.substr(5))] = false;
    }
    return run;
}

RepairModels RepairModels::load(const std::string& models_dir) {
    RepairModels models;
    fs::path dir(models_dir);
    models.src_vocab = Vocabulary::load((dir / "src.vocab").string());
    models.trg_vocab = Vocabulary::load((dir / "trg.vocab").string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".ckpt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("no .ckpt files in " + models_dir);

    for (const auto& f : files) {
        Checkpoint ckpt = load_checkpoint(f.string());
        if (ckpt.meta.src_vocab_fingerprint != models.src_vocab.fingerprint() ||
            ckpt.meta.trg_vocab_fingerprint != models.trg_vocab.fingerprint())
            throw std::runtime_error("vocabulary fingerprint mismatch for " +
                                     f.string());
        models.nets.push_back(network_from_checkpoint(ckpt));
        models.names.push_back(f.stem().string());
    }
    return models;
}

std::vector<CandidatePatch> generate_candidates(const BugInstance& bug,
                                                const RepairModels& models,
                                                const BeamOptions& beam) {
    const LanguageProfile& profile = profile_for(bug.language);
    auto stripped = strip_comments(bug.buggy_line, profile);
    if (!stripped) {
        log_warn("buggy line needs multi-line comment context; no candidates");
        return {};
    }
    TokenSequence seq = tokenize(*stripped, profile, /*abstract=*/true);
    if (seq.tokens.empty()) return {};
    std::vector<int> src = models.src_vocab.encode(seq.tokens);

    std::vector<std::vector<BeamResult>> per_model;
    per_model.reserve(models.nets.size());
    for (const auto& net : models.nets)
        per_model.push_back(beam_decode(net, src, beam));
    auto ranked = merge_rank(per_model);

    const std::string buggy_key = strip_ws(*stripped);
    std::vector<CandidatePatch> out;
    std::map<std::string, size_t> by_statement;  // collapse_ws key -> index
    for (const auto& patch : ranked) {
        auto tokens = models.trg_vocab.decode(patch.tokens);
        if (contains_unresolvable(tokens)) continue;
        TokenSequence out_seq;
        out_seq.tokens = std::move(tokens);
        std::vector<std::string> statements;
        try {
            statements = reconstruct(out_seq, *stripped, profile);
        } catch (const std::invalid_argument&) {
            continue;  // ill-formed marker placement from the model
        }
        for (auto& stmt : statements) {
            if (strip_ws(stmt) == buggy_key) continue;  // identical to buggy
            auto key = collapse_ws(stmt);
            auto it = by_statement.find(key);
            if (it != by_statement.end()) {
                auto& existing = out[it->second];
                for (size_t id : patch.model_ids)
                    if (std::find(existing.model_ids.begin(),
                                  existing.model_ids.end(),
                                  id) == existing.model_ids.end())
                        existing.model_ids.push_back(id);
                continue;  // ranked is score-ordered: first hit keeps best score
            }
            CandidatePatch cp;
            cp.statement = stmt;
            cp.score = patch.nll;
            cp.model_ids = patch.model_ids;
            by_statement.emplace(std::move(key), out.size());
            out.push_back(std::move(cp));
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const CandidatePatch& a, const CandidatePatch& b) {
                         return a.score < b.score;
                     });
    return out;
}

void apply_patch(const BugInstance& bug, const CandidatePatch& patch,
                 const fs::path& dest_root) {
    fs::path target = dest_root / bug.file_path;
    bool trailing_newline;
    auto lines = read_lines(target, &trailing_newline);
    if (bug.line_no < 1 || static_cast<size_t>(bug.line_no) > lines.size())
        throw std::out_of_range("apply_patch: line out of range");
    std::string& line = lines[static_cast<size_t>(bug.line_no) - 1];
    if (line != bug.buggy_line)
        throw std::runtime_error("apply_patch: file changed since bug was loaded");
    line = leading_indent(bug.buggy_line) + trim(patch.statement);
    write_lines(target, lines, trailing_newline);
}

std::set<std::string> compute_baseline(const BugInstance& bug,
                                       const TestOracle& oracle,
                                       const fs::path& scratch_dir) {
    auto copy = make_scratch_copy(bug.project_root, scratch_dir);
    auto build = run_process(oracle.build_command, copy.string(),
                             oracle.timeout_build_s);
    if (!build.ok())
        throw std::runtime_error("baseline build failed: " + build.err);
    auto tests = run_process(oracle.test_command, copy.string(),
                             oracle.timeout_test_s);
    TestRun run = parse_test_output(tests.out + "\n" + tests.err);
    std::set<std::string> passing;
    for (const auto& [name, passed] : run.results)
        if (passed) passing.insert(name);
    for (const auto& name : oracle.failing_tests)
        if (passing.count(name))
            log_warn("fault-revealing test '" + name +
                     "' already passes on the buggy version");
    return passing;
}

Verdict validate_patch(const BugInstance& bug, CandidatePatch& patch,
                       const TestOracle& oracle,
                       const std::set<std::string>& baseline_passing,
                       const fs::path& scratch_dir) {
    auto copy = make_scratch_copy(bug.project_root, scratch_dir);
    apply_patch(bug, patch, copy);

    auto build = run_process(oracle.build_command, copy.string(),
                             oracle.timeout_build_s);
    if (build.timed_out) {
        patch.timed_out = true;
        patch.verdict = Verdict::test_fail;
        return patch.verdict;
    }
    if (build.exit_code != 0) {
        patch.verdict = Verdict::compile_fail;
        return patch.verdict;
    }

    auto tests = run_process(oracle.test_command, copy.string(),
                             oracle.timeout_test_s);
    if (tests.timed_out) {
        patch.timed_out = true;
        patch.verdict = Verdict::test_fail;
        return patch.verdict;
    }
    TestRun run = parse_test_output(tests.out + "\n" + tests.err);
    auto passed = [&](const std::string& name) {
        auto it = run.results.find(name);
        return it != run.results.end() && it->second;
    };

    for (const auto& name : oracle.failing_tests) {
        if (!passed(name)) {
            patch.verdict = Verdict::test_fail;
            return patch.verdict;
        }
    }
    for (const auto& name : baseline_passing) {
        if (std::find(oracle.dev_fix_failing_tests.begin(),
                      oracle.dev_fix_failing_tests.end(),
                      name) != oracle.dev_fix_failing_tests.end())
            continue;  // allowed to fail: fails on the developer fix too
        if (!passed(name)) {
            patch.verdict = Verdict::test_fail;
            return patch.verdict;
        }
    }
    patch.verdict = Verdict::plausible;
    return patch.verdict;
}

RepairReport repair(const BugInstance& bug, const RepairModels& models,
                    const BeamOptions& beam, const TestOracle& oracle,
                    size_t stop_after,
                    const std::optional<std::string>& reference_fix) {
    RepairReport report;
    auto candidates = generate_candidates(bug, models, beam);
    report.candidates_generated = candidates.size();
    if (candidates.empty()) return report;

    fs::path scratch_base =
        fs::temp_directory_path() /
        ("linefix_scratch_" + hex64(fnv1a64(bug.project_root.string() + ":" +
                                            bug.file_path.string())));
    auto baseline =
        compute_baseline(bug, oracle, scratch_base / "baseline");

    std::string ref_key;
    if (reference_fix) ref_key = strip_ws(*reference_fix);

    size_t found = 0;
    for (auto& cand : candidates) {
        if (found >= stop_after) break;
        if (!ref_key.empty() && strip_ws(cand.statement) == ref_key)
            cand.exact_match = true;

        RepairAudit audit;
        auto t0 = std::chrono::steady_clock::now();
        validate_patch(bug, cand, oracle, baseline, scratch_base / "work");
        audit.test_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        audit.patch = cand;
        report.audits.push_back(audit);
        if (cand.verdict == Verdict::plausible) {
            report.plausible.push_back(cand);
            ++found;
        }
    }
    fs::remove_all(scratch_base);
    return report;
}

}  // namespace linefix
