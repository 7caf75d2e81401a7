// SPDX-License-Identifier: Apache-2.0
//
// End-to-end repair of one localized bug: candidate generation from the
// model ensemble, statement reconstruction, patch application into scratch
// copies, and build/test validation with the two plausibility criteria.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "linefix/ensemble.hpp"
#include "linefix/tokenizer.hpp"
#include "linefix/vocab.hpp"

namespace linefix {

struct BugInstance {
    std::filesystem::path project_root;
    std::filesystem::path file_path;  // relative to project_root
    int line_no = 0;                  // 1-based
    Language language = Language::java;
    std::string buggy_line;  // cached raw line, indentation included

    /// Reads and caches the buggy line. Throws when the file is missing or
    /// the line number is out of range.
    static BugInstance load(const std::filesystem::path& project_root,
                            const std::filesystem::path& file_path, int line_no,
                            Language language);
};

enum class Verdict { untested, compile_fail, test_fail, plausible };
const char* to_string(Verdict v);

struct CandidatePatch {
    std::string statement;          // reconstructed source, no indentation
    double score = 0.0;             // ensemble NLL, lower is better
    std::vector<size_t> model_ids;  // contributing models
    Verdict verdict = Verdict::untested;
    bool timed_out = false;
    bool exact_match = false;  // set when a reference fix is supplied
};

struct TestOracle {
    std::vector<std::string> build_command;
    std::vector<std::string> test_command;
    std::vector<std::string> failing_tests;          // fault revealing
    std::vector<std::string> dev_fix_failing_tests;  // allowed to keep failing
    double timeout_build_s = 300.0;
    double timeout_test_s = 600.0;

    static TestOracle from_json_file(const std::string& path);
    std::string to_json() const;
};

/// Outcome of one test-suite run: names seen with PASS/FAIL status lines.
struct TestRun {
    std::map<std::string, bool> results;  // name -> passed
    bool timed_out = false;
    int exit_code = 0;
};

/// Parses "PASS <name>" / "FAIL <name>" lines from test-runner output.
TestRun parse_test_output(const std::string& output);

struct RepairModels {
    Vocabulary src_vocab;
    Vocabulary trg_vocab;
    std::vector<Network<float>> nets;
    std::vector<std::string> names;  // checkpoint file stems, sorted

    /// Loads src.vocab, trg.vocab and every *.ckpt from a directory (name
    /// order). Throws if any checkpoint's fingerprints do not match.
    static RepairModels load(const std::string& models_dir);
};

/// Tokenizes the buggy line (abstracted), decodes with every model, merges
/// and reconstructs. Candidates identical to the buggy line are dropped;
/// duplicate statements keep their best score. Sorted ascending by score.
std::vector<CandidatePatch> generate_candidates(const BugInstance& bug,
                                                const RepairModels& models,
                                                const BeamOptions& beam);

/// Replaces the bug line inside `dest_root` (a working copy) with the
/// statement, preserving the original line's leading indentation. Errors if
/// the target line no longer equals the cached buggy line.
void apply_patch(const BugInstance& bug, const CandidatePatch& patch,
                 const std::filesystem::path& dest_root);

/// Copies the project to a scratch directory, applies the patch, builds and
/// tests. `baseline_passing` is the set of tests that pass on the unpatched
/// project. Plausible iff every fault-revealing test passes and every
/// baseline-passing test (except the dev-fix-failing ones) still passes.
Verdict validate_patch(const BugInstance& bug, CandidatePatch& patch,
                       const TestOracle& oracle,
                       const std::set<std::string>& baseline_passing,
                       const std::filesystem::path& scratch_dir);

/// Runs the oracle's test command on an unpatched scratch copy and records
/// which tests pass.
std::set<std::string> compute_baseline(const BugInstance& bug,
                                       const TestOracle& oracle,
                                       const std::filesystem::path& scratch_dir);

struct RepairAudit {
    CandidatePatch patch;
    double build_seconds = 0.0;
    double test_seconds = 0.0;
};

struct RepairReport {
    std::vector<RepairAudit> audits;       // every validated candidate, in order
    std::vector<CandidatePatch> plausible; // ascending score
    size_t candidates_generated = 0;
};

/// Validates candidates in score order until `stop_after` plausible patches
/// are found or candidates are exhausted. The project working copy is never
/// modified. An empty result is a valid outcome.
RepairReport repair(const BugInstance& bug, const RepairModels& models,
                    const BeamOptions& beam, const TestOracle& oracle,
                    size_t stop_after,
                    const std::optional<std::string>& reference_fix = std::nullopt);

}  // namespace linefix
