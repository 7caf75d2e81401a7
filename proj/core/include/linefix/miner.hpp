// SPDX-License-Identifier: Apache-2.0
//
// Mining buggy/fixed line pairs out of git commit histories.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "linefix/tokenizer.hpp"

namespace linefix {

struct DiffHunk {
    int old_start = 0;  // 1-based first removed line (pre-patch numbering)
    std::vector<std::string> removed;
    std::vector<std::string> added;
};

struct FileDiff {
    std::string file_path;  // post-image path
    std::vector<DiffHunk> hunks;
};

struct CommitRecord {
    std::string repo_id;
    std::string commit_hash;
    std::string message;
    std::vector<FileDiff> file_diffs;
};

struct BugFixPair {
    std::string id;  // stable hash of repo+commit+file+line
    std::string repo_id;
    std::string commit_hash;
    std::string file_path;
    int line_no = 0;  // 1-based, pre-patch
    std::string buggy;
    std::string fixed;
    Language language = Language::java;

    bool operator==(const BugFixPair&) const = default;
};

/// Keyword filter on commit messages: case-insensitive substring match.
/// True iff the message mentions fix/bug/patch and none of the six
/// anti-patterns (rename, clean up, refactor, merge, misspelling,
/// compiler warning).
bool filter_commit_message(std::string_view message);

/// One pair per hunk that swaps exactly one line for exactly one line,
/// after comment stripping, with cosmetic-only and non-UTF-8 changes
/// dropped. Malformed input never throws; offending hunks are skipped
/// with a warning.
std::vector<BugFixPair> extract_pairs(const CommitRecord& commit);

/// Removes pairs whose buggy or fixed token count exceeds mean + 2*sd of
/// the token counts over both sides of the whole input set. With fewer
/// than two pairs the input is returned unchanged (sd undefined).
std::vector<BugFixPair> length_filter(const std::vector<BugFixPair>& pairs);

/// Same filter with frozen statistics, for idempotence checks and sharding.
std::vector<BugFixPair> length_filter(const std::vector<BugFixPair>& pairs,
                                      double mean, double sd);

/// Token-count statistics used by length_filter: population mean/sd over the
/// union of buggy and fixed token counts.
struct LengthStats {
    double mean = 0.0;
    double sd = 0.0;
};
LengthStats length_stats(const std::vector<BugFixPair>& pairs);

/// Benchmark exclusion keys. An entry is either a whitespace-stripped fixed
/// line, or a whitespace-stripped "buggy\x01fixed" pair key; membership of
/// either form removes the pair. Order of survivors is preserved.
std::vector<BugFixPair> dedup_against_benchmark(
    const std::vector<BugFixPair>& pairs,
    const std::unordered_set<std::string>& benchmark_fixes);

/// Builds the exclusion key for a (buggy, fixed) change.
std::string benchmark_pair_key(std::string_view buggy, std::string_view fixed);

// ------------------------------------------------------------------ JSONL

/// One pair per line, UTF-8, keys in the fixed order
/// {id, repo_id, commit_hash, file_path, line_no, buggy, fixed, language}.
void write_pairs_jsonl(const std::string& path,
                       const std::vector<BugFixPair>& pairs);
std::vector<BugFixPair> read_pairs_jsonl(const std::string& path);

std::string pair_to_json_line(const BugFixPair& pair);
BugFixPair pair_from_json_line(const std::string& line);

// -------------------------------------------------------------------- git

/// Parses `git show --unified=0` style unified diff text into file diffs.
std::vector<FileDiff> parse_unified_diff(const std::string& diff_text);

/// Scans one local git repository: reads the commit list, applies the
/// message filter, and extracts pairs from passing commits.
std::vector<BugFixPair> mine_repository(const std::string& repo_dir,
                                        std::optional<Language> only_language);

/// Mines every direct subdirectory of `repos_dir` that is a git repository,
/// in name order, optionally in parallel. Output is concatenated in
/// repository order regardless of worker count.
std::vector<BugFixPair> mine_repositories(const std::string& repos_dir,
                                          std::optional<Language> only_language,
                                          int workers = 1);

}  // namespace linefix
