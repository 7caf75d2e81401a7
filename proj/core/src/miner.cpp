// SPDX-License-Identifier: Apache-2.0
#include "linefix/miner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "linefix/common.hpp"
#include "linefix/process.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace linefix {

namespace {

const std::array<std::string_view, 3> kKeywords = {"fix", "bug", "patch"};
const std::array<std::string_view, 6> kAntiPatterns = {
    "rename", "clean up", "refactor", "merge", "misspelling", "compiler warning"};

std::string pair_id(const BugFixPair& p) {
    std::string key = p.repo_id + ":" + p.commit_hash + ":" + p.file_path + ":" +
                      std::to_string(p.line_no);
    return hex64(fnv1a64(key));
}

// Turns one single-line hunk into a pair, or nothing: strips comments
// line-locally, rejects non-UTF-8 content, empty statements and changes
// that only differ in whitespace or comments.
std::optional<BugFixPair> pair_from_hunk(const CommitRecord& commit,
                                         const FileDiff& fd, const DiffHunk& hunk,
                                         Language lang) {
    const std::string& raw_buggy = hunk.removed.front();
    const std::string& raw_fixed = hunk.added.front();
    if (!is_valid_utf8(raw_buggy) || !is_valid_utf8(raw_fixed)) return std::nullopt;

    const LanguageProfile& profile = profile_for(lang);
    auto buggy = strip_comments(raw_buggy, profile);
    auto fixed = strip_comments(raw_fixed, profile);
    if (!buggy || !fixed) return std::nullopt;  // block comment spans the line
    if (strip_ws(*buggy).empty() || strip_ws(*fixed).empty()) return std::nullopt;
    if (strip_ws(*buggy) == strip_ws(*fixed)) return std::nullopt;  // cosmetic

    BugFixPair p;
    p.repo_id = commit.repo_id;
    p.commit_hash = commit.commit_hash;
    p.file_path = fd.file_path;
    p.line_no = hunk.old_start;
    p.buggy = collapse_ws(*buggy);
    p.fixed = collapse_ws(*fixed);
    p.language = lang;
    p.id = pair_id(p);
    return p;
}

size_t token_count(const BugFixPair& p, std::string_view side) {
    const LanguageProfile& profile = profile_for(p.language);
    const std::string& line = side == "buggy" ? p.buggy : p.fixed;
    return tokenize(line, profile).tokens.size();
}

}  // namespace

bool filter_commit_message(std::string_view message) {
    std::string lower = to_lower(message);
    bool has_keyword = false;
    for (auto kw : kKeywords)
        if (lower.find(kw) != std::string::npos) {
            has_keyword = true;
            break;
        }
    if (!has_keyword) return false;
    for (auto ap : kAntiPatterns)
        if (lower.find(ap) != std::string::npos) return false;
    return true;
}

std::vector<BugFixPair> extract_pairs(const CommitRecord& commit) {
    std::vector<BugFixPair> out;
    for (const auto& fd : commit.file_diffs) {
        auto lang = language_from_extension(fd.file_path);
        if (!lang) continue;
        for (const auto& hunk : fd.hunks) {
            if (hunk.removed.size() != 1 || hunk.added.size() != 1) continue;
            if (auto p = pair_from_hunk(commit, fd, hunk, *lang)) out.push_back(*p);
        }
    }
    return out;
}

LengthStats length_stats(const std::vector<BugFixPair>& pairs) {
    std::vector<size_t> counts;
    counts.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        counts.push_back(token_count(p, "buggy"));
        counts.push_back(token_count(p, "fixed"));
    }
    LengthStats st;
    if (counts.empty()) return st;
    double sum = 0;
    for (auto c : counts) sum += static_cast<double>(c);
    st.mean = sum / static_cast<double>(counts.size());
    double sq = 0;
    for (auto c : counts) {
        double d = static_cast<double>(c) - st.mean;
        sq += d * d;
    }
    st.sd = std::sqrt(sq / static_cast<double>(counts.size()));
    return st;
}

std::vector<BugFixPair> length_filter(const std::vector<BugFixPair>& pairs,
                                      double mean, double sd) {
    std::vector<BugFixPair> out;
    out.reserve(pairs.size());
    double cutoff = mean + 2.0 * sd;
    for (const auto& p : pairs) {
        double b = static_cast<double>(token_count(p, "buggy"));
        double f = static_cast<double>(token_count(p, "fixed"));
        if (b > cutoff || f > cutoff) continue;
        out.push_back(p);
    }
    return out;
}

std::vector<BugFixPair> length_filter(const std::vector<BugFixPair>& pairs) {
    if (pairs.size() <= 1) return pairs;  // sd undefined on a single sample
    LengthStats st = length_stats(pairs);
    return length_filter(pairs, st.mean, st.sd);
}

std::string benchmark_pair_key(std::string_view buggy, std::string_view fixed) {
    return strip_ws(buggy) + '\x01' + strip_ws(fixed);
}

std::vector<BugFixPair> dedup_against_benchmark(
    const std::vector<BugFixPair>& pairs,
    const std::unordered_set<std::string>& benchmark_fixes) {
    std::vector<BugFixPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (benchmark_fixes.count(strip_ws(p.fixed)) ||
            benchmark_fixes.count(benchmark_pair_key(p.buggy, p.fixed)))
            continue;
        out.push_back(p);
    }
    return out;
}

// ------------------------------------------------------------------ JSONL

std::string pair_to_json_line(const BugFixPair& pair) {
    ojson j;
    j["id"] = pair.id;
    j["repo_id"] = pair.repo_id;
    j["commit_hash"] = pair.commit_hash;
    j["file_path"] = pair.file_path;
    j["line_no"] = pair.line_no;
    j["buggy"] = pair.buggy;
    j["fixed"] = pair.fixed;
    j["language"] = to_string(pair.language);
    return j.dump();
}

BugFixPair pair_from_json_line(const std::string& line) {
    ojson j = ojson::parse(line);
    BugFixPair p;
    p.id = j.at("id").get<std::string>();
    p.repo_id = j.at("repo_id").get<std::string>();
    p.commit_hash = j.at("commit_hash").get<std::string>();
    p.file_path = j.at("file_path").get<std::string>();
    p.line_no = j.at("line_no").get<int>();
    p.buggy = j.at("buggy").get<std::string>();
    p.fixed = j.at("fixed").get<std::string>();
    auto lang = language_from_string(j.at("language").get<std::string>());
    if (!lang) throw std::runtime_error("unknown language in: " + line);
    p.language = *lang;
    return p;
}

void write_pairs_jsonl(const std::string& path,
                       const std::vector<BugFixPair>& pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& p : pairs) out << pair_to_json_line(p) << '\n';
}

std::vector<BugFixPair> read_pairs_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<BugFixPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        pairs.push_back(pair_from_json_line(line));
    }
    return pairs;
}

// -------------------------------------------------------------------- git

std::vector<FileDiff> parse_unified_diff(const std::string& diff_text) {
    std::vector<FileDiff> files;
    std::istringstream in(diff_text);
    std::string line;
    FileDiff* current = nullptr;
    DiffHunk* hunk = nullptr;
    bool skip_file = false;

    auto flush_hunk = [&]() { hunk = nullptr; };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("diff --git", 0) == 0) {
            flush_hunk();
            files.emplace_back();
            current = &files.back();
            skip_file = false;
            continue;
        }
        if (current == nullptr) continue;
        if (line.rfind("Binary files", 0) == 0 || line.rfind("GIT binary", 0) == 0) {
            skip_file = true;
            continue;
        }
        if (line.rfind("+++ ", 0) == 0) {
            std::string path = line.substr(4);
            if (path == "/dev/null") {
                skip_file = true;  // deleted file: no post-image
            } else {
                if (path.rfind("b/", 0) == 0) path = path.substr(2);
                current->file_path = path;
            }
            continue;
        }
        if (line.rfind("@@", 0) == 0) {
            flush_hunk();
            if (skip_file) continue;
            // @@ -old_start[,old_count] +new_start[,new_count] @@
            int old_start = 0;
            if (std::sscanf(line.c_str(), "@@ -%d", &old_start) != 1) {
                log_warn("malformed hunk header skipped: " + line);
                continue;
            }
            current->hunks.emplace_back();
            hunk = &current->hunks.back();
            hunk->old_start = old_start;
            continue;
        }
        if (hunk != nullptr && !skip_file) {
            if (line.rfind('-', 0) == 0 && line.rfind("---", 0) != 0)
                hunk->removed.push_back(line.substr(1));
            else if (line.rfind('+', 0) == 0 && line.rfind("+++", 0) != 0)
                hunk->added.push_back(line.substr(1));
            else if (line.rfind('\\', 0) == 0) {
                // "\ No newline at end of file"
            } else {
                flush_hunk();
            }
        }
    }
    // Drop entries that never resolved to a usable path.
    std::erase_if(files, [](const FileDiff& f) { return f.file_path.empty(); });
    return files;
}

std::vector<BugFixPair> mine_repository(const std::string& repo_dir,
                                        std::optional<Language> only_language) {
    std::vector<BugFixPair> out;
    auto rev = run_process({"git", "-C", repo_dir, "rev-list", "--no-merges", "HEAD"});
    if (!rev.ok()) {
        log_warn("rev-list failed for " + repo_dir + ": " + rev.err);
        return out;
    }
    std::string repo_id = fs::path(repo_dir).filename().string();

    std::istringstream hashes(rev.out);
    std::string hash;
    while (std::getline(hashes, hash)) {
        if (hash.empty()) continue;
        auto msg = run_process({"git", "-C", repo_dir, "show", "-s",
                                "--format=%B", hash});
        if (!msg.ok()) {
            log_warn("git show -s failed for " + hash);
            continue;
        }
        if (!filter_commit_message(msg.out)) continue;

        auto diff = run_process({"git", "-C", repo_dir, "show", "--format=",
                                 "--unified=0", "--no-color", hash});
        if (!diff.ok()) {
            log_warn("git show failed for " + hash);
            continue;
        }
        CommitRecord rec;
        rec.repo_id = repo_id;
        rec.commit_hash = hash;
        rec.message = msg.out;
        rec.file_diffs = parse_unified_diff(diff.out);
        for (auto& p : extract_pairs(rec)) {
            if (only_language && p.language != *only_language) continue;
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<BugFixPair> mine_repositories(const std::string& repos_dir,
                                          std::optional<Language> only_language,
                                          int workers) {
    std::vector<std::string> repos;
    for (const auto& entry : fs::directory_iterator(repos_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / ".git"))
            repos.push_back(entry.path().string());
    }
    std::sort(repos.begin(), repos.end());

    std::vector<std::vector<BugFixPair>> per_repo(repos.size());
    if (workers <= 1) {
        for (size_t i = 0; i < repos.size(); ++i)
            per_repo[i] = mine_repository(repos[i], only_language);
    } else {
        std::atomic<size_t> next{0};
        auto work = [&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= repos.size()) return;
                per_repo[i] = mine_repository(repos[i], only_language);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<BugFixPair> out;
    for (auto& v : per_repo)
        out.insert(out.end(), std::make_move_iterator(v.begin()),
                   std::make_move_iterator(v.end()));
    return out;
}

}  // namespace linefix
