// SPDX-License-Identifier: Apache-2.0
#include "corpus_gen.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "linefix/process.hpp"

namespace fs = std::filesystem;
using linefix::Language;
using linefix::Rng;

namespace testsupport {

namespace {

const char* kStems[] = {"count", "index", "value",  "total", "name",  "size",
                        "offset", "buffer", "result", "input", "output", "item",
                        "node",  "key",   "flag",   "limit", "sum",   "user",
                        "token", "batch", "cache",  "depth", "width", "score"};
const char* kVerbs[] = {"get", "set", "compute", "parse", "find",
                        "read", "write", "update", "check", "load"};
const char* kNumbers[] = {"2", "7", "10", "16", "32", "42", "100", "255",
                          "1024", "0x1F", "3.14", "0.5", "1e-6", "8"};
const char* kStrings[] = {"error", "invalid input", "done", "name=", "empty",
                          "timeout", "bad state", "missing key"};
const char* kCmps[] = {"<", "<=", ">", ">=", "==", "!="};
const char* kOps[] = {"+", "-", "*", "%"};

template <size_t N>
const char* pick(Rng& rng, const char* (&arr)[N]) {
    return arr[static_cast<size_t>(rng.uniform_int(0, N - 1))];
}

std::string cap(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z')
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string camel_ident(Rng& rng, int words = 2) {
    std::string out = pick(rng, kStems);
    for (int i = 1; i < words; ++i) out += cap(pick(rng, kStems));
    return out;
}

std::string snake_ident(Rng& rng, int words = 2) {
    std::string out = pick(rng, kStems);
    for (int i = 1; i < words; ++i) out += std::string("_") + pick(rng, kStems);
    return out;
}

std::string ident(Language lang, Rng& rng, int words = 2) {
    return lang == Language::python ? snake_ident(rng, words)
                                    : camel_ident(rng, words);
}

std::string method(Language lang, Rng& rng) {
    std::string verb = pick(rng, kVerbs);
    std::string stem = pick(rng, kStems);
    if (lang == Language::python) return verb + "_" + stem;
    return verb + cap(stem);
}

std::string expr(Language lang, Rng& rng) {
    switch (rng.uniform_int(0, 3)) {
        case 0: return ident(lang, rng);
        case 1: return pick(rng, kNumbers);
        case 2:
            return ident(lang, rng) + " " + pick(rng, kOps) + " " +
                   pick(rng, kNumbers);
        default:
            return ident(lang, rng) + "." + method(lang, rng) + "(" +
                   ident(lang, rng, 1) + ")";
    }
}

std::string cond(Language lang, Rng& rng) {
    return ident(lang, rng) + " " + pick(rng, kCmps) + " " + expr(lang, rng);
}

std::string java_type(Rng& rng) {
    const char* types[] = {"int", "long", "double", "String", "boolean"};
    return pick(rng, types);
}

std::string gen_java_like(Language lang, Rng& rng) {
    std::string semi = lang == Language::java || lang == Language::cpp ||
                       lang == Language::javascript
                           ? ";"
                           : "";
    switch (rng.uniform_int(0, 6)) {
        case 0: {
            std::string type = lang == Language::java || lang == Language::cpp
                                   ? java_type(rng)
                                   : std::string("let");
            return type + " " + ident(lang, rng) + " = " + expr(lang, rng) + semi;
        }
        case 1:
            return "if (" + cond(lang, rng) + ") { return " + expr(lang, rng) +
                   semi + " }";
        case 2:
            return ident(lang, rng) + "." + method(lang, rng) + "(" +
                   ident(lang, rng, 1) + ", " + expr(lang, rng) + ")" + semi;
        case 3: {
            std::string i = "i";
            return "for (int " + i + " = 0; " + i + " < " + ident(lang, rng) +
                   "; " + i + "++) " + ident(lang, rng) + " += " +
                   ident(lang, rng, 1) + "[" + i + "]" + semi;
        }
        case 4:
            return "return " + ident(lang, rng) + "." + method(lang, rng) + "(" +
                   ident(lang, rng, 1) + ") " + pick(rng, kOps) + " " +
                   pick(rng, kNumbers) + semi;
        case 5:
            return ident(lang, rng) + " = " + ident(lang, rng) + " " +
                   pick(rng, kOps) + " (" + expr(lang, rng) + ")" + semi;
        default:
            return "log." + method(lang, rng) + "(\"" + pick(rng, kStrings) +
                   "\" + " + ident(lang, rng) + ")" + semi;
    }
}

std::string gen_python(Rng& rng) {
    Language lang = Language::python;
    switch (rng.uniform_int(0, 5)) {
        case 0:
            return ident(lang, rng) + " = " + expr(lang, rng);
        case 1:
            return "if " + cond(lang, rng) + ": return " + expr(lang, rng);
        case 2:
            return "self." + ident(lang, rng) + " = " + method(lang, rng) + "(" +
                   ident(lang, rng, 1) + ", " + pick(rng, kNumbers) + ")";
        case 3:
            return "def " + method(lang, rng) + "(" + ident(lang, rng, 1) + ", " +
                   ident(lang, rng, 1) + "): return " + expr(lang, rng);
        case 4:
            return ident(lang, rng) + " = [" + expr(lang, rng) + " for " +
                   ident(lang, rng, 1) + " in " + ident(lang, rng) + "]";
        default:
            return std::string("print(\"") + pick(rng, kStrings) + "\" + str(" +
                   ident(lang, rng) + "))";
    }
}

}  // namespace

std::string gen_line(Language lang, Rng& rng) {
    return lang == Language::python ? gen_python(rng) : gen_java_like(lang, rng);
}

LinePair gen_pair(Language lang, Rng& rng) {
    LinePair p;
    switch (rng.uniform_int(0, 4)) {
        case 0: {  // comparison operator flip
            std::string lhs = ident(lang, rng), rhs = expr(lang, rng);
            std::string ret = expr(lang, rng);
            const char* before = pick(rng, kCmps);
            const char* after = before;
            while (std::string(after) == before) after = pick(rng, kCmps);
            if (lang == Language::python) {
                p.buggy = "if " + lhs + " " + before + " " + rhs + ": return " + ret;
                p.fixed = "if " + lhs + " " + after + " " + rhs + ": return " + ret;
            } else {
                p.buggy = "if (" + lhs + " " + before + " " + rhs + ") { return " +
                          ret + "; }";
                p.fixed = "if (" + lhs + " " + after + " " + rhs + ") { return " +
                          ret + "; }";
            }
            break;
        }
        case 1: {  // method swap
            std::string obj = ident(lang, rng), arg = ident(lang, rng, 1);
            std::string m1 = method(lang, rng), m2 = method(lang, rng);
            while (m2 == m1) m2 = method(lang, rng);
            std::string tail = lang == Language::python ? "" : ";";
            p.buggy = obj + " = " + obj + "." + m1 + "(" + arg + ")" + tail;
            p.fixed = obj + " = " + obj + "." + m2 + "(" + arg + ")" + tail;
            break;
        }
        case 2: {  // off-by-one bound
            std::string v = ident(lang, rng), bound = ident(lang, rng, 1);
            if (lang == Language::python) {
                p.buggy = "for i in range(" + bound + " + 1): " + v + " += i";
                p.fixed = "for i in range(" + bound + "): " + v + " += i";
            } else {
                p.buggy = "for (int i = 0; i <= " + bound + "; i++) " + v +
                          " += i;";
                p.fixed = "for (int i = 0; i < " + bound + "; i++) " + v +
                          " += i;";
            }
            break;
        }
        case 3: {  // wrong numeric literal
            std::string v = ident(lang, rng);
            const char* n1 = pick(rng, kNumbers);
            const char* n2 = n1;
            while (std::string(n2) == n1) n2 = pick(rng, kNumbers);
            std::string tail = lang == Language::python ? "" : ";";
            p.buggy = v + " = " + v + " " + pick(rng, kOps) + " " + n1 + tail;
            p.fixed = v + " = " + v + " " + pick(rng, kOps) + " " + n2 + tail;
            break;
        }
        default: {  // missing argument
            std::string obj = ident(lang, rng), m = method(lang, rng);
            std::string a1 = ident(lang, rng, 1), a2 = ident(lang, rng, 1);
            std::string tail = lang == Language::python ? "" : ";";
            p.buggy = "return " + obj + "." + m + "(" + a1 + ")" + tail;
            p.fixed = "return " + obj + "." + m + "(" + a1 + ", " + a2 + ")" + tail;
            break;
        }
    }
    return p;
}

std::vector<std::string> gen_lines(Language lang, size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(gen_line(lang, rng));
    return out;
}

std::vector<LinePair> gen_pairs(Language lang, size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<LinePair> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        LinePair p = gen_pair(lang, rng);
        if (linefix::strip_ws(p.buggy) == linefix::strip_ws(p.fixed)) {
            --i;  // rare template collision; draw again
            continue;
        }
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

void git(const std::string& dir, const std::vector<std::string>& args) {
    std::vector<std::string> argv = {"git",
                                     "-C",
                                     dir,
                                     "-c",
                                     "user.name=fixture",
                                     "-c",
                                     "user.email=fixture@example.com",
                                     "-c",
                                     "commit.gpgsign=false"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto res = linefix::run_process(argv);
    if (!res.ok())
        throw std::runtime_error("git " + args[0] + " failed: " + res.err);
}

const char* extension(Language lang) {
    switch (lang) {
        case Language::java: return ".java";
        case Language::python: return ".py";
        case Language::cpp: return ".cpp";
        case Language::javascript: return ".js";
    }
    return ".txt";
}

}  // namespace

size_t build_fixture_repo(const std::string& dir, Language lang,
                          size_t pairs_per_commit, size_t commits,
                          uint64_t seed) {
    Rng rng(seed);
    fs::create_directories(dir);
    {
        auto res = linefix::run_process({"git", "init", "-q", dir});
        if (!res.ok()) throw std::runtime_error("git init failed: " + res.err);
    }

    const size_t n_pairs = pairs_per_commit * commits;
    auto pairs = gen_pairs(lang, n_pairs, seed ^ 0x5041495253ull);

    // Layout: one file per planted pair plus filler lines around it.
    struct Planted {
        std::string file;
        size_t line_index;  // 0-based within file
    };
    std::vector<Planted> planted(n_pairs);
    for (size_t p = 0; p < n_pairs; ++p) {
        char name[32];
        std::snprintf(name, sizeof(name), "src_%04zu%s", p, extension(lang));
        planted[p].file = name;
        size_t filler = 3 + static_cast<size_t>(rng.uniform_int(0, 4));
        planted[p].line_index = static_cast<size_t>(
            rng.uniform_int(1, static_cast<int64_t>(filler) - 1));
        std::ofstream out(fs::path(dir) / name);
        for (size_t l = 0; l < filler; ++l) {
            if (l == planted[p].line_index)
                out << pairs[p].buggy << '\n';
            else
                out << gen_line(lang, rng) << '\n';
        }
    }
    git(dir, {"add", "-A"});
    git(dir, {"commit", "-q", "-m", "initial import"});

    const char* messages[] = {
        "fix off by one in loop bound",
        "bug: correct comparison operator",
        "patch overflow in counter",
        "Fix NPE when input is empty",
        "bugfix for wrong literal",
    };
    size_t p = 0;
    for (size_t c = 0; c < commits; ++c) {
        for (size_t k = 0; k < pairs_per_commit; ++k, ++p) {
            fs::path f = fs::path(dir) / planted[p].file;
            std::ifstream in(f);
            std::vector<std::string> lines;
            std::string line;
            while (std::getline(in, line)) lines.push_back(line);
            in.close();
            lines[planted[p].line_index] = pairs[p].fixed;
            std::ofstream out(f);
            for (const auto& l : lines) out << l << '\n';
        }
        git(dir, {"add", "-A"});
        git(dir, {"commit", "-q", "-m",
                  messages[c % (sizeof(messages) / sizeof(messages[0]))]});
    }

    // Noise the miner must ignore: an anti-pattern commit and a multi-line one.
    {
        std::ofstream out(fs::path(dir) / ("noise" + std::string(extension(lang))));
        out << gen_line(lang, rng) << '\n' << gen_line(lang, rng) << '\n';
    }
    git(dir, {"add", "-A"});
    git(dir, {"commit", "-q", "-m", "refactor: tidy up noise module"});
    {
        fs::path f = fs::path(dir) / ("noise" + std::string(extension(lang)));
        std::ofstream out(f);
        out << gen_line(lang, rng) << '\n'
            << gen_line(lang, rng) << '\n'
            << gen_line(lang, rng) << '\n';
    }
    git(dir, {"add", "-A"});
    git(dir, {"commit", "-q", "-m", "fix noise generation"});  // multi-line change

    return n_pairs;
}

}  // namespace testsupport
