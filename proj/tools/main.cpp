// SPDX-License-Identifier: Apache-2.0
//
// linefix: mine bug-fix pairs, train the translation ensemble, and
// generate+validate candidate patches for a localized buggy line.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "cli_helpers.hpp"
#include "linefix/beam.hpp"
#include "linefix/checkpoint.hpp"
#include "linefix/common.hpp"
#include "linefix/ensemble.hpp"
#include "linefix/miner.hpp"
#include "linefix/patch.hpp"
#include "linefix/train.hpp"

namespace fs = std::filesystem;
using namespace linefix;

namespace {

constexpr const char* kToolVersion = "0.1.0";

Language parse_language(const std::string& name) {
    auto lang = language_from_string(name);
    if (!lang) throw CLI::ValidationError("--language", "unknown language " + name);
    return *lang;
}

std::unordered_set<std::string> load_exclude_fixes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open exclude-fixes file: " + path);
    std::unordered_set<std::string> keys;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            keys.insert(strip_ws(line));
        else
            keys.insert(benchmark_pair_key(line.substr(0, tab),
                                           line.substr(tab + 1)));
    }
    return keys;
}

// ----------------------------------------------------------------- mine

struct MineArgs {
    std::string repos, language = "java", out, exclude_fixes;
    int workers = 1;
    bool no_length_filter = false;
};

int run_mine(const MineArgs& args) {
    auto lang = parse_language(args.language);
    auto pairs = mine_repositories(args.repos, lang, args.workers);
    log_info("mined " + std::to_string(pairs.size()) + " raw pairs");
    if (!args.no_length_filter) pairs = length_filter(pairs);
    if (!args.exclude_fixes.empty())
        pairs = dedup_against_benchmark(pairs, load_exclude_fixes(args.exclude_fixes));
    write_pairs_jsonl(args.out, pairs);
    std::cout << "wrote " << pairs.size() << " pairs to " << args.out << "\n";
    return 0;
}

// ------------------------------------------------------------- tokenize

struct TokenizeArgs {
    std::string language = "java";
    bool abstract_literals = false;
    std::string table_out;
};

int run_tokenize(const TokenizeArgs& args) {
    auto lang = parse_language(args.language);
    const auto& profile = profile_for(lang);
    std::ofstream table;
    if (!args.table_out.empty()) {
        table.open(args.table_out);
        if (!table)
            throw std::runtime_error("cannot open table file: " + args.table_out);
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        auto stripped = strip_comments(line, profile);
        if (!stripped) {
            log_warn("line needs multi-line comment context; tokenizing as-is");
            stripped = line;
        }
        auto seq = tokenize(*stripped, profile, args.abstract_literals);
        for (size_t i = 0; i < seq.tokens.size(); ++i) {
            if (i) std::cout << ' ';
            std::cout << seq.tokens[i];
        }
        std::cout << '\n';
        if (table.is_open()) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& e : seq.abstraction_table)
                j.push_back({{"kind", e.kind == AbstractionKind::string_literal
                                          ? "STRING"
                                          : "NUMBER"},
                             {"literal", e.literal}});
            table << j.dump() << '\n';
        }
    }
    return 0;
}

// ----------------------------------------------------------- build-vocab

struct VocabArgs {
    std::string data, out, side = "src";
    uint64_t min_count = 2;
    size_t max_size = 70000;
};

int run_build_vocab(const VocabArgs& args) {
    auto pairs = read_pairs_jsonl(args.data);
    auto corpus = cli::tokenize_corpus(pairs);
    std::vector<std::vector<std::string>> stream;
    if (args.side == "src") stream = corpus.src;
    else if (args.side == "trg") stream = corpus.trg;
    else if (args.side == "shared") {
        stream = corpus.src;
        stream.insert(stream.end(), corpus.trg.begin(), corpus.trg.end());
    } else {
        throw CLI::ValidationError("--side", "must be src, trg or shared");
    }
    auto vocab = Vocabulary::build(stream, args.min_count, args.max_size);
    vocab.save(args.out);
    std::cout << "vocabulary of " << vocab.size() << " tokens -> " << args.out
              << " (fingerprint " << vocab.fingerprint() << ")\n";
    return 0;
}

// ------------------------------------------------------------------ tune

struct TuneArgs {
    std::string data, out = "tuning_report.jsonl";
    std::string src_vocab, trg_vocab, keep_weights, ranges = "paper";
    size_t budget = 10;
    int workers = 1;
    uint64_t seed = 1;
    size_t batch_size = 32;
    size_t max_positions = 128;
    size_t val_count = 0;  // 0: automatic
    uint64_t min_count = 2;
    size_t max_vocab = 70000;
};

struct LoadedData {
    Vocabulary src_vocab, trg_vocab;
    std::vector<EncodedPair> train, val;
};

LoadedData load_and_split(const std::string& data_path,
                          const std::string& src_vocab_path,
                          const std::string& trg_vocab_path, uint64_t min_count,
                          size_t max_vocab, size_t max_positions,
                          size_t val_count, uint64_t seed,
                          const std::string& autosave_prefix) {
    LoadedData out;
    auto pairs = read_pairs_jsonl(data_path);
    if (pairs.empty()) throw std::runtime_error("no pairs in " + data_path);
    auto corpus = cli::tokenize_corpus(pairs);
    if (!src_vocab_path.empty()) {
        out.src_vocab = Vocabulary::load(src_vocab_path);
        out.trg_vocab = Vocabulary::load(trg_vocab_path);
    } else {
        out.src_vocab = Vocabulary::build(corpus.src, min_count, max_vocab);
        out.trg_vocab = Vocabulary::build(corpus.trg, min_count, max_vocab);
        if (!autosave_prefix.empty()) {
            out.src_vocab.save(autosave_prefix + ".src.vocab");
            out.trg_vocab.save(autosave_prefix + ".trg.vocab");
        }
    }
    auto encoded =
        cli::encode_corpus(corpus, out.src_vocab, out.trg_vocab, max_positions);
    if (val_count == 0) val_count = cli::default_val_count(encoded.size());
    cli::split_train_val(encoded, val_count, seed, &out.train, &out.val);
    return out;
}

int run_tune(const TuneArgs& args) {
    auto data = load_and_split(args.data, args.src_vocab, args.trg_vocab,
                               args.min_count, args.max_vocab,
                               args.max_positions, args.val_count, args.seed,
                               args.out);
    TuneOptions opts;
    opts.budget = args.budget;
    opts.workers = args.workers;
    opts.master_seed = args.seed;
    if (args.ranges == "desk") opts.ranges = HyperRanges::desk();
    else if (args.ranges == "paper") opts.ranges = HyperRanges::paper_defaults();
    else throw CLI::ValidationError("--ranges", "must be paper or desk");
    opts.batch_size = args.batch_size;
    opts.max_positions = args.max_positions;
    opts.keep_weights_dir = args.keep_weights;
    opts.src_fingerprint = data.src_vocab.fingerprint();
    opts.trg_fingerprint = data.trg_vocab.fingerprint();
    opts.src_vocab_size = data.src_vocab.size();
    opts.trg_vocab_size = data.trg_vocab.size();

    auto trials = tune(data.train, data.val, opts);
    std::ofstream report(args.out, std::ios::binary);
    if (!report) throw std::runtime_error("cannot open report: " + args.out);
    for (const auto& t : trials) report << trial_to_json_line(t) << '\n';
    report.close();
    for (const auto& t : trials)
        std::fprintf(stderr, "trial %zu: ppl=%g wall=%.1fs %s\n", t.index,
                     t.val_perplexity, t.wall_seconds, t.ok ? "ok" : "diverged");
    std::cout << "tuning report -> " << args.out << "\n";
    return 0;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out;
    std::string src_vocab, trg_vocab, resume_tuned;
    size_t batch_size = 32;
    size_t max_epochs = 200;
    size_t patience = 3;
    size_t max_positions = 128;
    size_t val_count = 0;
    uint64_t seed = 1;
    uint64_t min_count = 2;
    size_t max_vocab = 70000;
};

HyperParams hyper_from_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    // accept either a bare HyperParams object or a tuning-report line
    if (j.contains("hyper")) return HyperParams::from_json(j.at("hyper"));
    return HyperParams::from_json(j);
}

int run_train(const TrainArgs& args) {
    auto hyper = hyper_from_config_file(args.config);
    auto data = load_and_split(args.data, args.src_vocab, args.trg_vocab,
                               args.min_count, args.max_vocab,
                               args.max_positions, args.val_count, args.seed,
                               args.out);
    ConvergenceOptions opts;
    opts.batch_size = args.batch_size;
    opts.max_epochs = args.max_epochs;
    opts.patience = args.patience;
    opts.max_positions = args.max_positions;

    std::optional<Checkpoint> resume;
    if (!args.resume_tuned.empty()) resume = load_checkpoint(args.resume_tuned);

    auto trained = train_until_convergence(
        hyper, data.train, data.val, opts, data.src_vocab.fingerprint(),
        data.trg_vocab.fingerprint(), data.src_vocab.size(),
        data.trg_vocab.size(), resume ? &*resume : nullptr);
    if (!trained) {
        std::cerr << "training diverged; no checkpoint written\n";
        return 1;
    }
    save_checkpoint(args.out, trained->checkpoint);
    std::cout << "checkpoint -> " << args.out << " (val ppl "
              << trained->best_val_perplexity << " after " << trained->epochs
              << " epochs)\n";
    return 0;
}

// ---------------------------------------------------------------- repair

struct RepairArgs {
    std::string project, file, models, oracle, out = "report.json";
    std::string reference_fix, language;
    int line = 0;
    size_t beam_width = 1000;
    size_t max_len = 100;
    size_t stop_after = 10;
};

nlohmann::json patch_to_json(const CandidatePatch& p) {
    nlohmann::json j;
    j["statement"] = p.statement;
    j["score"] = p.score;
    j["model_ids"] = p.model_ids;
    j["verdict"] = to_string(p.verdict);
    j["timed_out"] = p.timed_out;
    j["exact_match"] = p.exact_match;
    return j;
}

Language language_for_bug(const std::string& explicit_lang,
                          const std::string& file) {
    if (!explicit_lang.empty()) return parse_language(explicit_lang);
    auto lang = language_from_extension(file);
    if (!lang)
        throw std::runtime_error(
            "cannot infer language from extension; pass --language");
    return *lang;
}

int run_repair(const RepairArgs& args) {
    auto lang = language_for_bug(args.language, args.file);
    auto bug = BugInstance::load(args.project, args.file, args.line, lang);
    auto models = RepairModels::load(args.models);
    auto oracle = TestOracle::from_json_file(args.oracle);

    std::optional<std::string> reference;
    if (!args.reference_fix.empty()) {
        std::ifstream in(args.reference_fix);
        if (!in)
            throw std::runtime_error("cannot open reference fix: " +
                                     args.reference_fix);
        std::string line;
        std::getline(in, line);
        reference = line;
    }

    BeamOptions beam;
    beam.beam_width = args.beam_width;
    beam.max_len = args.max_len;
    auto report = repair(bug, models, beam, oracle, args.stop_after, reference);

    nlohmann::json j;
    j["project"] = args.project;
    j["file"] = args.file;
    j["line"] = args.line;
    j["language"] = to_string(lang);
    j["buggy_line"] = bug.buggy_line;
    j["beam_width"] = args.beam_width;
    j["candidates_generated"] = report.candidates_generated;
    j["audits"] = nlohmann::json::array();
    for (const auto& a : report.audits) {
        auto entry = patch_to_json(a.patch);
        entry["validate_seconds"] = a.test_seconds;
        j["audits"].push_back(entry);
    }
    j["plausible"] = nlohmann::json::array();
    for (const auto& p : report.plausible) j["plausible"].push_back(patch_to_json(p));

    std::ofstream out(args.out, std::ios::binary);
    out << j.dump(2) << '\n';
    std::cout << report.plausible.size() << " plausible patch(es); report -> "
              << args.out << "\n";
    return 0;  // an empty result is not a failure
}

// --------------------------------------------------------------- validate

struct ValidateArgs {
    std::string project, file, oracle, statement, patch_file, language;
    int line = 0;
};

int run_validate(const ValidateArgs& args) {
    auto lang = language_for_bug(args.language, args.file);
    auto bug = BugInstance::load(args.project, args.file, args.line, lang);
    auto oracle = TestOracle::from_json_file(args.oracle);
    std::string statement = args.statement;
    if (!args.patch_file.empty()) {
        std::ifstream in(args.patch_file);
        if (!in)
            throw std::runtime_error("cannot open patch file: " + args.patch_file);
        std::getline(in, statement);
    }
    if (statement.empty())
        throw CLI::ValidationError("--statement", "empty patch statement");

    auto scratch = fs::temp_directory_path() / "linefix_validate_cli";
    auto baseline = compute_baseline(bug, oracle, scratch / "base");
    CandidatePatch patch;
    patch.statement = statement;
    validate_patch(bug, patch, oracle, baseline, scratch / "work");
    fs::remove_all(scratch);

    nlohmann::json j = patch_to_json(patch);
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
    std::string models, out_dir = ".", input, project, file, language;
    int line = 0;
    size_t beam_width = 8;
    size_t max_len = 100;
    size_t patch_index = 0;
};

int run_explain(const ExplainArgs& args) {
    auto models = RepairModels::load(args.models);
    std::string buggy_line = args.input;
    Language lang = Language::java;
    if (buggy_line.empty()) {
        lang = language_for_bug(args.language, args.file);
        auto bug = BugInstance::load(args.project, args.file, args.line, lang);
        buggy_line = bug.buggy_line;
    } else if (!args.language.empty()) {
        lang = parse_language(args.language);
    }
    const auto& profile = profile_for(lang);
    auto stripped = strip_comments(buggy_line, profile);
    if (!stripped) throw std::runtime_error("line needs multi-line comment context");
    auto seq = tokenize(*stripped, profile, true);
    if (seq.tokens.empty()) throw std::runtime_error("no tokens in input line");
    auto src = models.src_vocab.encode(seq.tokens);

    BeamOptions beam;
    beam.beam_width = args.beam_width;
    beam.max_len = args.max_len;
    std::vector<std::vector<BeamResult>> per_model;
    for (const auto& net : models.nets) per_model.push_back(beam_decode(net, src, beam));
    auto ranked = merge_rank(per_model);
    if (ranked.empty()) throw std::runtime_error("decoder produced no sequences");
    if (args.patch_index >= ranked.size())
        throw std::runtime_error("patch index out of range (have " +
                                 std::to_string(ranked.size()) + ")");
    const auto& patch = ranked[args.patch_index];
    const auto& net = models.nets[patch.best_model];

    auto maps = attention_maps(net, src, patch.tokens);
    auto out_tokens = models.trg_vocab.decode(patch.tokens);
    fs::create_directories(args.out_dir);
    for (size_t l = 0; l < maps.size(); ++l) {
        auto path = fs::path(args.out_dir) /
                    ("attention_layer" + std::to_string(l) + ".csv");
        cli::write_attention_csv(path.string(), maps[l], seq.tokens, out_tokens);
        std::cout << "layer " << l << " map -> " << path.string() << "\n";
    }
    nlohmann::json j;
    j["input_tokens"] = seq.tokens;
    j["output_tokens"] = out_tokens;
    j["nll"] = patch.nll;
    j["model"] = models.names[patch.best_model];
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --------------------------------------------------------------- selftest

int run_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
        if (!ok) ++failures;
    };

    {  // tokenizer round trip on representative lines
        const char* samples[] = {
            "int sum=0;",
            "if (fooBar.getValue() != null) { return x_1 + 0x2F; }",
            "s = \"quoted text\" + suffixCount;",
            "def get_value(input_list, limit): return input_list[:limit]",
        };
        bool ok = true;
        for (const char* s : samples)
            for (Language lang : {Language::java, Language::python, Language::cpp,
                                  Language::javascript}) {
                auto seq = tokenize(s, profile_for(lang));
                if (strip_ws(detokenize(seq)) != strip_ws(s)) ok = false;
            }
        report("tokenizer_round_trip", ok);
    }
    {  // gradient check on a tiny double-precision network
        HyperParams hp;
        hp.src_embed_dim = 4;
        hp.trg_embed_dim = 4;
        hp.out_embed_dim = 3;
        hp.encoder_layers = {{5, 3}};
        hp.decoder_layers = {{5, 2}};
        hp.dropout = 0.0;
        hp.clip_norm = 1.0;
        hp.learning_rate = 0.1;
        hp.momentum = 0.0;
        hp.seed = 7;
        bool ok = true;
        for (Criterion crit : {Criterion::default_ce, Criterion::smoothed}) {
            Network<double> net(hp, 6, 6, 8);
            EncodedPair ex{{1, 2, 3}, {4, 5}};
            auto res = finite_difference_check(net, ex, crit);
            if (res.max_rel_err >= 1e-3) ok = false;
        }
        report("gradient_check", ok);
    }
    {  // uniform-model perplexity arithmetic
        HyperParams hp = HyperParams::tiny(3);
        Network<float> net(hp, 8, 8, 8);
        for (auto& [name, p] : net.params()) p->val.zero();
        std::vector<EncodedPair> data{{{7, 7}, {7}}};
        double ppl = perplexity(net, data);
        report("uniform_perplexity", std::abs(ppl - 8.0) < 1e-9);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate-and-validate line repair toolkit"};
    app.set_config("--config", "", "configuration file (flags take precedence)");
    app.allow_config_extras(false);
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "print tool and format versions");
    int verbosity = 1;
    app.add_flag_function(
        "-v,--verbose", [&](int64_t) { log_level() = LogLevel::info; },
        "verbose logging");
    (void)verbosity;

    MineArgs mine_args;
    auto* mine_cmd = app.add_subcommand("mine", "extract bug-fix pairs from git repos");
    mine_cmd->add_option("--repos", mine_args.repos, "directory of git repositories")
        ->required();
    mine_cmd->add_option("--language", mine_args.language,
                         "java|python|cpp|javascript");
    mine_cmd->add_option("--out", mine_args.out, "output JSONL")->required();
    mine_cmd->add_option("--exclude-fixes", mine_args.exclude_fixes,
                         "benchmark fixes to exclude (line or buggy\\tfixed)");
    mine_cmd->add_option("--workers", mine_args.workers, "parallel repositories");
    mine_cmd->add_flag("--no-length-filter", mine_args.no_length_filter,
                       "skip the mean+2sd length filter");

    TokenizeArgs tok_args;
    auto* tok_cmd = app.add_subcommand("tokenize", "tokenize stdin lines to stdout");
    tok_cmd->add_option("--language", tok_args.language, "language profile");
    tok_cmd->add_flag("--abstract", tok_args.abstract_literals,
                      "abstract strings and numbers");
    tok_cmd->add_option("--table-out", tok_args.table_out,
                        "sidecar JSONL for abstraction tables");

    VocabArgs vocab_args;
    auto* vocab_cmd = app.add_subcommand("build-vocab", "build a vocabulary file");
    vocab_cmd->add_option("--data", vocab_args.data, "pairs JSONL")->required();
    vocab_cmd->add_option("--out", vocab_args.out, "vocabulary file")->required();
    vocab_cmd->add_option("--side", vocab_args.side, "src|trg|shared");
    vocab_cmd->add_option("--min-count", vocab_args.min_count, "frequency cutoff");
    vocab_cmd->add_option("--max-size", vocab_args.max_size, "vocabulary cap");

    TuneArgs tune_args;
    auto* tune_cmd =
        app.add_subcommand("tune", "random hyper-parameter search (1 epoch each)");
    tune_cmd->add_option("--data", tune_args.data, "pairs JSONL")->required();
    tune_cmd->add_option("--budget", tune_args.budget, "number of trials");
    tune_cmd->add_option("--workers", tune_args.workers, "parallel trials");
    tune_cmd->add_option("--seed", tune_args.seed, "master seed");
    tune_cmd->add_option("--out", tune_args.out, "report JSONL");
    tune_cmd->add_option("--src-vocab", tune_args.src_vocab, "vocabulary file");
    tune_cmd->add_option("--trg-vocab", tune_args.trg_vocab, "vocabulary file");
    tune_cmd->add_option("--keep-weights", tune_args.keep_weights,
                         "directory for per-trial checkpoints");
    tune_cmd->add_option("--ranges", tune_args.ranges,
                         "sampling bounds: paper|desk");
    tune_cmd->add_option("--batch-size", tune_args.batch_size, "batch size");
    tune_cmd->add_option("--max-positions", tune_args.max_positions,
                         "positional embedding capacity");
    tune_cmd->add_option("--val-count", tune_args.val_count,
                         "validation sample size (default min(2000, 10%))");

    TrainArgs train_args;
    auto* train_cmd =
        app.add_subcommand("train", "train one configuration to convergence");
    train_cmd->add_option("--config", train_args.config,
                          "hyper-parameter JSON (tuning-report line works)")
        ->required();
    train_cmd->add_option("--data", train_args.data, "pairs JSONL")->required();
    train_cmd->add_option("--out", train_args.out, "checkpoint path")->required();
    train_cmd->add_option("--src-vocab", train_args.src_vocab, "vocabulary file");
    train_cmd->add_option("--trg-vocab", train_args.trg_vocab, "vocabulary file");
    train_cmd->add_option("--resume-tuned", train_args.resume_tuned,
                          "resume from a 1-epoch tuning checkpoint");
    train_cmd->add_option("--batch-size", train_args.batch_size, "batch size");
    train_cmd->add_option("--epochs", train_args.max_epochs, "epoch cap");
    train_cmd->add_option("--patience", train_args.patience,
                          "epochs without improvement before stopping");
    train_cmd->add_option("--max-positions", train_args.max_positions,
                          "positional embedding capacity");
    train_cmd->add_option("--val-count", train_args.val_count,
                          "validation sample size");
    train_cmd->add_option("--seed", train_args.seed, "split seed");

    RepairArgs repair_args;
    auto* repair_cmd =
        app.add_subcommand("repair", "generate and validate patches for one bug");
    repair_cmd->add_option("--project", repair_args.project, "project root")
        ->required();
    repair_cmd->add_option("--file", repair_args.file, "buggy file (relative)")
        ->required();
    repair_cmd->add_option("--line", repair_args.line, "1-based buggy line")
        ->required();
    repair_cmd->add_option("--models", repair_args.models, "models directory")
        ->required();
    repair_cmd->add_option("--oracle", repair_args.oracle, "oracle.json")
        ->required();
    repair_cmd->add_option("--beam-width", repair_args.beam_width, "beam width");
    repair_cmd->add_option("--max-len", repair_args.max_len, "max generated tokens");
    repair_cmd->add_option("--stop-after", repair_args.stop_after,
                           "stop after this many plausible patches");
    repair_cmd->add_option("--reference-fix", repair_args.reference_fix,
                           "file with the developer fix (exact-match flag)");
    repair_cmd->add_option("--language", repair_args.language,
                           "override language detection");
    repair_cmd->add_option("--out", repair_args.out, "report JSON");

    ValidateArgs validate_args;
    auto* validate_cmd =
        app.add_subcommand("validate", "validate one patch statement");
    validate_cmd->add_option("--project", validate_args.project, "project root")
        ->required();
    validate_cmd->add_option("--file", validate_args.file, "buggy file")
        ->required();
    validate_cmd->add_option("--line", validate_args.line, "1-based line")
        ->required();
    validate_cmd->add_option("--oracle", validate_args.oracle, "oracle.json")
        ->required();
    validate_cmd->add_option("--statement", validate_args.statement,
                             "patch statement text");
    validate_cmd->add_option("--patch-file", validate_args.patch_file,
                             "file with the patch statement");
    validate_cmd->add_option("--language", validate_args.language,
                             "override language detection");

    ExplainArgs explain_args;
    auto* explain_cmd =
        app.add_subcommand("explain", "export attention maps for a patch");
    explain_cmd->add_option("--models", explain_args.models, "models directory")
        ->required();
    explain_cmd->add_option("--input", explain_args.input, "buggy line text");
    explain_cmd->add_option("--project", explain_args.project, "project root");
    explain_cmd->add_option("--file", explain_args.file, "buggy file");
    explain_cmd->add_option("--line", explain_args.line, "1-based line");
    explain_cmd->add_option("--language", explain_args.language, "language");
    explain_cmd->add_option("--beam-width", explain_args.beam_width, "beam width");
    explain_cmd->add_option("--max-len", explain_args.max_len, "max tokens");
    explain_cmd->add_option("--patch-index", explain_args.patch_index,
                            "which ranked patch to explain");
    explain_cmd->add_option("--out-dir", explain_args.out_dir, "CSV directory");

    auto* selftest_cmd = app.add_subcommand(
        "selftest", "built-in verification: gradients + tokenizer round trip");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    if (show_version) {
        std::cout << "linefix " << kToolVersion << " (checkpoint format "
                  << kCheckpointFormatVersion << ")\n";
        return 0;
    }

    try {
        if (*mine_cmd) return run_mine(mine_args);
        if (*tok_cmd) return run_tokenize(tok_args);
        if (*vocab_cmd) return run_build_vocab(vocab_args);
        if (*tune_cmd) return run_tune(tune_args);
        if (*train_cmd) return run_train(train_args);
        if (*repair_cmd) return run_repair(repair_args);
        if (*validate_cmd) return run_validate(validate_args);
        if (*explain_cmd) return run_explain(explain_args);
        if (*selftest_cmd) return run_selftest();
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::cerr << app.help() << "\n";
    return 2;
}
