#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pptkit/analysis.hpp"
#include "pptkit/corpusio.hpp"
#include "pptkit/corrupt.hpp"
#include "pptkit/formalgen.hpp"
#include "pptkit/metamer.hpp"
#include "pptkit/partition.hpp"
#include "pptkit/probe.hpp"
#include "pptkit/rnngen.hpp"

namespace pptkit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint32_t kRawSequenceLength = 2048;

/// Writes a JSON report to `path`, or to `out` when path is empty.
void emit_json(const json& report, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << report.dump(2) << '\n';
        return;
    }
    std::ofstream file(path);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << report.dump(2) << '\n';
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::uint32_t checked_u32(std::uint64_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw DomainError(std::string(what) + " too large");
    return static_cast<std::uint32_t>(v);
}

// --- resolved-config echo ---------------------------------------------------

bool is_flag(const CLI::Option* opt) { return opt->get_expected_max() == 0; }

std::string option_key(const CLI::Option* opt) {
    std::string name = opt->get_name(false, true);
    const auto comma = name.find(',');
    if (comma != std::string::npos) name = name.substr(0, comma);
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    return name;
}

/// Every option of the chosen command, defaults included, as `key = value` lines.
std::string resolved_config(const CLI::App& app, const CLI::App& command) {
    std::ostringstream doc;
    doc << "# pptkit resolved configuration\n";
    doc << "command = " << command.get_name() << '\n';
    auto dump = [&doc](const CLI::App& scope) {
        for (const CLI::Option* opt : scope.get_options()) {
            if (opt == scope.get_help_ptr() || opt == scope.get_help_all_ptr()) continue;
            const std::string key = option_key(opt);
            if (key.empty() || key == "config") continue;
            if (is_flag(opt)) {
                doc << key << " = " << (opt->count() > 0 ? "true" : "false") << '\n';
            } else if (opt->count() > 0) {
                for (const auto& v : opt->results()) doc << key << " = " << v << '\n';
            } else {
                doc << key << " = " << opt->get_default_str() << '\n';
            }
        }
    };
    dump(app);
    dump(command);
    return doc.str();
}

void write_config_echo(const std::string& text, const std::string& primary_output) {
    if (primary_output.empty()) return;
    std::ofstream file(primary_output + ".config");
    if (!file) throw IoError("cannot write config echo next to '" + primary_output + "'");
    file << text;
}

/// Turns a resolved-config document (plus `--key value` overrides) back into
/// an argument vector.
std::vector<std::string> args_from_config(const std::string& program, const fs::path& path,
                                          const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::string command;
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw FormatError("config line without ' = ': " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 3);
        if (key == "command") {
            command = value;
        } else {
            entries.emplace_back(std::move(key), std::move(value));
        }
    }
    if (command.empty()) throw FormatError("config file names no command");

    std::map<std::string, std::vector<std::string>> replaced;
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        const std::string& flag = overrides[i];
        if (flag.rfind("--", 0) != 0 || i + 1 >= overrides.size()) {
            throw CLI::ValidationError("config overrides must be '--key value' pairs");
        }
        replaced[flag.substr(2)].push_back(overrides[++i]);
    }

    std::vector<std::string> global{program};
    std::vector<std::string> local{command};
    for (const auto& [key, value] : entries) {
        if (replaced.contains(key)) continue;
        auto& target = key == "threads" ? global : local;
        if (value == "true") {
            target.push_back("--" + key);
        } else if (value == "false" || value.empty()) {
            continue;
        } else {
            target.push_back("--" + key);
            target.push_back(value);
        }
    }
    for (const auto& [key, values] : replaced) {
        for (const auto& v : values) {
            auto& target = key == "threads" ? global : local;
            target.push_back("--" + key);
            target.push_back(v);
        }
    }
    global.insert(global.end(), local.begin(), local.end());
    return global;
}

// --- commands ---------------------------------------------------------------

struct Command {
    CLI::App* app = nullptr;
    std::function<std::string()> primary_output;
    std::function<void(std::ostream&)> execute;
};

void require_raw_length(std::uint64_t len, bool allow_short) {
    if (len != kRawSequenceLength && !allow_short) {
        throw DomainError("raw sequences are generated at length " + std::to_string(kRawSequenceLength) +
                          "; pass --allow-short to use length " + std::to_string(len));
    }
}

struct Options {
    unsigned threads = 0;

    // gen-rnn
    EnsembleSpec ensemble;
    // gen-dyck
    DyckSpec dyck;
    // shared generation knobs
    std::uint64_t seqs = 0;
    std::uint64_t len = kRawSequenceLength;
    bool allow_short = false;
    std::uint32_t vocab = 50304;
    std::uint64_t seed = 0;
    std::string out;
    std::string generator_log;

    // corrupt
    std::string in;
    std::string mask_out;
    std::string protocol = "sample_level";
    CorruptionSpec corruption;

    // metamer
    int order = 3;
    std::uint64_t subset = 0;
    std::string model;
    std::uint64_t tokens = 0;

    // probe
    std::string dump;
    std::string manifest;
    bool per_sequence = false;
    std::vector<std::string> dumps_a;
    std::vector<std::string> dumps_b;
    std::size_t top_k = kDefaultTopK;

    // partition
    std::string scores;
    double low = kDefaultLowPercentile;
    double high = kDefaultHighPercentile;
    std::uint64_t budget = 0;
    std::string clean_out;
    std::string noisy_out;

    // savings / final-gap
    std::string candidate;
    std::string baseline;
    std::uint64_t ppt_steps = 0;
    bool include_ppt = false;
    std::vector<std::string> curves;
    std::string export_table;
};

QueryAveraging averaging(const Options& o) {
    return o.per_sequence ? QueryAveraging::per_sequence : QueryAveraging::pooled;
}

json corpus_summary(const Corpus& c) {
    return {{"records", c.size()}, {"record_length", c.record_length()}, {"vocab", c.vocab().size}};
}

void add_generation_output(CLI::App* app, Options& o) {
    app->add_option("--seqs", o.seqs, "Number of sequences")->required();
    app->add_option("--len", o.len, "Sequence length");
    app->add_option("--seed", o.seed, "Master seed");
    app->add_option("--out", o.out, "Output corpus path")->required();
}

std::vector<Command> register_commands(CLI::App& app, Options& o) {
    std::vector<Command> commands;

    {
        auto* c = app.add_subcommand("gen-rnn", "Sample a corpus from the frozen RNN ensemble");
        c->add_option("--generators", o.ensemble.generators, "Ensemble size M");
        c->add_option("--hidden", o.ensemble.hidden, "Hidden size H");
        c->add_option("--vocab", o.ensemble.vocab, "Vocabulary size V");
        c->add_option("--temperature", o.ensemble.temperature, "Sampling temperature tau");
        c->add_option("--spectral-radius", o.ensemble.spectral_target, "Target spectral radius of W");
        add_generation_output(c, o);
        c->add_flag("--allow-short", o.allow_short, "Permit lengths other than 2048");
        c->add_option("--generator-log", o.generator_log, "JSON sidecar with the generator index per sequence");
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            require_raw_length(o.len, o.allow_short);
            EnsembleSpec spec = o.ensemble;
            spec.master_seed = o.seed;
            const auto result = generate_corpus<double>(spec, o.seqs, o.len, o.threads);
            save_corpus(result.corpus, o.out);
            if (!o.generator_log.empty()) emit_json({{"generator_of", result.generator_of}}, o.generator_log, out);
            out << json{{"corpus", o.out}, {"summary", corpus_summary(result.corpus)}}.dump() << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("gen-dyck", "Sample a k-shuffle Dyck corpus");
        c->add_option("--k", o.dyck.k, "Interleaved bracket channels");
        c->add_option("--max-depth", o.dyck.max_depth, "Per-channel nesting cap");
        c->add_option("--close-bias", o.dyck.close_bias, "Close probability when both moves are legal");
        c->add_option("--tail-window", o.dyck.tail_window, "Trailing close-only window (0 = off)");
        c->add_option("--vocab", o.vocab, "Vocabulary size");
        add_generation_output(c, o);
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            DyckSpec spec = o.dyck;
            spec.seed = o.seed;
            const Corpus corpus = generate_dyck_corpus(spec, VocabSpec{o.vocab}, o.seqs, o.len, o.threads);
            save_corpus(corpus, o.out);
            out << json{{"corpus", o.out}, {"summary", corpus_summary(corpus)}}.dump() << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("gen-random", "Sample an i.i.d. uniform token corpus");
        c->add_option("--vocab", o.vocab, "Vocabulary size");
        add_generation_output(c, o);
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            const Corpus corpus = generate_random_corpus(VocabSpec{o.vocab}, o.seqs, o.len, o.seed, o.threads);
            save_corpus(corpus, o.out);
            out << json{{"corpus", o.out}, {"summary", corpus_summary(corpus)}}.dump() << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("corrupt", "Inject controlled noise and write the ground-truth mask");
        c->add_option("--in", o.in, "Input corpus")->required();
        c->add_option("--out", o.out, "Output corpus")->required();
        c->add_option("--mask-out", o.mask_out, "Mask path (default: <out>.mask)");
        c->add_option("--protocol", o.protocol, "sample_level | token_permutation | span_corruption | token_level");
        c->add_option("--rate", o.corruption.rate, "Target corruption rate p");
        c->add_option("--window-size", o.corruption.window_size, "Permutation window size");
        c->add_option("--span-min", o.corruption.span_min, "Shortest span");
        c->add_option("--span-max", o.corruption.span_max, "Longest span");
        c->add_option("--seed", o.seed, "Seed");
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            CorruptionSpec spec = o.corruption;
            spec.protocol = parse_protocol(o.protocol);
            spec.seed = o.seed;
            const Corpus input = load_corpus(o.in);
            const auto result = corrupt(input, spec, o.threads);
            const std::string mask_path = o.mask_out.empty() ? o.out + ".mask" : o.mask_out;
            save_corpus(result.corpus, o.out);
            save_mask(result.mask, mask_path);
            const double positions = static_cast<double>(input.token_count());
            out << json{{"corpus", o.out},
                        {"mask", mask_path},
                        {"protocol", to_string(spec.protocol)},
                        {"summary", corpus_summary(result.corpus)},
                        {"masked_positions", result.mask.covered_total()},
                        {"realized_rate", positions > 0 ? result.mask.covered_total() / positions : 0.0}}
                       .dump()
                << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("metamer-fit", "Fit an n-gram model for metamer sampling");
        c->add_option("--in", o.in, "Source corpus")->required();
        c->add_option("--order", o.order, "Model order (1, 2 or 3)");
        c->add_option("--subset", o.subset, "Fit on this many uniformly drawn records (0 = all)");
        c->add_option("--seed", o.seed, "Seed for the record subset");
        c->add_option("--out", o.out, "Model path")->required();
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            Corpus source = load_corpus(o.in);
            if (o.subset > 0) source = uniform_subset(source, o.subset, o.seed);
            const NgramModel model = fit_ngram(source, o.order, o.threads);
            save_ngram(model, o.out);
            std::ostringstream hash;
            hash << std::hex << ngram_content_hash(model);
            out << json{{"model", o.out},
                        {"order", model.order},
                        {"records", source.size()},
                        {"unigram_types", model.unigram.size()},
                        {"bigram_contexts", model.bigram.size()},
                        {"trigram_contexts", model.trigram.size()},
                        {"content_hash", hash.str()}}
                       .dump()
                << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("metamer-sample", "Sample a metamer corpus from a fitted model");
        c->add_option("--model", o.model, "Fitted model")->required();
        c->add_option("--tokens", o.tokens, "Total token budget")->required();
        c->add_option("--len", o.len, "Record length");
        c->add_option("--seed", o.seed, "Seed");
        c->add_option("--out", o.out, "Output corpus")->required();
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            if (o.len == 0 || o.tokens == 0 || o.tokens % o.len != 0) {
                throw DomainError("token budget " + std::to_string(o.tokens) + " is not a positive multiple of length " +
                                  std::to_string(o.len));
            }
            const NgramModel model = load_ngram(o.model);
            const auto result = sample_metamer(model, o.tokens / o.len, o.len, o.seed, o.threads);
            save_corpus(result.corpus, o.out);
            const auto& s = result.stats;
            out << json{{"corpus", o.out},
                        {"summary", corpus_summary(result.corpus)},
                        {"backoff",
                         {{"start", s.start},
                          {"trigram", s.trigram},
                          {"bigram", s.bigram},
                          {"unigram", s.unigram},
                          {"trigram_to_bigram", s.trigram_to_bigram},
                          {"bigram_to_unigram", s.bigram_to_unigram}}}}
                       .dump()
                << '\n';
        }});
    }
    {
        auto* c = app.add_subcommand("probe", "Per-head noise self-attention ratio of one dump or a checkpoint series");
        auto* dump = c->add_option("--dump", o.dump, "Attention dump");
        auto* manifest = c->add_option("--manifest", o.manifest, "Lines of 'step path' for a checkpoint series");
        dump->excludes(manifest);
        c->add_flag("--per-sequence", o.per_sequence, "Average per sequence before averaging sequences");
        c->add_option("--out", o.out, "JSON report path (default: stdout)");
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            if (o.dump.empty() == o.manifest.empty()) throw CLI::ValidationError("give exactly one of --dump, --manifest");
            json report;
            if (!o.dump.empty()) {
                const ProbeResult r = compute_r_noise(load_dump(o.dump), averaging(o), o.threads);
                report = {{"dump", o.dump},
                          {"noisy_queries", r.noisy_queries},
                          {"r_noise", matrix_json(r.r_noise)},
                          {"layer_mean", vector_json(r.layer_mean)}};
            } else {
                const auto entries = read_manifest(o.manifest);
                json points = json::array();
                for (const auto& p : probe_trajectory(entries, averaging(o), o.threads)) {
                    points.push_back({{"step", p.step}, {"layer_mean", vector_json(p.layer_mean)}});
                }
                report = {{"manifest", o.manifest}, {"trajectory", points}};
            }
            emit_json(report, o.out, out);
        }});
    }
    {
        auto* c = app.add_subcommand("probe-delta", "Contrast seed-paired dumps and rank the most negative heads");
        c->add_option("--a", o.dumps_a, "Dumps of the first arm, one per seed")->required();
        c->add_option("--b", o.dumps_b, "Dumps of the second arm, paired with --a")->required();
        c->add_option("--top-k", o.top_k, "Heads to rank");
        c->add_flag("--per-sequence", o.per_sequence, "Average per sequence before averaging sequences");
        c->add_option("--out", o.out, "JSON report path (default: stdout)");
        commands.push_back({c, [&o] { return o.out; }, [&o, &app](std::ostream& out) {
            std::vector<AttentionDump> a, b;
            for (const auto& p : o.dumps_a) a.push_back(load_dump(p));
            for (const auto& p : o.dumps_b) b.push_back(load_dump(p));
            const ProbeResult r = average_delta(a, b, averaging(o), o.threads);
            const HeadRanking ranking = rank_heads(r, o.top_k);
            if (ranking.clipped) {
                std::cerr << app.get_name() << ": warning: top-k " << o.top_k << " exceeds " << ranking.heads.size()
                          << " heads; returning all\n";
            }
            json ranked = json::array();
            for (const auto& h : ranking.heads) ranked.push_back({{"layer", h.layer}, {"head", h.head}, {"delta", h.delta}});
            emit_json({{"pairs", a.size()},
                       {"r_noise_a", matrix_json(r.r_noise)},
                       {"delta", matrix_json(*r.delta)},
                       {"layer_mean_delta", vector_json(r.delta->rowwise().mean())},
                       {"ranking", ranked},
                       {"clipped", ranking.clipped}},
                      o.out, out);
        }});
    }
    {
        auto* c = app.add_subcommand("partition", "Split scored documents at score percentiles");
        c->add_option("--scores", o.scores, "Lines of 'doc_id<TAB>token_count<TAB>score'")->required();
        c->add_option("--low", o.low, "Clean-set percentile");
        c->add_option("--high", o.high, "Noisy-set percentile");
        c->add_option("--budget", o.budget, "Token budget per subset (0 = keep whole subsets)");
        c->add_option("--clean-out", o.clean_out, "Clean id list")->required();
        c->add_option("--noisy-out", o.noisy_out, "Noisy id list")->required();
        c->add_option("--out", o.out, "JSON summary path (default: stdout)");
        commands.push_back({c, [&o] { return o.out.empty() ? o.clean_out : o.out; }, [&o](std::ostream& out) {
            const auto docs = load_scored_documents(o.scores);
            const Partition part = partition_by_percentile(docs, o.low, o.high);
            auto write_ids = [](const std::vector<ScoredDocument>& set, const std::string& path) {
                std::ofstream file(path);
                if (!file) throw IoError("cannot open '" + path + "' for writing");
                std::uint64_t tokens = 0;
                for (const auto& d : set) {
                    file << d.doc_id << '\n';
                    tokens += d.token_count;
                }
                return tokens;
            };
            std::vector<ScoredDocument> clean = part.clean;
            std::vector<ScoredDocument> noisy = part.noisy;
            if (o.budget > 0) {
                clean = accumulate_budget(clean, o.budget).selected;
                noisy = accumulate_budget(noisy, o.budget).selected;
            }
            const auto clean_tokens = write_ids(clean, o.clean_out);
            const auto noisy_tokens = write_ids(noisy, o.noisy_out);
            emit_json({{"documents", docs.size()},
                       {"low_percentile", o.low},
                       {"high_percentile", o.high},
                       {"low_cutoff", part.low_cutoff},
                       {"high_cutoff", part.high_cutoff},
                       {"clean_count", clean.size()},
                       {"noisy_count", noisy.size()},
                       {"middle_count", part.middle_count},
                       {"budget", o.budget},
                       {"clean_tokens", clean_tokens},
                       {"noisy_tokens", noisy_tokens}},
                      o.out, out);
        }});
    }
    {
        auto* c = app.add_subcommand("savings", "Matched-loss PT-token savings of a candidate against a baseline");
        c->add_option("--candidate", o.candidate, "Candidate step,loss CSV")->required();
        c->add_option("--baseline", o.baseline, "Baseline step,loss CSV")->required();
        c->add_option("--ppt-steps", o.ppt_steps, "Synthetic warm-up steps of the candidate");
        c->add_flag("--include-ppt", o.include_ppt, "Count warm-up steps against the candidate");
        c->add_option("--out", o.out, "JSON report path (default: stdout)");
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            const SavingsReport r = token_savings(load_loss_curve(o.candidate), load_loss_curve(o.baseline),
                                                  {o.ppt_steps, o.include_ppt});
            json report{{"baseline_final_loss", r.baseline_final_loss},
                        {"s_base", r.s_base},
                        {"matched", r.matched},
                        {"terminal_gap", r.terminal_gap},
                        {"note", r.note}};
            if (r.matched) {
                report["s_match"] = r.s_match;
                report["savings"] = r.savings;
            } else {
                report["savings"] = "not matched";
            }
            emit_json(report, o.out, out);
        }});
    }
    {
        auto* c = app.add_subcommand("final-gap", "Per-method final-loss mean and sd with gaps to a baseline");
        c->add_option("--curve", o.curves, "METHOD=PATH, repeated once per seed")->required();
        c->add_option("--baseline", o.baseline, "Baseline method name")->required();
        c->add_option("--export", o.export_table, "Flat label,seed,step,loss table for plotting");
        c->add_option("--out", o.out, "JSON report path (default: stdout)");
        commands.push_back({c, [&o] { return o.out; }, [&o](std::ostream& out) {
            std::map<std::string, std::vector<LossCurve>> grouped;
            std::vector<LossCurve> all;
            for (const auto& spec : o.curves) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--curve expects METHOD=PATH");
                LossCurve curve = load_loss_curve(spec.substr(eq + 1));
                grouped[spec.substr(0, eq)].push_back(curve);
                all.push_back(std::move(curve));
            }
            const FinalGapReport r = final_gap(grouped, o.baseline);
            if (!o.export_table.empty()) {
                std::ofstream table(o.export_table);
                if (!table) throw IoError("cannot open '" + o.export_table + "' for writing");
                write_curve_table(all, table);
            }
            json methods = json::object();
            for (const auto& [name, s] : r.methods) {
                methods[name] = {{"runs", s.runs}, {"mean", s.mean}, {"sd", s.sd}, {"gap", s.gap}};
            }
            emit_json({{"baseline", r.baseline}, {"methods", methods}}, o.out, out);
        }});
    }
    return commands;
}

json error_json(const char* kind, const std::string& message) { return {{"error", kind}, {"message", message}}; }

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    const std::string program = raw_args.empty() ? "pptkit" : raw_args.front();
    std::vector<std::string> args = raw_args;

    CLI::App app{"Synthetic pre-pre-training corpora, controlled corruption and attention probes", "pptkit"};
    app.option_defaults()->always_capture_default();
    Options o;
    app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    std::string config;
    app.add_option("--config", config, "Re-run a resolved configuration written next to an earlier output");
    app.require_subcommand(0, 1);
    const auto commands = register_commands(app, o);

    try {
        if (args.size() >= 3 && args[1] == "--config") {
            args = args_from_config(program, args[2], std::vector<std::string>(args.begin() + 3, args.end()));
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
        if (!config.empty()) throw CLI::ValidationError("--config must be the first argument");

        const Command* chosen = nullptr;
        for (const auto& c : commands) {
            if (c.app->parsed()) chosen = &c;
        }
        if (chosen == nullptr) throw CLI::CallForHelp();

        chosen->execute(out);
        write_config_echo(resolved_config(app, *chosen->app), chosen->primary_output());
        return kOk;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return raw_args.size() > 1 ? kOk : kUsage;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()).dump() << '\n';
        return kUsage;
    } catch (const FormatError& e) {
        err << error_json("data-format", e.what()).dump() << '\n';
        return kDataFormat;
    } catch (const IoError& e) {
        err << error_json("io", e.what()).dump() << '\n';
        return kIo;
    } catch (const DomainError& e) {
        err << error_json("validation", e.what()).dump() << '\n';
        return kValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("io", e.what()).dump() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << '\n';
        return kInternal;
    }
}

} // namespace pptkit::cli
