#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gramprobe/checksum.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::cli {

namespace {

/// Registers the shared --config option. The file itself is expanded into
/// flags by with_config before parsing.
void add_config(CLI::App* sub) {
    sub->add_option("--config", "TOML file supplying any of this command's flags (command line wins)")
        ->configurable(false);
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

/// Returns `args` with the keys of the subcommand's --config file spliced in
/// as long flags. Keys may be bare or under a [<subcommand>] table.
std::vector<std::string> with_config(const std::vector<std::string>& args) {
    if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::FileError& e) {
        throw UsageError(std::string("--config: ") + e.what());
    }
    std::vector<std::string> out{args[0]};
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        if (!item.parents.empty() && item.parents != std::vector<std::string>{args[0]}) {
            throw UsageError("--config: key '" + item.fullname() + "' belongs to another command");
        }
        const std::string flag = "--" + item.name;
        if (given_on_command_line(args, flag)) continue;
        if (item.inputs.size() == 1) {
            out.push_back(flag + "=" + item.inputs[0]);
        } else {
            out.push_back(flag);
            out.insert(out.end(), item.inputs.begin(), item.inputs.end());
        }
    }
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
}

struct Pending {
    CLI::App* sub = nullptr;
    std::function<void(Context&)> action;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Linear grammaticality probes over language-model hidden states", "gramprobe"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolkitVersion);

    std::vector<Pending> commands;

    GenerateOptions gen;
    {
        auto* s = app.add_subcommand("generate", "Build a contrastive dataset from a corpus");
        add_config(s);
        s->add_option("--input", gen.input, "Corpus, one sentence per line")->required();
        s->add_option("--out", gen.out, "Dataset JSONL")->required();
        s->add_option("--n", gen.n, "Number of corpus sentences to use")->capture_default_str();
        s->add_option("--seed", gen.seed)->capture_default_str();
        s->add_option("--dev-fraction", gen.dev_fraction)->capture_default_str();
        s->add_option("--assignment", gen.assignment, "blocks | uniform")->capture_default_str();
        s->add_option("--k-min", gen.k_min, "Fewest words inserted or deleted")->capture_default_str();
        s->add_option("--k-max", gen.k_max, "Most words inserted or deleted")->capture_default_str();
        s->add_option("--window", gen.window, "Local shuffle window")->capture_default_str();
        commands.push_back({s, [&](Context& c) { cmd_generate(gen, c); }});
    }

    TrainOptions train;
    {
        auto* s = app.add_subcommand("train", "Train probes on a feature dump");
        add_config(s);
        s->add_option("--features", train.features, "GPD1 dump")->required();
        s->add_option("--data", train.data, "Dataset JSONL")->required();
        s->add_option("--out", train.out, "Probe model JSON (report alongside)")->required();
        s->add_option("--mode", train.mode, "layer-sweep | all-layers | lasso | refit | random-baseline | augmented")
            ->capture_default_str();
        s->add_option("--alpha-grid", train.alpha_grid, "Comma-separated alphas (default 2^-2 .. 2^5)")
            ->delimiter(',');
        s->add_option("--target-sparsity", train.target_sparsity, "Nonzero fraction p for lasso mode");
        s->add_option("--neurons", train.neurons, "Neuron list (lasso report or JSON array)");
        s->add_option("--subset-size", train.subset_size, "Random-baseline subset size");
        s->add_option("--seeds", train.seeds, "Random-baseline runs")->capture_default_str();
        s->add_option("--seed", train.seed)->capture_default_str();
        s->add_option("--layer", train.layer, "Layer for augmented mode (default all layers)");
        s->add_option("--tolerance", train.tolerance, "Solver tolerance")->capture_default_str();
        s->add_option("--max-iterations", train.max_iterations)->capture_default_str();
        commands.push_back({s, [&](Context& c) { cmd_train(train, c); }});
    }

    EvalOptions ev;
    {
        auto* s = app.add_subcommand("eval", "Score a dataset and report ACC / AUC");
        add_config(s);
        s->add_option("--probe", ev.probe, "Probe model JSON");
        s->add_flag("--baseline-logprob", ev.baseline_logprob, "Score by length-normalised logprob");
        s->add_option("--metalinguistic", ev.metalinguistic, "JSONL of {id, logprob_yes, logprob_no}");
        s->add_option("--features", ev.features, "GPD1 dump");
        s->add_option("--data", ev.data, "Dataset JSONL")->required();
        s->add_option("--out", ev.out, "Report JSON (text report at <out>.txt)")->required();
        s->add_option("--metrics", ev.metrics, "Comma-separated: acc, auc")->capture_default_str();
        s->add_option("--bootstrap", ev.bootstrap, "Bootstrap resamples (0 = no interval)")->capture_default_str();
        s->add_option("--level", ev.level, "Interval coverage")->capture_default_str();
        s->add_option("--seed", ev.seed)->capture_default_str();
        s->add_flag("--by-group", ev.by_group, "Per-group breakdown (CSV at <out>.groups.csv)");
        s->add_option("--split", ev.split, "train | dev | test | all")->capture_default_str();
        commands.push_back({s, [&](Context& c) { cmd_eval(ev, c); }});
    }

    AnalyzeOptions an;
    {
        auto* s = app.add_subcommand("analyze", "Correlations, deltas and logprob variance");
        add_config(s);
        s->add_option("--scores", an.scores, "Two eval reports to correlate");
        s->add_flag("--spearman", an.spearman);
        s->add_flag("--pearson", an.pearson);
        s->add_flag("--log-scores", an.log_scores, "Take the log of the first file's scores");
        s->add_option("--delta", an.delta, "Baseline and augmented eval reports")->expected(2);
        s->add_option("--metrics", an.metrics, "Metrics for --delta")->capture_default_str();
        s->add_option("--bootstrap", an.bootstrap, "Resamples for --delta")->capture_default_str();
        s->add_option("--level", an.level)->capture_default_str();
        s->add_option("--seed", an.seed)->capture_default_str();
        s->add_option("--variance", an.variance, "per-token | last-token");
        s->add_option("--features", an.features, "GPD1 dump for --variance");
        s->add_option("--data", an.data, "Dataset JSONL for --variance");
        s->add_option("--split", an.split, "Split for --variance")->capture_default_str();
        s->add_option("--out", an.out, "Report JSON")->required();
        commands.push_back({s, [&](Context& c) { cmd_analyze(an, c); }});
    }

    RidgeOptions rd;
    {
        auto* s = app.add_subcommand("ridge", "Ridge probe from hidden states to prefix logprobs");
        add_config(s);
        s->add_option("--features", rd.features, "GPD1 dump")->required();
        s->add_option("--data", rd.data, "Optional dataset restricting the sentences");
        s->add_option("--split", rd.split, "Split used with --data")->capture_default_str();
        s->add_flag("--per-token", rd.per_token);
        s->add_flag("--last-token", rd.last_token);
        s->add_option("--layer", rd.layer, "Layer whose states are used")->required();
        s->add_option("--lambda-grid", rd.lambda_grid, "Comma-separated lambdas (default 2^-2 .. 2^5)")
            ->delimiter(',');
        s->add_option("--seed", rd.seed)->capture_default_str();
        s->add_option("--out", rd.out, "Report JSON")->required();
        commands.push_back({s, [&](Context& c) { cmd_ridge(rd, c); }});
    }

    SynthCorpusOptions sc;
    {
        auto* s = app.add_subcommand("synth-corpus", "Write a random corpus over a toy lexicon");
        add_config(s);
        s->add_option("--n", sc.n)->capture_default_str();
        s->add_option("--seed", sc.seed)->capture_default_str();
        s->add_option("--out", sc.out)->required();
        commands.push_back({s, [&](Context& c) { cmd_synth_corpus(sc, c); }});
    }

    SynthDumpOptions sd;
    {
        auto* s = app.add_subcommand("synth-dump", "Write a dump with a planted grammaticality signal");
        add_config(s);
        s->add_option("--data", sd.data, "Dataset JSONL")->required();
        s->add_option("--out", sd.out)->required();
        s->add_option("--layers", sd.layers)->capture_default_str();
        s->add_option("--dim", sd.dim)->capture_default_str();
        s->add_option("--signal-layer", sd.signal_layer)->capture_default_str();
        s->add_option("--logprob-layer", sd.logprob_layer, "Layer encoding prefix logprobs")->capture_default_str();
        s->add_option("--separation", sd.separation)->capture_default_str();
        s->add_option("--mode", sd.mode, "last_token | per_token")->capture_default_str();
        s->add_option("--seed", sd.seed)->capture_default_str();
        commands.push_back({s, [&](Context& c) { cmd_synth_dump(sd, c); }});
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        try {
            args = with_config(args);
        } catch (const UsageError& e) {
            err << "error: " << e.what() << '\n';
            return kUsage;
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        out << kToolkitVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    for (auto& cmd : commands) {
        if (!cmd.sub->parsed()) continue;
        Context ctx{out, err, {}};
        ctx.manifest.command = cmd.sub->get_name();
        ctx.manifest.config_checksum = checksum_bytes(cmd.sub->config_to_str(true, false));
        if (auto* opt = cmd.sub->get_option_no_throw("--seed")) ctx.manifest.seed = opt->as<std::uint64_t>();
        const auto start = std::chrono::steady_clock::now();
        try {
            cmd.action(ctx);
            ctx.manifest.wall_clock_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const auto primary = cmd.sub->get_option("--out")->as<std::string>();
            write_manifest(ctx.manifest, manifest_path(primary));
            return kOk;
        } catch (const UsageError& e) {
            err << "error: " << e.what() << '\n';
            return kUsage;
        } catch (const NumericalError& e) {
            err << "error: " << e.what() << '\n';
            return kNumerical;
        } catch (const DataError& e) {
            err << "error: " << e.what() << '\n';
            return kData;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kData;
        }
    }
    return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"gramprobe"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gramprobe::cli
