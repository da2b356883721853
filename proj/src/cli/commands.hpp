#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gramprobe/cli.hpp"

namespace gramprobe::cli {

/// Per-invocation state shared by the command implementations.
struct Context {
    std::ostream& out;
    std::ostream& err;
    RunManifest manifest;

    void warn(const std::string& msg) const { err << "warning: " << msg << '\n'; }
    void add_input(const std::string& path);
    /// Records `path` as an output; call after the file is closed.
    void add_output(const std::string& path);
};

struct GenerateOptions {
    std::string input;
    std::string out;
    std::size_t n = 50'000;
    std::uint64_t seed = 0;
    double dev_fraction = 0.2;
    std::string assignment = "blocks";
    int k_min = 1;
    int k_max = 5;
    int window = 5;
};

struct TrainOptions {
    std::string features;
    std::string data;
    std::string out;
    std::string mode = "layer-sweep";
    std::vector<double> alpha_grid;
    double target_sparsity = 0.0;
    std::string neurons;
    std::size_t subset_size = 0;
    std::size_t seeds = 30;
    std::uint64_t seed = 0;
    int layer = -1;
    double tolerance = 1e-8;
    int max_iterations = 1000;
};

struct EvalOptions {
    std::string probe;
    bool baseline_logprob = false;
    std::string metalinguistic;
    std::string features;
    std::string data;
    std::string out;
    std::string metrics = "acc,auc";
    std::size_t bootstrap = 0;
    double level = 0.95;
    std::uint64_t seed = 0;
    bool by_group = false;
    std::string split = "dev";
};

struct AnalyzeOptions {
    std::vector<std::string> scores;
    bool spearman = false;
    bool pearson = false;
    bool log_scores = false;
    std::vector<std::string> delta;
    std::string metrics = "auc";
    std::size_t bootstrap = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::string variance;
    std::string features;
    std::string data;
    std::string split = "train";
    std::string out;
};

struct RidgeOptions {
    std::string features;
    std::string data;
    std::string split = "all";
    bool per_token = false;
    bool last_token = false;
    int layer = -1;
    std::vector<double> lambda_grid;
    std::uint64_t seed = 0;
    std::string out;
};

struct SynthCorpusOptions {
    std::size_t n = 2000;
    std::uint64_t seed = 0;
    std::string out;
};

struct SynthDumpOptions {
    std::string data;
    std::string out;
    std::uint32_t layers = 4;
    std::uint32_t dim = 64;
    std::uint32_t signal_layer = 2;
    std::uint32_t logprob_layer = 3;
    double separation = 2.9;
    std::string mode = "last_token";
    std::uint64_t seed = 0;
};

void cmd_generate(const GenerateOptions& o, Context& ctx);
void cmd_train(const TrainOptions& o, Context& ctx);
void cmd_eval(const EvalOptions& o, Context& ctx);
void cmd_analyze(const AnalyzeOptions& o, Context& ctx);
void cmd_ridge(const RidgeOptions& o, Context& ctx);
void cmd_synth_corpus(const SynthCorpusOptions& o, Context& ctx);
void cmd_synth_dump(const SynthDumpOptions& o, Context& ctx);

}  // namespace gramprobe::cli
