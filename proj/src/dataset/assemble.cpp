#include <cmath>
#include <cstdio>
#include <fstream>

#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::dataset {
namespace {

std::string sentence_key(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06zu", index);
    return buf;
}

}  // namespace

void GenerationConfig::validate() const {
    if (n_sentences == 0) throw UsageError("n_sentences must be positive");
    if (k_range.min < 1) throw UsageError("k_range.min must be >= 1");
    if (k_range.max < k_range.min) throw UsageError("k_range.max must be >= k_range.min");
    if (window < 2) throw UsageError("shuffle window must be >= 2");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw UsageError("dev_fraction must lie in (0, 1)");
}

Perturbation assigned_perturbation(std::size_t index, std::size_t n, const GenerationConfig& cfg) {
    if (cfg.assignment == Assignment::Uniform) {
        Rng rng = Rng::stream(cfg.seed, StreamId::kAssignment, index);
        return static_cast<Perturbation>(rng.uniform_index(3));
    }
    const std::size_t third = n / 3;
    if (index < third) return Perturbation::Insertion;
    if (index < 2 * third) return Perturbation::Deletion;
    return Perturbation::Shuffle;
}

Dataset assemble_dataset(const std::vector<std::string>& corpus, const GenerationConfig& cfg,
                         AssemblyStats* stats) {
    cfg.validate();
    const std::size_t n = std::min(cfg.n_sentences, corpus.size());
    if (n < 3) throw DataError("assemble_dataset needs at least 3 sentences, got " + std::to_string(n));

    const std::vector<std::string> used(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(n));
    const Vocabulary vocab = build_vocab(used);

    struct Pair {
        std::size_t index;
        Tokens original;
        Tokens perturbed;
        Perturbation kind;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n);
    std::size_t assigned[3] = {0, 0, 0};
    std::size_t skipped[3] = {0, 0, 0};

    for (std::size_t i = 0; i < n; ++i) {
        const Perturbation kind = assigned_perturbation(i, n, cfg);
        const auto slot = static_cast<std::size_t>(kind);
        ++assigned[slot];

        Tokens tokens = tokenize(used[i]);
        Rng rng = Rng::stream(cfg.seed, i);
        PerturbResult result = Skip{};
        if (!tokens.empty()) {
            switch (kind) {
                case Perturbation::Insertion:
                    result = perturb_insert(tokens, vocab, rng, cfg.k_range);
                    break;
                case Perturbation::Deletion:
                    result = perturb_delete(tokens, rng, cfg.k_range);
                    break;
                case Perturbation::Shuffle:
                    result = perturb_shuffle(tokens, rng, cfg.window);
                    break;
            }
        }
        if (std::holds_alternative<Skip>(result)) {
            ++skipped[slot];
            continue;
        }
        pairs.push_back({i, std::move(tokens), std::get<Tokens>(std::move(result)), kind});
    }

    for (int k = 0; k < 3; ++k) {
        if (assigned[k] > 0 && skipped[k] == assigned[k]) {
            throw DataError("every sentence assigned to " + std::string(to_string(static_cast<Perturbation>(k))) +
                            " was skipped");
        }
    }
    if (pairs.empty()) throw DataError("no sentence could be perturbed");

    // Split by pair: shuffle pair positions, the last dev_fraction go to dev.
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng = Rng::stream(cfg.seed, StreamId::kSplit);
    split_rng.shuffle(std::span<std::size_t>(order));
    const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(pairs.size()) * cfg.dev_fraction));
    std::vector<Split> split_of(pairs.size(), Split::Train);
    for (std::size_t r = pairs.size() - n_dev; r < pairs.size(); ++r) split_of[order[r]] = Split::Dev;

    Dataset out;
    out.reserve(2 * pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& pair = pairs[p];
        const std::string key = sentence_key(pair.index);
        out.push_back(LabeledSentence{key + "-orig", detokenize(pair.original), 1, key, std::nullopt, split_of[p],
                                      cfg.language, std::nullopt});
        out.push_back(LabeledSentence{key + "-pert", detokenize(pair.perturbed), 0, key, std::nullopt, split_of[p],
                                      cfg.language, pair.kind});
    }

    if (stats) {
        stats->used_sentences = n;
        stats->pairs = pairs.size();
        for (int k = 0; k < 3; ++k) stats->skipped[k] = skipped[k];
    }
    return out;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read corpus " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace gramprobe::dataset
