#include <algorithm>

#include "gramprobe/dataset.hpp"
#include "gramprobe/error.hpp"

namespace gramprobe::dataset {

std::string_view to_string(Perturbation p) {
    switch (p) {
        case Perturbation::Insertion: return "insertion";
        case Perturbation::Deletion: return "deletion";
        case Perturbation::Shuffle: return "shuffle";
    }
    return "";
}

Perturbation perturbation_from_string(std::string_view s) {
    if (s == "insertion") return Perturbation::Insertion;
    if (s == "deletion") return Perturbation::Deletion;
    if (s == "shuffle") return Perturbation::Shuffle;
    throw DataError("unknown perturbation '" + std::string(s) + "'");
}

Tokens perturb_insert(const Tokens& tokens, const Vocabulary& vocab, Rng& rng, KRange k_range) {
    if (vocab.empty()) throw DataError("insertion requires a non-empty vocabulary");
    const auto k = static_cast<std::size_t>(rng.uniform_int(k_range.min, k_range.max));

    // (boundary, draw order) keeps same-boundary insertions in the order drawn.
    struct Insert {
        std::size_t boundary;
        std::size_t order;
        const std::string* word;
    };
    std::vector<Insert> inserts;
    inserts.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t boundary = rng.uniform_index(tokens.size() + 1);
        const std::string* word = &vocab.entries[rng.uniform_index(vocab.size())];
        inserts.push_back({boundary, i, word});
    }
    std::sort(inserts.begin(), inserts.end(), [](const Insert& a, const Insert& b) {
        return a.boundary != b.boundary ? a.boundary < b.boundary : a.order < b.order;
    });

    Tokens out;
    out.reserve(tokens.size() + k);
    auto next = inserts.begin();
    for (std::size_t pos = 0; pos <= tokens.size(); ++pos) {
        for (; next != inserts.end() && next->boundary == pos; ++next) {
            out.push_back(Token{*next->word, true});
        }
        if (pos < tokens.size()) out.push_back(tokens[pos]);
    }
    return out;
}

PerturbResult perturb_delete(const Tokens& tokens, Rng& rng, KRange k_range) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(k_range.min, k_range.max));
    std::vector<std::size_t> alpha;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].is_alpha) alpha.push_back(i);
    }
    if (alpha.size() < k) return Skip{};

    std::vector<bool> removed(tokens.size(), false);
    for (std::size_t pick : rng.sample_without_replacement(alpha.size(), k)) removed[alpha[pick]] = true;

    Tokens out;
    out.reserve(tokens.size() - k);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!removed[i]) out.push_back(tokens[i]);
    }
    return out;
}

PerturbResult perturb_shuffle(const Tokens& tokens, Rng& rng, int window) {
    const auto w = static_cast<std::size_t>(window);
    if (window < 2 || tokens.size() < w) return Skip{};
    const std::size_t start = rng.uniform_index(tokens.size() - w + 1);

    Tokens out = tokens;
    for (int attempt = 0; attempt < kMaxShuffleAttempts; ++attempt) {
        std::copy(tokens.begin() + start, tokens.begin() + start + w, out.begin() + start);
        rng.shuffle(std::span<Token>(out.data() + start, w));
        // Compare texts: a non-identity permutation of repeated tokens can still
        // reproduce the original sentence.
        if (!std::equal(out.begin() + start, out.begin() + start + w, tokens.begin() + start)) return out;
    }
    return Skip{};
}

}  // namespace gramprobe::dataset
