#include "gramprobe/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "gramprobe/error.hpp"
#include "gramprobe/rng.hpp"
#include "gramprobe/solvers.hpp"

namespace gramprobe::synthetic {

namespace {

constexpr std::array<std::string_view, 12> kDeterminers = {"the", "a",    "every", "some", "this", "that",
                                                           "my",  "your", "one",   "no",   "each", "her"};
constexpr std::array<std::string_view, 24> kNouns = {
    "cat",    "dog",   "teacher", "river",  "garden", "student", "letter", "window",
    "farmer", "city",  "doctor",  "song",   "engine", "child",   "forest", "painter",
    "bridge", "story", "island",  "market", "soldier", "lamp",   "winter", "question"};
constexpr std::array<std::string_view, 20> kVerbs = {"sees",   "finds",   "carries", "watches", "likes",
                                                     "builds", "follows", "paints",  "visits",  "answers",
                                                     "keeps",  "hears",   "moves",   "opens",   "helps",
                                                     "meets",  "sells",   "draws",   "reads",   "misses"};
constexpr std::array<std::string_view, 16> kAdjectives = {"old",   "small", "quiet",  "bright", "green", "tired",
                                                          "proud", "cold",  "narrow", "busy",   "gentle", "loud",
                                                          "early", "heavy", "brave",  "calm"};
constexpr std::array<std::string_view, 12> kTail = {"today",  "again",   "slowly",  "there",  "quickly", "often",
                                                    "inside", "outside", "together", "safely", "later",   "now"};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& words, Rng& rng) {
    return words[rng.uniform_index(N)];
}

constexpr double kExpectedLogprob = -2.0;  // mean of the per-token draw below

float draw_logprob(Rng& rng) { return static_cast<float>(-(0.5 + 3.0 * rng.uniform01())); }

Eigen::VectorXd random_unit(std::size_t d, Rng& rng) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
    return v / v.norm();
}

}  // namespace

std::vector<std::string> random_corpus(std::size_t n, std::uint64_t seed, std::size_t min_words,
                                       std::size_t max_words) {
    if (min_words < 4 || max_words < min_words) throw UsageError("random_corpus: need 4 <= min_words <= max_words");
    std::vector<std::string> out;
    out.reserve(n);
    Rng rng = Rng::stream(seed, StreamId::kSynthetic, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto target = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(min_words),
                                                                     static_cast<std::int64_t>(max_words)));
        std::vector<std::string_view> words;
        words.push_back(pick(kDeterminers, rng));
        if (rng.uniform01() < 0.5) words.push_back(pick(kAdjectives, rng));
        words.push_back(pick(kNouns, rng));
        words.push_back(pick(kVerbs, rng));
        words.push_back(pick(kDeterminers, rng));
        while (words.size() + 1 < target) words.push_back(pick(kAdjectives, rng));
        words.push_back(pick(kNouns, rng));
        while (words.size() < target) words.push_back(pick(kTail, rng));

        std::string line(words.front());
        line[0] = static_cast<char>(line[0] - 'a' + 'A');
        for (std::size_t w = 1; w < words.size(); ++w) {
            line += ' ';
            line += words[w];
        }
        line += '.';
        out.push_back(std::move(line));
    }
    return out;
}

PlantedDump planted_dump(const dataset::Dataset& data, const PlantedDumpConfig& cfg) {
    if (cfg.n_layers == 0 || cfg.hidden_dim < 2) throw UsageError("planted dump needs n_layers >= 1 and hidden_dim >= 2");
    if (cfg.signal_layer >= cfg.n_layers) throw UsageError("signal layer out of range");

    PlantedDump out;
    Rng dir_rng = Rng::stream(cfg.seed, StreamId::kSynthetic, 0);
    out.grammar_direction = random_unit(cfg.hidden_dim, dir_rng);
    Eigen::VectorXd v = random_unit(cfg.hidden_dim, dir_rng);
    v -= v.dot(out.grammar_direction) * out.grammar_direction;
    out.logprob_direction = v / v.norm();

    auto& dump = out.dump;
    dump.model_name = "synthetic-planted";
    dump.mode = cfg.mode;
    dump.n_layers = cfg.n_layers;
    dump.hidden_dim = cfg.hidden_dim;
    dump.records.reserve(data.size());

    const std::size_t L = cfg.n_layers;
    const std::size_t lp_layer = std::min<std::size_t>(cfg.logprob_layer, L - 1);
    const std::size_t D = cfg.hidden_dim;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        Rng rng = Rng::stream(cfg.seed, StreamId::kSynthetic, i + 1);
        featurestore::SentenceRecord rec;
        rec.id = s.id;
        const std::size_t T = std::max<std::size_t>(1, dataset::tokenize(s.text).size());
        rec.logprobs.resize(T);
        for (auto& lp : rec.logprobs) lp = draw_logprob(rng);
        const auto prefix = featurestore::prefix_normalized_logprobs(std::span<const float>(rec.logprobs));

        const double sign = s.label == 1 ? 0.5 : -0.5;
        const std::size_t positions = cfg.mode == featurestore::DumpMode::PerToken ? T : 1;
        rec.hidden.resize(positions * L * D);
        for (std::size_t t = 0; t < positions; ++t) {
            const double lp_dev = prefix[cfg.mode == featurestore::DumpMode::PerToken ? t : T - 1] - kExpectedLogprob;
            for (std::size_t l = 0; l < L; ++l) {
                const double shift = sign * cfg.separation * (l == cfg.signal_layer ? 1.0 : cfg.leak);
                float* h = rec.hidden.data() + (t * L + l) * D;
                for (std::size_t j = 0; j < D; ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    double value = rng.normal() + shift * out.grammar_direction(jj);
                    if (l == lp_layer) value += cfg.logprob_gain * lp_dev * out.logprob_direction(jj);
                    h[j] = static_cast<float>(value);
                }
            }
        }
        dump.records.push_back(std::move(rec));
    }
    dump.validate();
    return out;
}

std::vector<double> oracle_scores(const PlantedDump& planted, std::uint32_t signal_layer) {
    std::vector<double> scores;
    scores.reserve(planted.dump.records.size());
    for (std::size_t r = 0; r < planted.dump.records.size(); ++r) {
        const auto h = planted.dump.last_token_state(r, signal_layer);
        double s = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) s += planted.grammar_direction(static_cast<Eigen::Index>(j)) * h[j];
        scores.push_back(s);
    }
    return scores;
}

PlantedClassification planted_classification(std::size_t n, std::size_t d, std::size_t informative,
                                             std::uint64_t seed, double signal) {
    if (n < 2 || d == 0 || informative > d) throw UsageError("planted_classification: bad shape");
    PlantedClassification out;
    Rng rng = Rng::stream(seed, StreamId::kSynthetic, 0);
    out.support = rng.sample_without_replacement(d, informative);
    std::sort(out.support.begin(), out.support.end());
    out.w_true = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (auto j : out.support) out.w_true(static_cast<Eigen::Index>(j)) = rng.uniform01() < 0.5 ? -signal : signal;

    // Column-major fill keeps the draw order independent of Eigen's storage.
    out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < out.X.cols(); ++j)
        for (Eigen::Index i = 0; i < out.X.rows(); ++i) out.X(i, j) = rng.normal();

    const Eigen::VectorXd margin = out.X * out.w_true;
    out.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) = rng.uniform01() < solvers::sigmoid(margin(i)) ? 1.0 : 0.0;
    if (out.y.sum() == 0.0) out.y(0) = 1.0;
    if (out.y.sum() == static_cast<double>(n)) out.y(0) = 0.0;
    return out;
}

}  // namespace gramprobe::synthetic
