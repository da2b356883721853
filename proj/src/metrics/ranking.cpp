#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>

#include "gramprobe/error.hpp"
#include "gramprobe/metrics.hpp"

namespace gramprobe::metrics {

std::string_view to_string(Metric m) { return m == Metric::Acc ? "acc" : "auc"; }

Metric metric_from_string(std::string_view s) {
    if (s == "acc") return Metric::Acc;
    if (s == "auc") return Metric::Auc;
    throw UsageError("unknown metric '" + std::string(s) + "'");
}

std::vector<PairScore> collect_pairs(const Scored& scored) {
    struct Slot {
        std::optional<double> good, bad;
        std::size_t order = 0;
        bool broken = false;
    };
    std::map<std::string, Slot> slots;
    std::vector<std::string> unpaired;
    for (const auto& s : scored) {
        if (!s.pair_id) {
            unpaired.push_back(s.id);
            continue;
        }
        auto [it, inserted] = slots.try_emplace(*s.pair_id);
        if (inserted) it->second.order = slots.size();
        auto& member = s.label == 1 ? it->second.good : it->second.bad;
        if (member) it->second.broken = true;
        member = s.score;
    }

    std::vector<std::string> offending;
    std::vector<std::pair<std::size_t, PairScore>> ordered;
    for (const auto& [pid, slot] : slots) {
        if (slot.broken || !slot.good || !slot.bad) {
            offending.push_back(pid);
            continue;
        }
        ordered.push_back({slot.order, PairScore{pid, *slot.good, *slot.bad}});
    }
    if (!unpaired.empty() || !offending.empty()) {
        std::string msg = "ACC requires complete minimal pairs;";
        if (!unpaired.empty()) msg += " " + std::to_string(unpaired.size()) + " sentence(s) without pair_id (first: " + unpaired.front() + ")";
        if (!offending.empty()) {
            msg += " incomplete pair_id(s):";
            for (std::size_t i = 0; i < offending.size() && i < 10; ++i) msg += " " + offending[i];
            if (offending.size() > 10) msg += " ...";
        }
        throw DataError(msg);
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PairScore> out;
    out.reserve(ordered.size());
    for (auto& [_, p] : ordered) out.push_back(std::move(p));
    return out;
}

double acc_value(std::span<const PairScore> pairs) {
    if (pairs.empty()) throw DataError("ACC over zero pairs is undefined");
    std::size_t wins = 0;
    for (const auto& p : pairs) wins += p.good > p.bad;
    return static_cast<double>(wins) / static_cast<double>(pairs.size());
}

double auc_value(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("AUC: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::int64_t n_pos = 0;
    std::int64_t rank_sum_x2 = 0;  // sum over positives of 2 * mid-rank
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // Tie block occupies 1-based ranks i+1 .. j; twice its mid-rank is i + j + 1.
        const auto twice_rank = static_cast<std::int64_t>(i + j + 1);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                ++n_pos;
                rank_sum_x2 += twice_rank;
            }
        }
        i = j;
    }
    const auto n_neg = static_cast<std::int64_t>(scores.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs at least one positive and one negative");
    // 2U = 2R - n_pos (n_pos + 1); AUC = U / (n_pos n_neg).
    const std::int64_t twice_u = rank_sum_x2 - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport acc_minimal_pairs(const Scored& scored) {
    return evaluate(scored, Metric::Acc, std::nullopt, true);
}

EvalReport auc(const Scored& scored) { return evaluate(scored, Metric::Auc, std::nullopt, true); }

std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

}  // namespace gramprobe::metrics
