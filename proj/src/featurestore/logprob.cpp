#include "gramprobe/error.hpp"
#include "gramprobe/featurestore.hpp"

namespace gramprobe::featurestore {
namespace {

// Both summaries share this running sum so the last prefix value equals the
// length-normalised value bit for bit.
template <typename T>
std::vector<double> prefix_means(std::span<const T> lp) {
    if (lp.empty()) throw DataError("logprob sequence is empty");
    std::vector<double> out(lp.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < lp.size(); ++t) {
        sum += static_cast<double>(lp[t]);
        out[t] = sum / static_cast<double>(t + 1);
    }
    return out;
}

}  // namespace

double length_normalized_logprob(std::span<const float> lp) { return prefix_means(lp).back(); }
double length_normalized_logprob(std::span<const double> lp) { return prefix_means(lp).back(); }

std::vector<double> prefix_normalized_logprobs(std::span<const float> lp) { return prefix_means(lp); }
std::vector<double> prefix_normalized_logprobs(std::span<const double> lp) { return prefix_means(lp); }

}  // namespace gramprobe::featurestore
