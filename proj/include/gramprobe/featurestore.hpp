#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gramprobe::featurestore {

enum class DumpMode : std::uint8_t { LastToken = 0, PerToken = 1 };

std::string_view to_string(DumpMode m);

struct SentenceRecord {
    std::string id;
    /// last_token: n_layers * hidden_dim values, layer-major.
    /// per_token: n_tokens * n_layers * hidden_dim values, token-major then layer-major.
    std::vector<float> hidden;
    /// One natural-log conditional probability per token; its size is T.
    std::vector<float> logprobs;

    std::uint32_t n_tokens() const noexcept { return static_cast<std::uint32_t>(logprobs.size()); }
};

/// In-memory GPD1 dump.
struct FeatureDump {
    std::string model_name;
    DumpMode mode = DumpMode::LastToken;
    std::uint32_t n_layers = 0;
    std::uint32_t hidden_dim = 0;
    std::vector<SentenceRecord> records;

    std::size_t n_sentences() const noexcept { return records.size(); }

    /// Hidden vector of `layer` at the final token (either mode).
    std::span<const float> last_token_state(std::size_t record, std::size_t layer) const;
    /// Hidden vector of `layer` at token `t` (per_token mode only).
    std::span<const float> token_state(std::size_t record, std::size_t t, std::size_t layer) const;

    /// Index of the record with this id; throws DataError when absent.
    std::size_t find(std::string_view id) const;

    /// Throws DataError if any invariant fails: finite values, logprobs <= 0,
    /// unique ids, T >= 1, payload sizes consistent with mode/L/D/T.
    void validate() const;
};

// ---------------------------------------------------------------------------
// GPD1 binary format
//
//   "GPD1" | u32 version=1 | u8 mode | u32 n_sentences | u32 n_layers |
//   u32 hidden_dim | u32 name_len | name bytes |
//   per sentence: u32 id_len | id bytes | u32 T | f32 hidden payload | T x f32 logprobs
//
// Little-endian, no padding, no trailing bytes.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFormatVersion = 1;

std::string encode_dump(const FeatureDump& dump);
/// Throws FormatError with the offending byte offset.
FeatureDump decode_dump(std::string_view bytes);

void write_dump(const FeatureDump& dump, const std::filesystem::path& path);
FeatureDump read_dump(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature matrices
// ---------------------------------------------------------------------------

/// N x D probe inputs in double precision, one row per sentence.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> row_ids;
    /// Source layers in column order; empty when derived from non-layer data.
    std::vector<int> layers;
    bool all_layers = false;

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }
};

FeatureMatrix select_layer(const FeatureDump& dump, std::size_t layer);

/// Layer-major concatenation: column l * hidden_dim + j is unit j of layer l.
FeatureMatrix concat_layers(const FeatureDump& dump);

/// Rows reordered (and subset) to follow `ids`. Throws DataError naming up to
/// the first 10 ids missing from the matrix.
FeatureMatrix align_rows(const FeatureMatrix& m, const std::vector<std::string>& ids);

/// Keeps only the listed columns, in the given order.
FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> columns);

// ---------------------------------------------------------------------------
// Normalisation
// ---------------------------------------------------------------------------

struct NormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  ///< population (1/N) standard deviation
    std::size_t fit_count = 0;
};

/// Columns whose std falls below this map to 0 when applied.
inline constexpr double kZeroVarianceThreshold = 1e-12;

NormStats zscore_fit(const Eigen::MatrixXd& train);
Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& m, const NormStats& stats);

inline NormStats zscore_fit(const FeatureMatrix& train) { return zscore_fit(train.values); }
FeatureMatrix zscore_apply(const FeatureMatrix& m, const NormStats& stats);

// ---------------------------------------------------------------------------
// Logprob summaries
// ---------------------------------------------------------------------------

/// (1/T) sum_t logprob_t. Throws DataError when empty.
double length_normalized_logprob(std::span<const float> token_logprobs);
double length_normalized_logprob(std::span<const double> token_logprobs);

/// Element t is (1/(t+1)) * sum_{u<=t} logprob_u.
std::vector<double> prefix_normalized_logprobs(std::span<const float> token_logprobs);
std::vector<double> prefix_normalized_logprobs(std::span<const double> token_logprobs);

}  // namespace gramprobe::featurestore
