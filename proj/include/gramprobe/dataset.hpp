#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gramprobe/rng.hpp"

namespace gramprobe::dataset {

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

struct Token {
    std::string text;
    bool is_alpha = false;

    friend bool operator==(const Token&, const Token&) = default;
};

using Tokens = std::vector<Token>;

/// Rule-based tokenizer.
///
///  - maximal runs of letters form one token (is_alpha = true);
///  - maximal runs of ASCII digits form one token;
///  - whitespace separates tokens and is dropped;
///  - every other code point is a token of its own.
///
/// Letters are ASCII A-Z/a-z plus the Latin-1 Supplement and Latin
/// Extended-A/B letters U+00C0..U+024F (excluding U+00D7 and U+00F7).
/// Invalid UTF-8 bytes are treated as single-character symbol tokens.
Tokens tokenize(std::string_view text);

/// Tokens joined with single spaces.
std::string detokenize(const Tokens& tokens);

bool is_letter(char32_t cp) noexcept;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

struct Vocabulary {
    /// Sorted, deduplicated alphabetic tokens.
    std::vector<std::string> entries;
    std::string source_hash;

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }
    bool contains(std::string_view word) const;
};

/// Union of maximal alphabetic spans across sentences. Throws DataError when empty.
Vocabulary build_vocab(const std::vector<std::string>& sentences);

// ---------------------------------------------------------------------------
// Perturbations
// ---------------------------------------------------------------------------

enum class Perturbation { Insertion, Deletion, Shuffle };

std::string_view to_string(Perturbation p);
Perturbation perturbation_from_string(std::string_view s);

struct KRange {
    int min = 1;
    int max = 5;
};

/// Marker for a sentence that cannot be perturbed.
struct Skip {};

using PerturbResult = std::variant<Tokens, Skip>;

/// Inserts k in `k_range` vocabulary tokens (uniform, with replacement), each
/// at a boundary drawn uniformly from the |tokens|+1 boundaries of the original.
Tokens perturb_insert(const Tokens& tokens, const Vocabulary& vocab, Rng& rng, KRange k_range);

/// Removes k distinct alphabetic tokens; Skip when fewer than k exist.
PerturbResult perturb_delete(const Tokens& tokens, Rng& rng, KRange k_range);

/// Permutes one contiguous window; Skip when the sentence is shorter than the
/// window or 100 draws all reproduce the original sequence.
PerturbResult perturb_shuffle(const Tokens& tokens, Rng& rng, int window);

inline constexpr int kMaxShuffleAttempts = 100;

// ---------------------------------------------------------------------------
// Labeled sentences and dataset files
// ---------------------------------------------------------------------------

enum class Split { Train, Dev, Test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct LabeledSentence {
    std::string id;
    std::string text;
    int label = 1;
    std::optional<std::string> pair_id;
    std::optional<std::string> group;
    Split split = Split::Train;
    std::string language = "en";
    std::optional<Perturbation> perturbation;

    friend bool operator==(const LabeledSentence&, const LabeledSentence&) = default;
};

using Dataset = std::vector<LabeledSentence>;

/// One JSON object per line, keys in the fixed order
/// {id, text, label, pair_id, group, split, language, perturbation}.
std::string to_jsonl_line(const LabeledSentence& s);
void write_jsonl(std::ostream& out, const Dataset& data);
void write_jsonl(const std::filesystem::path& path, const Dataset& data);

/// Parses and validates (labels, unique ids, pair integrity).
Dataset read_jsonl(std::istream& in);
Dataset read_jsonl(const std::filesystem::path& path);

/// Throws DataError when ids repeat or a pair_id is not shared by exactly
/// two sentences with opposite labels.
void validate(const Dataset& data);

// ---------------------------------------------------------------------------
// Synthetic corpus assembly
// ---------------------------------------------------------------------------

enum class Assignment {
    Blocks,   ///< contiguous thirds: insertion, deletion, shuffle
    Uniform,  ///< independent uniform choice per sentence
};

struct GenerationConfig {
    std::size_t n_sentences = 50'000;
    std::uint64_t seed = 0;
    KRange k_range{1, 5};
    int window = 5;
    double dev_fraction = 0.2;
    Assignment assignment = Assignment::Blocks;
    std::string language = "en";

    /// Throws UsageError on k_range.min < 1, k_range.max < min, window < 2,
    /// or dev_fraction outside (0, 1).
    void validate() const;
};

struct AssemblyStats {
    std::size_t used_sentences = 0;
    std::size_t pairs = 0;
    std::size_t skipped[3] = {0, 0, 0};  ///< indexed by Perturbation
};

/// Perturbation kind assigned to sentence `index` of `n` under `cfg`.
Perturbation assigned_perturbation(std::size_t index, std::size_t n, const GenerationConfig& cfg);

/// Builds the contrastive dataset from the first min(n_sentences, |corpus|)
/// lines. Sentence i draws from Rng::stream(seed, i); the pair-level
/// train/dev shuffle uses its own reserved stream.
Dataset assemble_dataset(const std::vector<std::string>& corpus, const GenerationConfig& cfg,
                         AssemblyStats* stats = nullptr);

/// Reads one sentence per non-blank line (trailing CR stripped).
std::vector<std::string> read_corpus(const std::filesystem::path& path);

}  // namespace gramprobe::dataset
