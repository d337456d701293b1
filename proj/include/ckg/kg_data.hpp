#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ckg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

/// Bijective name <-> dense id maps for entities and relations.
/// Ids are handed out in first-registration order.
class Vocabulary {
public:
    EntityId add_entity(std::string_view name);
    RelationId add_relation(std::string_view name);

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    const std::string& entity_name(EntityId id) const { return id_to_entity_.at(id); }
    const std::string& relation_name(RelationId id) const { return id_to_relation_.at(id); }

    std::size_t entity_count() const noexcept { return id_to_entity_.size(); }
    std::size_t relation_count() const noexcept { return id_to_relation_.size(); }

    const std::vector<std::string>& entities() const noexcept { return id_to_entity_; }
    const std::vector<std::string>& relations() const noexcept { return id_to_relation_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.id_to_entity_ == b.id_to_entity_ && a.id_to_relation_ == b.id_to_relation_;
    }

private:
    std::unordered_map<std::string, EntityId> entity_to_id_;
    std::vector<std::string> id_to_entity_;
    std::unordered_map<std::string, RelationId> relation_to_id_;
    std::vector<std::string> id_to_relation_;
};

struct LabeledTriple {
    RelationId r = 0;
    EntityId s = 0;
    EntityId o = 0;
    int y = 1;  // +1 true, -1 false

    friend bool operator==(const LabeledTriple&, const LabeledTriple&) = default;
};

/// Unlabeled (r, s, o) key used for filtered ranking.
struct TripleKey {
    RelationId r = 0;
    EntityId s = 0;
    EntityId o = 0;
    friend bool operator==(const TripleKey&, const TripleKey&) = default;
};

struct TripleKeyHash {
    std::size_t operator()(const TripleKey& k) const noexcept {
        std::uint64_t h = (std::uint64_t{k.r} << 42) ^ (std::uint64_t{k.s} << 21) ^ std::uint64_t{k.o};
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return static_cast<std::size_t>(h);
    }
};

using TripleSet = std::unordered_set<TripleKey, TripleKeyHash>;

inline TripleKey key_of(const LabeledTriple& t) { return {t.r, t.s, t.o}; }

struct DatasetSplit {
    std::vector<LabeledTriple> train;
    std::vector<LabeledTriple> valid;
    std::vector<LabeledTriple> test;
    Vocabulary vocabulary;
    TripleSet all_known_positives;

    /// Rebuilds all_known_positives as the union of positives across the three lists.
    void rebuild_known_positives();
};

bool has_negatives(const std::vector<LabeledTriple>& triples);

/// Reads subject<TAB>relation<TAB>object[<TAB>label] lines, registering new names
/// into `vocab`. Blank lines are skipped. Throws ParseError on malformed lines and
/// std::invalid_argument on labels outside {-1, 1} or conflicting duplicate labels.
std::vector<LabeledTriple> load_tsv(const std::filesystem::path& path, bool has_labels, Vocabulary& vocab);

struct LoadedTriples {
    std::vector<LabeledTriple> triples;
    Vocabulary vocabulary;
};
LoadedTriples load_tsv(const std::filesystem::path& path, bool has_labels);

/// Same as load_tsv over an in-memory buffer.
std::vector<LabeledTriple> parse_tsv(std::string_view text, bool has_labels, Vocabulary& vocab);

/// True when the first non-blank line of the file has four fields.
bool detect_labels(const std::filesystem::path& path);

/// Vocabulary file: "entity<TAB>name" and "relation<TAB>name" lines in id order.
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path);

/// Fold files hold one integer fold index per line, parallel to a triple file.
void write_fold_file(const std::filesystem::path& path, const std::vector<int>& folds);
std::vector<int> read_fold_file(const std::filesystem::path& path);

void write_tsv(const std::filesystem::path& path, const std::vector<LabeledTriple>& triples,
               const Vocabulary& vocab, bool with_labels);

/// Loads train/valid/test with a shared vocabulary. Missing optional paths yield empty lists.
DatasetSplit load_split(const std::filesystem::path& train, const std::optional<std::filesystem::path>& valid,
                        const std::optional<std::filesystem::path>& test, bool has_labels);

/// Fully observed sign tensor with a fold assignment per cell.
struct SyntheticTensor {
    static constexpr int kAlwaysTrain = -1;
    static constexpr int kUnobserved = -2;
    static constexpr int kFolds = 5;

    std::size_t n = 0;
    // labels[r][s * n + o] in {-1, 0, +1}; 0 on the unobserved diagonal.
    std::vector<std::vector<int>> labels;
    // folds[r][s * n + o] is kAlwaysTrain, kUnobserved, or a fold index in [0, kFolds).
    std::vector<std::vector<int>> folds;

    int label(std::size_t r, std::size_t s, std::size_t o) const { return labels[r][s * n + o]; }
    int fold(std::size_t r, std::size_t s, std::size_t o) const { return folds[r][s * n + o]; }

    Vocabulary vocabulary() const;
    std::vector<LabeledTriple> always_train() const;
    std::vector<LabeledTriple> fold_triples(int fold) const;

    /// Fold `test_fold` is the test set, fold (test_fold+1) mod 5 the validation set,
    /// and the remaining folds plus the upper triangles form the training set.
    DatasetSplit split(int test_fold) const;
};

/// Two-relation tensor: relation 0 symmetric, relation 1 antisymmetric.
SyntheticTensor generate_synthetic(std::size_t n_entities, std::uint64_t seed);

/// Shuffles under `seed`, deals round-robin into k folds; split i tests on fold i,
/// validates on fold (i+1) mod k and trains on the rest.
std::vector<DatasetSplit> kfold_split(const std::vector<LabeledTriple>& triples, const Vocabulary& vocab,
                                      std::size_t k, std::uint64_t seed);

/// The fold index of every input triple under the same shuffle used by kfold_split.
std::vector<std::size_t> kfold_assignment(std::size_t count, std::size_t k, std::uint64_t seed);

}  // namespace ckg
