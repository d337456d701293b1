#include "ckg/kg_data.hpp"

#include "ckg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ckg {

EntityId Vocabulary::add_entity(std::string_view name) {
    auto [it, inserted] = entity_to_id_.try_emplace(std::string(name), static_cast<EntityId>(id_to_entity_.size()));
    if (inserted) id_to_entity_.emplace_back(name);
    return it->second;
}

RelationId Vocabulary::add_relation(std::string_view name) {
    auto [it, inserted] =
        relation_to_id_.try_emplace(std::string(name), static_cast<RelationId>(id_to_relation_.size()));
    if (inserted) id_to_relation_.emplace_back(name);
    return it->second;
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
    auto it = entity_to_id_.find(std::string(name));
    if (it == entity_to_id_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
    auto it = relation_to_id_.find(std::string(name));
    if (it == relation_to_id_.end()) return std::nullopt;
    return it->second;
}

void DatasetSplit::rebuild_known_positives() {
    all_known_positives.clear();
    for (const auto* list : {&train, &valid, &test})
        for (const auto& t : *list)
            if (t.y > 0) all_known_positives.insert(key_of(t));
}

bool has_negatives(const std::vector<LabeledTriple>& triples) {
    return std::any_of(triples.begin(), triples.end(), [](const LabeledTriple& t) { return t.y < 0; });
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int parse_label(std::string_view field, std::size_t line_no) {
    std::string_view digits = field;
    if (digits.starts_with('+')) digits.remove_prefix(1);
    double v = 0.0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty())
        throw ParseError("label '" + std::string(field) + "' is not a number", line_no);
    if (v == 1.0) return 1;
    if (v == -1.0) return -1;
    throw std::invalid_argument("line " + std::to_string(line_no) + ": label " + std::string(field) +
                                " is not in {-1, 1}");
}

}  // namespace

std::vector<LabeledTriple> parse_tsv(std::string_view text, bool has_labels, Vocabulary& vocab) {
    std::vector<LabeledTriple> out;
    std::unordered_map<TripleKey, int, TripleKeyHash> seen;
    const std::size_t expected = has_labels ? 4 : 3;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        auto fields = split_tabs(line);
        if (fields.size() != expected)
            throw ParseError("expected " + std::to_string(expected) + " tab-separated fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        for (std::size_t i = 0; i < 3; ++i)
            if (fields[i].empty()) throw ParseError("empty field " + std::to_string(i + 1), line_no);

        LabeledTriple t;
        t.s = vocab.add_entity(fields[0]);
        t.r = vocab.add_relation(fields[1]);
        t.o = vocab.add_entity(fields[2]);
        t.y = has_labels ? parse_label(fields[3], line_no) : 1;

        auto [it, inserted] = seen.try_emplace(key_of(t), t.y);
        if (!inserted && it->second != t.y)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": triple (" + std::string(fields[0]) +
                                        ", " + std::string(fields[1]) + ", " + std::string(fields[2]) +
                                        ") repeated with a conflicting label");
        out.push_back(t);
    }
    return out;
}

std::vector<LabeledTriple> load_tsv(const std::filesystem::path& path, bool has_labels, Vocabulary& vocab) {
    const std::string text = read_file(path);
    try {
        return parse_tsv(text, has_labels, vocab);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

LoadedTriples load_tsv(const std::filesystem::path& path, bool has_labels) {
    LoadedTriples out;
    out.triples = load_tsv(path, has_labels, out.vocabulary);
    return out;
}

bool detect_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        return split_tabs(line).size() == 4;
    }
    return false;
}

void write_tsv(const std::filesystem::path& path, const std::vector<LabeledTriple>& triples, const Vocabulary& vocab,
               bool with_labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& t : triples) {
        out << vocab.entity_name(t.s) << '\t' << vocab.relation_name(t.r) << '\t' << vocab.entity_name(t.o);
        if (with_labels) out << '\t' << t.y;
        out << '\n';
    }
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& name : vocab.entities()) out << "entity\t" << name << '\n';
    for (const auto& name : vocab.relations()) out << "relation\t" << name << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Vocabulary vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected kind<TAB>name", line_no);
        const std::string_view kind(line.data(), tab);
        const std::string_view name(line.data() + tab + 1, line.size() - tab - 1);
        const auto before = kind == "entity" ? vocab.entity_count() : vocab.relation_count();
        if (kind == "entity")
            vocab.add_entity(name);
        else if (kind == "relation")
            vocab.add_relation(name);
        else
            throw ParseError("unknown kind '" + std::string(kind) + "'", line_no);
        const auto after = kind == "entity" ? vocab.entity_count() : vocab.relation_count();
        if (after == before) throw ParseError("duplicate name '" + std::string(name) + "'", line_no);
    }
    return vocab;
}

void write_fold_file(const std::filesystem::path& path, const std::vector<int>& folds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int f : folds) out << f << '\n';
}

std::vector<int> read_fold_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<int> folds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(line, &used);
        } catch (const std::exception&) {
            throw ParseError("fold index '" + line + "' is not an integer", line_no);
        }
        if (used != line.size()) throw ParseError("fold index '" + line + "' is not an integer", line_no);
        folds.push_back(v);
    }
    return folds;
}

DatasetSplit load_split(const std::filesystem::path& train, const std::optional<std::filesystem::path>& valid,
                        const std::optional<std::filesystem::path>& test, bool has_labels) {
    DatasetSplit split;
    split.train = load_tsv(train, has_labels, split.vocabulary);
    if (valid) split.valid = load_tsv(*valid, has_labels, split.vocabulary);
    if (test) split.test = load_tsv(*test, has_labels, split.vocabulary);

    std::unordered_map<TripleKey, int, TripleKeyHash> labels;
    for (const auto* list : {&split.train, &split.valid, &split.test})
        for (const auto& t : *list) {
            auto [it, inserted] = labels.try_emplace(key_of(t), t.y);
            if (!inserted && it->second != t.y)
                throw std::invalid_argument("triple (" + split.vocabulary.entity_name(t.s) + ", " +
                                            split.vocabulary.relation_name(t.r) + ", " +
                                            split.vocabulary.entity_name(t.o) +
                                            ") has conflicting labels across splits");
        }
    split.rebuild_known_positives();
    return split;
}

// ---------------------------------------------------------------------------
// Synthetic symmetric / antisymmetric task

Vocabulary SyntheticTensor::vocabulary() const {
    Vocabulary v;
    for (std::size_t i = 0; i < n; ++i) v.add_entity("e" + std::to_string(i));
    v.add_relation("symmetric");
    v.add_relation("antisymmetric");
    return v;
}

std::vector<LabeledTriple> SyntheticTensor::always_train() const {
    std::vector<LabeledTriple> out;
    for (std::size_t r = 0; r < labels.size(); ++r)
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t o = 0; o < n; ++o)
                if (fold(r, s, o) == kAlwaysTrain)
                    out.push_back({static_cast<RelationId>(r), static_cast<EntityId>(s), static_cast<EntityId>(o),
                                   label(r, s, o)});
    return out;
}

std::vector<LabeledTriple> SyntheticTensor::fold_triples(int f) const {
    std::vector<LabeledTriple> out;
    for (std::size_t r = 0; r < labels.size(); ++r)
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t o = 0; o < n; ++o)
                if (fold(r, s, o) == f)
                    out.push_back({static_cast<RelationId>(r), static_cast<EntityId>(s), static_cast<EntityId>(o),
                                   label(r, s, o)});
    return out;
}

DatasetSplit SyntheticTensor::split(int test_fold) const {
    if (test_fold < 0 || test_fold >= kFolds) throw std::out_of_range("synthetic fold index out of range");
    DatasetSplit out;
    out.vocabulary = vocabulary();
    out.train = always_train();
    const int valid_fold = (test_fold + 1) % kFolds;
    for (int f = 0; f < kFolds; ++f) {
        auto triples = fold_triples(f);
        auto& dest = f == test_fold ? out.test : f == valid_fold ? out.valid : out.train;
        dest.insert(dest.end(), triples.begin(), triples.end());
    }
    out.rebuild_known_positives();
    return out;
}

SyntheticTensor generate_synthetic(std::size_t n_entities, std::uint64_t seed) {
    if (n_entities < 2) throw std::invalid_argument("generate_synthetic: need at least 2 entities");
    const std::size_t n = n_entities;
    SyntheticTensor t;
    t.n = n;
    t.labels.assign(2, std::vector<int>(n * n, 0));
    t.folds.assign(2, std::vector<int>(n * n, SyntheticTensor::kUnobserved));

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t o = s + 1; o < n; ++o) {
                const int y = coin(rng) ? 1 : -1;
                t.labels[r][s * n + o] = y;
                t.labels[r][o * n + s] = r == 0 ? y : -y;
                t.folds[r][s * n + o] = SyntheticTensor::kAlwaysTrain;
            }

    // Lower-triangular cells of both slices share one shuffled round-robin deal.
    std::vector<std::pair<std::size_t, std::size_t>> lower;  // (slice, cell)
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t s = 1; s < n; ++s)
            for (std::size_t o = 0; o < s; ++o) lower.emplace_back(r, s * n + o);
    std::shuffle(lower.begin(), lower.end(), rng);
    for (std::size_t i = 0; i < lower.size(); ++i)
        t.folds[lower[i].first][lower[i].second] = static_cast<int>(i % SyntheticTensor::kFolds);
    return t;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> kfold_assignment(std::size_t count, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold(count);
    for (std::size_t i = 0; i < count; ++i) fold[order[i]] = i % k;
    return fold;
}

std::vector<DatasetSplit> kfold_split(const std::vector<LabeledTriple>& triples, const Vocabulary& vocab,
                                      std::size_t k, std::uint64_t seed) {
    if (k < 3) throw std::invalid_argument("kfold_split: k must be at least 3");
    if (triples.size() < k)
        throw std::invalid_argument("kfold_split: " + std::to_string(triples.size()) + " triples cannot fill " +
                                    std::to_string(k) + " folds");
    const auto fold = kfold_assignment(triples.size(), k, seed);
    std::vector<DatasetSplit> splits(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto& sp = splits[i];
        sp.vocabulary = vocab;
        const std::size_t valid_fold = (i + 1) % k;
        for (std::size_t j = 0; j < triples.size(); ++j) {
            if (fold[j] == i)
                sp.test.push_back(triples[j]);
            else if (fold[j] == valid_fold)
                sp.valid.push_back(triples[j]);
            else
                sp.train.push_back(triples[j]);
        }
        sp.rebuild_known_positives();
    }
    return splits;
}

}  // namespace ckg
