#pragma once

#include "ckg/embedding.hpp"
#include "ckg/kg_data.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace ckg {

enum class RankMode { Raw, Filtered };

/// Ranks of a test triple among all subject and object substitutions.
/// rank = 1 + #(strictly greater) + #(ties) / 2, the test triple excluded from both counts.
struct TripleRanks {
    double subject = 1.0;
    double object = 1.0;
};

TripleRanks rank_triple(const ParameterSet& params, const LabeledTriple& test, RankMode mode,
                        const TripleSet& known_positives);

inline constexpr std::array<int, 3> kHitsLevels = {1, 3, 10};

struct RankingReport {
    double mrr_raw = 0.0;
    double mrr_filtered = 0.0;
    std::map<int, double> hits_at;              // filtered ranks
    std::map<RelationId, double> per_relation;  // filtered MRR
    std::size_t triple_count = 0;
};

/// MRR averages 1/rank over both substitution sides of every test triple.
/// Ranking fans out over `threads` workers; results do not depend on the count.
RankingReport ranking_metrics(const ParameterSet& params, std::span<const LabeledTriple> test,
                              const TripleSet& known_positives, unsigned threads = 1);

/// Raw ranks only (filtered fields mirror the raw values).
RankingReport raw_ranking_metrics(const ParameterSet& params, std::span<const LabeledTriple> test,
                                  unsigned threads = 1);

struct ScoredLabel {
    double score;
    int label;  // +1 / -1
};

struct APReport {
    double average_precision = 0.0;
    std::size_t positives_count = 0;
    std::size_t total_count = 0;
};

/// Sorts by descending score (stable, so ties keep input order) and averages the
/// precision at every positive position. Throws std::invalid_argument without positives.
APReport average_precision(std::span<const ScoredLabel> items);

/// Scores each triple and computes AP against its label.
APReport average_precision(const ParameterSet& params, std::span<const LabeledTriple> triples);

void write_report_tsv(std::ostream& out, const RankingReport& report, const Vocabulary* vocab = nullptr);
void write_report_table(std::ostream& out, const RankingReport& report, const Vocabulary* vocab = nullptr);
void write_report_tsv(std::ostream& out, const APReport& report);
void write_report_table(std::ostream& out, const APReport& report);

}  // namespace ckg
