#include "ckg/evaluation.hpp"

#include "ckg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace ckg {

namespace {

struct Counts {
    std::size_t greater = 0;
    std::size_t ties = 0;
    double rank() const { return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0; }
};

void tally(Counts& c, double candidate, double reference) {
    if (candidate > reference)
        ++c.greater;
    else if (candidate == reference)
        ++c.ties;
}

struct BothRanks {
    TripleRanks raw;
    TripleRanks filtered;
};

// One pass over candidates yields raw and filtered ranks together.
BothRanks rank_both(const ParameterSet& params, const LabeledTriple& t, const TripleSet* known) {
    const double reference = score(params, t.r, t.s, t.o);
    Counts raw_s, raw_o, fil_s, fil_o;
    const auto n = static_cast<EntityId>(params.entity_count());
    for (EntityId e = 0; e < n; ++e) {
        if (e != t.s) {
            const double v = score(params, t.r, e, t.o);
            tally(raw_s, v, reference);
            if (!known || !known->contains({t.r, e, t.o})) tally(fil_s, v, reference);
        }
        if (e != t.o) {
            const double v = score(params, t.r, t.s, e);
            tally(raw_o, v, reference);
            if (!known || !known->contains({t.r, t.s, e})) tally(fil_o, v, reference);
        }
    }
    return {{raw_s.rank(), raw_o.rank()}, {fil_s.rank(), fil_o.rank()}};
}

std::vector<BothRanks> rank_all(const ParameterSet& params, std::span<const LabeledTriple> test,
                                const TripleSet* known, unsigned threads) {
    for (const auto& t : test) check_ids(params, t.r, t.s, t.o);
    std::vector<BothRanks> ranks(test.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, test.size()))));
    if (threads == 1) {
        for (std::size_t i = 0; i < test.size(); ++i) ranks[i] = rank_both(params, test[i], known);
        return ranks;
    }
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w)
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < test.size(); i += threads) ranks[i] = rank_both(params, test[i], known);
        });
    return ranks;
}

RankingReport summarize(std::span<const LabeledTriple> test, const std::vector<BothRanks>& ranks) {
    if (test.empty()) throw std::invalid_argument("ranking_metrics: empty test set");
    RankingReport report;
    report.triple_count = test.size();
    std::map<RelationId, std::pair<double, std::size_t>> per_rel;
    double raw = 0.0, fil = 0.0;
    std::map<int, std::size_t> hits;
    for (int level : kHitsLevels) hits[level] = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& r = ranks[i];
        raw += 1.0 / r.raw.subject + 1.0 / r.raw.object;
        const double f = 1.0 / r.filtered.subject + 1.0 / r.filtered.object;
        fil += f;
        auto& pr = per_rel[test[i].r];
        pr.first += f;
        pr.second += 2;
        for (int level : kHitsLevels) {
            hits[level] += (r.filtered.subject <= level) + (r.filtered.object <= level);
        }
    }
    const double denom = 2.0 * static_cast<double>(test.size());
    report.mrr_raw = raw / denom;
    report.mrr_filtered = fil / denom;
    for (auto [level, count] : hits) report.hits_at[level] = static_cast<double>(count) / denom;
    for (auto& [rel, acc] : per_rel) report.per_relation[rel] = acc.first / static_cast<double>(acc.second);
    return report;
}

}  // namespace

TripleRanks rank_triple(const ParameterSet& params, const LabeledTriple& test, RankMode mode,
                        const TripleSet& known_positives) {
    check_ids(params, test.r, test.s, test.o);
    const auto both = rank_both(params, test, mode == RankMode::Filtered ? &known_positives : nullptr);
    return mode == RankMode::Filtered ? both.filtered : both.raw;
}

RankingReport ranking_metrics(const ParameterSet& params, std::span<const LabeledTriple> test,
                              const TripleSet& known_positives, unsigned threads) {
    return summarize(test, rank_all(params, test, &known_positives, threads));
}

RankingReport raw_ranking_metrics(const ParameterSet& params, std::span<const LabeledTriple> test,
                                  unsigned threads) {
    return summarize(test, rank_all(params, test, nullptr, threads));
}

APReport average_precision(std::span<const ScoredLabel> items) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].score > items[b].score; });
    APReport report;
    report.total_count = items.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (items[order[i]].label > 0) {
            ++report.positives_count;
            sum += static_cast<double>(report.positives_count) / static_cast<double>(i + 1);
        }
    }
    if (report.positives_count == 0) throw std::invalid_argument("average precision is undefined without positives");
    report.average_precision = sum / static_cast<double>(report.positives_count);
    return report;
}

APReport average_precision(const ParameterSet& params, std::span<const LabeledTriple> triples) {
    std::vector<ScoredLabel> items;
    items.reserve(triples.size());
    for (const auto& t : triples) items.push_back({score(params, t.r, t.s, t.o), t.y});
    return average_precision(items);
}

// ---------------------------------------------------------------------------

namespace {

std::string relation_label(RelationId r, const Vocabulary* vocab) {
    if (vocab && r < vocab->relation_count()) return vocab->relation_name(r);
    return std::to_string(r);
}

}  // namespace

void write_report_tsv(std::ostream& out, const RankingReport& report, const Vocabulary* vocab) {
    const auto old = out.precision(10);
    out << "metric\tvalue\n";
    out << "triples\t" << report.triple_count << '\n';
    out << "mrr_raw\t" << report.mrr_raw << '\n';
    out << "mrr_filtered\t" << report.mrr_filtered << '\n';
    for (auto [level, v] : report.hits_at) out << "hits@" << level << "\t" << v << '\n';
    for (auto [rel, v] : report.per_relation) out << "mrr_filtered[" << relation_label(rel, vocab) << "]\t" << v << '\n';
    out.precision(old);
}

void write_report_table(std::ostream& out, const RankingReport& report, const Vocabulary* vocab) {
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(3);
    out << "              MRR             Hits at\n";
    out << "  Filtered    Raw        1      3      10\n";
    out << "  " << std::setw(8) << report.mrr_filtered << "   " << std::setw(6) << report.mrr_raw << "   ";
    for (auto [level, v] : report.hits_at) out << std::setw(6) << v << ' ';
    out << "\n  (" << report.triple_count << " test triples, Hits on filtered ranks)\n\n";

    std::size_t width = 8;
    for (auto [rel, v] : report.per_relation) width = std::max(width, relation_label(rel, vocab).size());
    out << "  " << std::left << std::setw(static_cast<int>(width)) << "relation" << std::right
        << "  filtered MRR\n";
    for (auto [rel, v] : report.per_relation)
        out << "  " << std::left << std::setw(static_cast<int>(width)) << relation_label(rel, vocab) << std::right
            << "  " << std::setw(12) << v << '\n';
    out.flags(flags);
}

void write_report_tsv(std::ostream& out, const APReport& report) {
    const auto old = out.precision(10);
    out << "metric\tvalue\n";
    out << "average_precision\t" << report.average_precision << '\n';
    out << "positives\t" << report.positives_count << '\n';
    out << "total\t" << report.total_count << '\n';
    out.precision(old);
}

void write_report_table(std::ostream& out, const APReport& report) {
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(4);
    out << "  average precision  " << report.average_precision << "\n  positives          "
        << report.positives_count << " / " << report.total_count << '\n';
    out.flags(flags);
}

}  // namespace ckg
