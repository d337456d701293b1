#pragma once

#include "ckg/embedding.hpp"
#include "ckg/kg_data.hpp"
#include "ckg/scoring.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace ckg {

enum class LossKind { Logistic, MaxMargin };
std::string_view to_string(LossKind loss);
LossKind parse_loss_kind(std::string_view name);

struct TrainConfig {
    double alpha = 0.5;              // initial AdaGrad learning rate
    double lambda = 0.0;             // L2 weight
    std::size_t eta = 1;             // negatives per positive (positives-only data)
    std::size_t batch_count = 100;   // batches per epoch
    std::size_t max_iter = 1000;     // epochs
    std::size_t validate_every = 50; // epochs between validations
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Logistic;
    double margin = 1.0;  // max-margin loss; TransE uses the margin of its ModelKind
    double adagrad_eps = 1e-8;
    unsigned eval_threads = 1;

    /// Throws std::invalid_argument on alpha < 0, eta == 0, batch_count == 0,
    /// validate_every == 0, negative lambda or non-positive margin.
    void validate() const;
};

enum class StopReason { EarlyStop, MaxIter };
std::string_view to_string(StopReason reason);

enum class ValidationMetric { AveragePrecision, FilteredMRR };
std::string_view to_string(ValidationMetric metric);

struct TrainReport {
    std::size_t epochs_run = 0;
    ValidationMetric metric = ValidationMetric::AveragePrecision;
    std::vector<std::pair<std::size_t, double>> history;  // (epoch, metric)
    std::optional<std::size_t> best_epoch;
    StopReason stop_reason = StopReason::MaxIter;
    std::vector<double> epoch_loss;  // summed data loss per epoch
};

struct TrainResult {
    ParameterSet params;
    TrainReport report;
};

/// log(1 + exp(-y * phi)). The L2 term is applied per update in loss_gradient.
double logistic_loss(const ParameterSet& params, const LabeledTriple& triple);

/// -y sigma(-y phi) grad(phi) + 2 lambda v on every touched row v.
void loss_gradient(const ParameterSet& params, const LabeledTriple& triple, double lambda, SparseGradient& out);

/// max(0, margin + phi(neg) - phi(pos)).
double max_margin_loss(const ParameterSet& params, const LabeledTriple& pos, const LabeledTriple& neg,
                       double margin);

/// Subgradient of max_margin_loss plus 2 lambda v on every touched row; only the
/// regularizer remains when the margin is satisfied.
void max_margin_gradient(const ParameterSet& params, const LabeledTriple& pos, const LabeledTriple& neg,
                         double margin, double lambda, SparseGradient& out);

/// Local closed-world corruption: each negative copies `positive`, draws an entity
/// uniformly and puts it in the subject slot with probability 1/2, else the object slot.
std::vector<LabeledTriple> sample_negatives(const LabeledTriple& positive, std::size_t eta,
                                            std::size_t n_entities, std::mt19937_64& rng);

/// acc += g^2; v -= alpha * g / (sqrt(acc) + eps), per coordinate of every row in `grad`.
void adagrad_step(ParameterSet& params, const SparseGradient& grad, double alpha, double eps);

/// Scales every touched entity row of `grad` back into the unit L2 ball.
void project_entities_to_unit_ball(ParameterSet& params, const SparseGradient& grad);

/// Called after every validation with (epoch, metric value).
using ValidationObserver = std::function<void(std::size_t, double)>;

/// SGD with AdaGrad and early stopping. Without observed negatives in the training
/// data, eta negatives are generated per positive. Validation uses AP when the data
/// carries negatives and filtered MRR otherwise; training stops at the first
/// validation that does not improve on the previous one and returns the best
/// checkpoint. Throws DivergenceError on a non-finite batch loss.
TrainResult train(const DatasetSplit& split, const ModelKind& kind, std::size_t rank, const TrainConfig& config,
                  const ValidationObserver& observer = {});

/// Same loop starting from explicit parameters.
TrainResult train(const DatasetSplit& split, ParameterSet initial, const TrainConfig& config,
                  const ValidationObserver& observer = {});

/// sum over triples of the data loss plus lambda * ||Theta||^2.
double regularized_objective(const ParameterSet& params, std::span<const LabeledTriple> triples, double lambda);

}  // namespace ckg
