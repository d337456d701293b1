#include "ckg/training.hpp"

#include "ckg/errors.hpp"
#include "ckg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ckg {

std::string_view to_string(LossKind loss) { return loss == LossKind::Logistic ? "logistic" : "max-margin"; }

LossKind parse_loss_kind(std::string_view name) {
    if (name == "logistic") return LossKind::Logistic;
    if (name == "max-margin" || name == "margin") return LossKind::MaxMargin;
    throw std::invalid_argument("unknown loss '" + std::string(name) + "' (expected logistic or max-margin)");
}

std::string_view to_string(StopReason reason) { return reason == StopReason::EarlyStop ? "early-stop" : "max-iter"; }

std::string_view to_string(ValidationMetric metric) {
    return metric == ValidationMetric::AveragePrecision ? "average_precision" : "mrr_filtered";
}

void TrainConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("learning rate must be >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("L2 weight must be >= 0");
    if (eta == 0) throw std::invalid_argument("negative ratio must be >= 1");
    if (batch_count == 0) throw std::invalid_argument("batch count must be >= 1");
    if (validate_every == 0) throw std::invalid_argument("validate-every must be >= 1");
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
    if (!(adagrad_eps > 0.0)) throw std::invalid_argument("AdaGrad epsilon must be positive");
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void add_l2(const ParameterSet& params, double lambda, SparseGradient& grad) {
    if (lambda == 0.0) return;
    for (auto& g : grad.rows()) {
        const auto v = params.param(g.block).row(g.row);
        for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] += 2.0 * lambda * v[k];
    }
}

// Writes the loss gradient and returns the data loss at the current parameters.
double logistic_update_gradient(const ParameterSet& params, const LabeledTriple& t, double lambda,
                                SparseGradient& out) {
    const double phi = score(params, t.r, t.s, t.o);
    score_gradient(params, t.r, t.s, t.o, out);
    const double y = t.y;
    out.scale(-y * sigmoid(-y * phi));
    add_l2(params, lambda, out);
    return softplus(-y * phi);
}

double margin_update_gradient(const ParameterSet& params, const LabeledTriple& pos, const LabeledTriple& neg,
                              double margin, double lambda, SparseGradient& out, SparseGradient& scratch) {
    const double violation = margin + score(params, neg.r, neg.s, neg.o) - score(params, pos.r, pos.s, pos.o);
    out.clear();
    if (violation > 0.0) {
        score_gradient(params, neg.r, neg.s, neg.o, out);
        score_gradient(params, pos.r, pos.s, pos.o, scratch);
        for (const auto& g : scratch.rows()) {
            auto& dst = out.row(g.block, g.row, g.values.size()).values;
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= g.values[k];
        }
    } else {
        // Regularization still touches the rows of both triples.
        score_gradient(params, neg.r, neg.s, neg.o, scratch);
        for (const auto& g : scratch.rows()) out.row(g.block, g.row, g.values.size());
        score_gradient(params, pos.r, pos.s, pos.o, scratch);
        for (const auto& g : scratch.rows()) out.row(g.block, g.row, g.values.size());
    }
    add_l2(params, lambda, out);
    return std::max(0.0, violation);
}

double effective_margin(const ParameterSet& params, const TrainConfig& config) {
    return params.kind().is_transe() ? params.kind().margin() : config.margin;
}

}  // namespace

double logistic_loss(const ParameterSet& params, const LabeledTriple& triple) {
    return softplus(-static_cast<double>(triple.y) * score(params, triple.r, triple.s, triple.o));
}

void loss_gradient(const ParameterSet& params, const LabeledTriple& triple, double lambda, SparseGradient& out) {
    logistic_update_gradient(params, triple, lambda, out);
}

double max_margin_loss(const ParameterSet& params, const LabeledTriple& pos, const LabeledTriple& neg,
                       double margin) {
    return std::max(0.0, margin + score(params, neg.r, neg.s, neg.o) - score(params, pos.r, pos.s, pos.o));
}

void max_margin_gradient(const ParameterSet& params, const LabeledTriple& pos, const LabeledTriple& neg,
                         double margin, double lambda, SparseGradient& out) {
    SparseGradient scratch;
    margin_update_gradient(params, pos, neg, margin, lambda, out, scratch);
}

std::vector<LabeledTriple> sample_negatives(const LabeledTriple& positive, std::size_t eta, std::size_t n_entities,
                                            std::mt19937_64& rng) {
    if (n_entities == 0) throw std::invalid_argument("sample_negatives: empty vocabulary");
    std::uniform_int_distribution<std::size_t> pick(0, n_entities - 1);
    std::bernoulli_distribution coin(0.5);
    std::vector<LabeledTriple> out;
    out.reserve(eta);
    for (std::size_t l = 0; l < eta; ++l) {
        const auto e = static_cast<EntityId>(pick(rng));
        LabeledTriple neg = positive;
        neg.y = -1;
        if (coin(rng))
            neg.s = e;
        else
            neg.o = e;
        out.push_back(neg);
    }
    return out;
}

void adagrad_step(ParameterSet& params, const SparseGradient& grad, double alpha, double eps) {
    for (const auto& g : grad.rows()) {
        auto v = params.param(g.block).row(g.row);
        auto acc = params.accumulator(g.block).row(g.row);
        for (std::size_t k = 0; k < g.values.size(); ++k) {
            const double d = g.values[k];
            acc[k] += d * d;
            v[k] -= alpha * d / (std::sqrt(acc[k]) + eps);
        }
    }
}

void project_entities_to_unit_ball(ParameterSet& params, const SparseGradient& grad) {
    for (const auto& g : grad.rows()) {
        if (g.block != Block::EntRe) continue;
        auto v = params.param(Block::EntRe).row(g.row);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 1.0)
            for (double& x : v) x /= norm;
    }
}

double regularized_objective(const ParameterSet& params, std::span<const LabeledTriple> triples, double lambda) {
    double sum = 0.0;
    for (const auto& t : triples) sum += logistic_loss(params, t);
    return sum + lambda * l2_norm_squared(params);
}

TrainResult train(const DatasetSplit& split, const ModelKind& kind, std::size_t rank, const TrainConfig& config,
                  const ValidationObserver& observer) {
    auto params = init_parameters(kind, std::max<std::size_t>(1, split.vocabulary.entity_count()),
                                  std::max<std::size_t>(1, split.vocabulary.relation_count()), rank, config.seed);
    return train(split, std::move(params), config, observer);
}

TrainResult train(const DatasetSplit& split, ParameterSet initial, const TrainConfig& config,
                  const ValidationObserver& observer) {
    config.validate();
    if (split.train.empty()) throw std::invalid_argument("train: empty training set");
    for (const auto* list : {&split.train, &split.valid})
        for (const auto& t : *list) check_ids(initial, t.r, t.s, t.o);

    const bool closed_world = has_negatives(split.train);
    const bool use_ap = closed_world || has_negatives(split.valid);
    const double margin = effective_margin(initial, config);
    const bool project = config.loss == LossKind::MaxMargin && initial.kind().is_transe();
    const std::size_t n_entities = initial.entity_count();

    std::vector<LabeledTriple> train_positives;
    for (const auto& t : split.train)
        if (t.y > 0) train_positives.push_back(t);
    if (config.loss == LossKind::MaxMargin && train_positives.empty())
        throw std::invalid_argument("max-margin training needs at least one positive triple");

    TrainResult result{std::move(initial), {}};
    auto& params = result.params;
    auto& report = result.report;
    report.metric = use_ap ? ValidationMetric::AveragePrecision : ValidationMetric::FilteredMRR;

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t b = (split.train.size() + config.batch_count - 1) / config.batch_count;
    std::uniform_int_distribution<std::size_t> pick_train(0, split.train.size() - 1);

    SparseGradient grad, scratch;
    std::vector<LabeledTriple> batch, negatives, batch_pos, batch_neg;
    std::optional<ParameterSet> best;
    double previous_score = 0.0;

    auto apply = [&](const SparseGradient& g) {
        adagrad_step(params, g, config.alpha, config.adagrad_eps);
        if (project) project_entities_to_unit_ball(params, g);
    };

    for (std::size_t epoch = 1; epoch <= config.max_iter; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t j = 0; j < config.batch_count; ++j) {
            batch.clear();
            for (std::size_t i = 0; i < b; ++i) batch.push_back(split.train[pick_train(rng)]);
            double batch_loss = 0.0;

            if (config.loss == LossKind::Logistic) {
                negatives.clear();
                if (!closed_world)
                    for (const auto& t : batch) {
                        auto negs = sample_negatives(t, config.eta, n_entities, rng);
                        negatives.insert(negatives.end(), negs.begin(), negs.end());
                    }
                for (const auto* list : {&batch, &negatives})
                    for (const auto& t : *list) {
                        batch_loss += logistic_update_gradient(params, t, config.lambda, grad);
                        apply(grad);
                    }
            } else if (!closed_world) {
                for (const auto& pos : batch)
                    for (const auto& neg : sample_negatives(pos, config.eta, n_entities, rng)) {
                        batch_loss += margin_update_gradient(params, pos, neg, margin, config.lambda, grad, scratch);
                        apply(grad);
                    }
            } else {
                batch_pos.clear();
                batch_neg.clear();
                for (const auto& t : batch) (t.y > 0 ? batch_pos : batch_neg).push_back(t);
                if (batch_pos.empty()) {
                    std::uniform_int_distribution<std::size_t> pick(0, train_positives.size() - 1);
                    batch_pos.push_back(train_positives[pick(rng)]);
                }
                // Replicate whichever side is shorter so every triple takes part in a pair.
                const std::size_t pairs = batch_neg.empty() ? 0 : std::max(batch_pos.size(), batch_neg.size());
                for (std::size_t i = 0; i < pairs; ++i) {
                    batch_loss += margin_update_gradient(params, batch_pos[i % batch_pos.size()],
                                                         batch_neg[i % batch_neg.size()], margin, config.lambda,
                                                         grad, scratch);
                    apply(grad);
                }
            }

            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "training diverged: non-finite loss in epoch " << epoch << ", batch " << j + 1
                    << " (try a smaller learning rate or a larger L2 weight)";
                throw DivergenceError(msg.str());
            }
            epoch_loss += batch_loss;
        }
        report.epoch_loss.push_back(epoch_loss);
        report.epochs_run = epoch;

        if (epoch % config.validate_every == 0 && !split.valid.empty()) {
            const double current =
                use_ap ? average_precision(params, split.valid).average_precision
                       : ranking_metrics(params, split.valid, split.all_known_positives, config.eval_threads)
                             .mrr_filtered;
            report.history.emplace_back(epoch, current);
            if (observer) observer(epoch, current);
            if (current <= previous_score) {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
            previous_score = current;
            best = params;
            report.best_epoch = epoch;
        }
    }

    if (best) params = std::move(*best);
    return result;
}

}  // namespace ckg
