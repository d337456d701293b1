#include "ckg/cli.hpp"

#include "ckg/embedding.hpp"
#include "ckg/errors.hpp"
#include "ckg/evaluation.hpp"
#include "ckg/kg_data.hpp"
#include "ckg/manifest.hpp"
#include "ckg/pca.hpp"
#include "ckg/scoring.hpp"
#include "ckg/spectral.hpp"
#include "ckg/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ckg {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// State shared by every command: the manifest being filled and buffered stdout.
struct Run {
    RunManifest manifest;
    fs::path manifest_path;
    std::ostringstream out;

    void input(const std::string& role, const fs::path& path) {
        manifest.inputs.push_back({role, path.string(), sha256_file(path)});
    }
    void output(const std::string& role, const fs::path& path) {
        manifest.outputs.push_back({role, path.string(), sha256_file(path)});
    }
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

bool resolve_labels(const std::string& mode, const fs::path& path) {
    if (mode == "yes") return true;
    if (mode == "no") return false;
    return detect_labels(path);
}

void require_file(const fs::path& path, std::string_view what) {
    if (!fs::is_regular_file(path)) throw std::runtime_error(std::string(what) + " '" + path.string() + "' not found");
}

struct LoadedModel {
    ParameterSet params;
    Vocabulary vocabulary;
};

LoadedModel load_model(const fs::path& path, Run& run) {
    require_file(path, "model file");
    const auto vocab_path = with_suffix(path, ".vocab");
    require_file(vocab_path, "vocabulary file");
    run.input("model", path);
    run.input("vocabulary", vocab_path);
    LoadedModel m{load_parameters(path), read_vocabulary(vocab_path)};
    if (m.vocabulary.entity_count() != m.params.entity_count() ||
        m.vocabulary.relation_count() != m.params.relation_count())
        throw std::runtime_error("vocabulary mismatch: model has " + std::to_string(m.params.entity_count()) +
                                 " entities and " + std::to_string(m.params.relation_count()) +
                                 " relations, vocabulary file lists " + std::to_string(m.vocabulary.entity_count()) +
                                 " and " + std::to_string(m.vocabulary.relation_count()));
    return m;
}

// Parses a data file against the model vocabulary; any unseen name is an error.
std::vector<LabeledTriple> load_against(const fs::path& path, bool has_labels, const Vocabulary& vocab) {
    Vocabulary extended = vocab;
    auto triples = load_tsv(path, has_labels, extended);
    if (extended.entity_count() != vocab.entity_count())
        throw std::runtime_error("vocabulary mismatch: " + path.string() + " mentions entity '" +
                                 extended.entity_name(static_cast<EntityId>(vocab.entity_count())) +
                                 "', which the model does not know");
    if (extended.relation_count() != vocab.relation_count())
        throw std::runtime_error("vocabulary mismatch: " + path.string() + " mentions relation '" +
                                 extended.relation_name(static_cast<RelationId>(vocab.relation_count())) +
                                 "', which the model does not know");
    return triples;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    std::string model = "complex";
    std::size_t rank = 20;
    double lr = 0.5;
    double l2 = 0.0;
    std::size_t neg_ratio = 1;
    std::size_t batches = 100;
    std::size_t max_iter = 1000;
    std::size_t validate_every = 50;
    std::string loss = "logistic";
    double margin = 1.0;
    int norm = 2;
    std::uint64_t seed = 0;
    std::string train;
    std::string valid;
    std::string out;
    std::string labels = "auto";
    unsigned threads = 1;
    CLI::Option* margin_opt = nullptr;
    CLI::Option* norm_opt = nullptr;
};

void write_train_report(const fs::path& path, const TrainResult& result, const ModelKind& kind, std::size_t rank) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto& r = result.report;
    out << std::setprecision(10);
    out << "key\tvalue\n";
    out << "model\t" << kind.describe() << '\n';
    out << "rank\t" << rank << '\n';
    out << "metric\t" << to_string(r.metric) << '\n';
    out << "epochs_run\t" << r.epochs_run << '\n';
    out << "best_epoch\t" << (r.best_epoch ? std::to_string(*r.best_epoch) : "none") << '\n';
    out << "stop_reason\t" << to_string(r.stop_reason) << '\n';
    for (const auto& [epoch, value] : r.history) out << "validation@" << epoch << '\t' << value << '\n';
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) out << "loss@" << e + 1 << '\t' << r.epoch_loss[e] << '\n';
}

int run_train(const TrainOptions& o, Run& run, std::ostream& err) {
    const auto type = parse_model_type(o.model);
    const auto loss = parse_loss_kind(o.loss);
    if (o.margin_opt->count() > 0 && loss != LossKind::MaxMargin)
        throw UsageError("--margin requires --loss max-margin");
    if (o.norm_opt->count() > 0 && type != ModelType::TransE) throw UsageError("--norm applies to --model transe only");
    if (o.rank == 0) throw UsageError("--rank must be at least 1");

    const ModelKind kind = type == ModelType::TransE ? ModelKind::transe(o.norm, o.margin) : ModelKind(type);
    TrainConfig config;
    config.alpha = o.lr;
    config.lambda = o.l2;
    config.eta = o.neg_ratio;
    config.batch_count = o.batches;
    config.max_iter = o.max_iter;
    config.validate_every = o.validate_every;
    config.seed = o.seed;
    config.loss = loss;
    config.margin = o.margin;
    config.eval_threads = std::max(1u, o.threads);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    require_file(o.train, "training file");
    if (!o.valid.empty()) require_file(o.valid, "validation file");
    run.input("train", o.train);
    if (!o.valid.empty()) run.input("valid", o.valid);
    const bool labels = resolve_labels(o.labels, o.train);
    const auto split = load_split(o.train, o.valid.empty() ? std::nullopt : std::optional<fs::path>(o.valid),
                                  std::nullopt, labels);
    err << "loaded " << split.train.size() << " training and " << split.valid.size() << " validation triples ("
        << split.vocabulary.entity_count() << " entities, " << split.vocabulary.relation_count() << " relations)\n";

    auto result = train(split, kind, o.rank, config, [&](std::size_t epoch, double value) {
        err << "epoch " << epoch << "  validation " << std::fixed << std::setprecision(4) << value
            << std::defaultfloat << '\n';
    });

    const fs::path model_path = o.out;
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    save_parameters(result.params, model_path);
    write_vocabulary(with_suffix(model_path, ".vocab"), split.vocabulary);
    write_train_report(with_suffix(model_path, ".report.tsv"), result, kind, o.rank);
    run.output("model", model_path);
    run.output("vocabulary", with_suffix(model_path, ".vocab"));
    run.output("report", with_suffix(model_path, ".report.tsv"));

    const auto& r = result.report;
    run.out << "model        " << kind.describe() << "  K=" << o.rank << '\n';
    run.out << "epochs run   " << r.epochs_run << " (" << to_string(r.stop_reason) << ")\n";
    if (r.best_epoch) {
        const auto best = std::find_if(r.history.begin(), r.history.end(),
                                       [&](const auto& h) { return h.first == *r.best_epoch; });
        run.out << "best epoch   " << *r.best_epoch << "  " << to_string(r.metric) << ' ' << std::fixed
                << std::setprecision(4) << best->second << std::defaultfloat << '\n';
    } else {
        run.out << "best epoch   none (no validation ran; final parameters kept)\n";
    }
    run.out << "saved        " << model_path.string() << '\n';
    return all_finite(result.params) ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::string model;
    std::string test;
    std::vector<std::string> filter;
    std::string labels = "auto";
    std::string out;
    unsigned threads = 1;
};

void write_raw_table(std::ostream& out, const RankingReport& report, const Vocabulary& vocab) {
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(3);
    out << "  Raw MRR   Hits at 1      3      10  (raw ranks)\n";
    out << "  " << std::setw(7) << report.mrr_raw << "   ";
    for (auto [level, v] : report.hits_at) out << std::setw(6) << v << ' ';
    out << "\n  (" << report.triple_count << " test triples)\n\n";
    std::size_t width = 8;
    for (auto [rel, v] : report.per_relation) width = std::max(width, vocab.relation_name(rel).size());
    out << "  " << std::left << std::setw(static_cast<int>(width)) << "relation" << std::right << "  raw MRR\n";
    for (auto [rel, v] : report.per_relation)
        out << "  " << std::left << std::setw(static_cast<int>(width)) << vocab.relation_name(rel) << std::right
            << "  " << std::setw(7) << v << '\n';
    out.flags(flags);
}

void write_raw_tsv(std::ostream& out, const RankingReport& report, const Vocabulary& vocab) {
    const auto old = out.precision(10);
    out << "metric\tvalue\n";
    out << "triples\t" << report.triple_count << '\n';
    out << "mrr_raw\t" << report.mrr_raw << '\n';
    for (auto [level, v] : report.hits_at) out << "hits@" << level << "_raw\t" << v << '\n';
    for (auto [rel, v] : report.per_relation) out << "mrr_raw[" << vocab.relation_name(rel) << "]\t" << v << '\n';
    out.precision(old);
}

int run_eval(const EvalOptions& o, Run& run, std::ostream& err) {
    const auto model = load_model(o.model, run);
    require_file(o.test, "test file");
    run.input("test", o.test);
    const auto test = load_against(o.test, resolve_labels(o.labels, o.test), model.vocabulary);
    if (test.empty()) throw std::runtime_error("test file " + o.test + " holds no triples");

    std::ostringstream tsv;
    if (has_negatives(test)) {
        const auto report = average_precision(model.params, test);
        run.out << "average precision over " << test.size() << " labeled test triples\n";
        write_report_table(run.out, report);
        write_report_tsv(tsv, report);
    } else if (o.filter.empty()) {
        err << "warning: no --filter files given; reporting raw metrics only\n";
        const auto report = raw_ranking_metrics(model.params, test, std::max(1u, o.threads));
        write_raw_table(run.out, report, model.vocabulary);
        write_raw_tsv(tsv, report, model.vocabulary);
    } else {
        TripleSet known;
        for (const auto& path : o.filter) {
            require_file(path, "filter file");
            run.input("filter", path);
            for (const auto& t : load_against(path, detect_labels(path), model.vocabulary))
                if (t.y > 0) known.insert(key_of(t));
        }
        for (const auto& t : test) known.insert(key_of(t));
        const auto report = ranking_metrics(model.params, test, known, std::max(1u, o.threads));
        write_report_table(run.out, report, &model.vocabulary);
        write_report_tsv(tsv, report, &model.vocabulary);
    }

    if (!o.out.empty()) {
        std::ofstream file(o.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot write " + o.out);
        file << tsv.str();
        file.close();
        run.output("report", o.out);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
    std::string model;
    std::string relation;
    std::string subject;
    std::string object;
    std::size_t top_k = 10;
};

int run_predict(const PredictOptions& o, Run& run, std::ostream&) {
    if (o.subject.empty() == o.object.empty()) throw UsageError("give exactly one of --subject or --object");
    const auto model = load_model(o.model, run);
    const auto r = model.vocabulary.find_relation(o.relation);
    if (!r) throw std::runtime_error("unknown relation '" + o.relation + "'");
    const bool fill_object = !o.subject.empty();
    const auto& anchor_name = fill_object ? o.subject : o.object;
    const auto anchor = model.vocabulary.find_entity(anchor_name);
    if (!anchor) throw std::runtime_error("unknown entity '" + anchor_name + "'");

    const auto n = static_cast<EntityId>(model.params.entity_count());
    std::vector<std::pair<double, EntityId>> scored;
    scored.reserve(n);
    for (EntityId e = 0; e < n; ++e)
        scored.emplace_back(fill_object ? score(model.params, *r, *anchor, e) : score(model.params, *r, e, *anchor), e);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const std::size_t k = std::min<std::size_t>(o.top_k, scored.size());

    run.out << "rank\t" << (fill_object ? "object" : "subject") << "\tscore\tprobability\n";
    run.out << std::setprecision(6);
    for (std::size_t i = 0; i < k; ++i)
        run.out << i + 1 << '\t' << model.vocabulary.entity_name(scored[i].second) << '\t' << scored[i].first << '\t'
                << sigmoid(scored[i].first) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
    std::size_t n = 30;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_synth(const SynthOptions& o, Run& run, std::ostream&) {
    const auto tensor = generate_synthetic(o.n, o.seed);
    const auto vocab = tensor.vocabulary();
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);

    auto emit = [&](const fs::path& path, const std::vector<LabeledTriple>& triples) {
        write_tsv(path, triples, vocab, true);
        run.output(path.lexically_relative(dir).generic_string(), path);
    };

    const auto always = tensor.always_train();
    emit(dir / "always_train.tsv", always);
    std::vector<LabeledTriple> cells = always;
    std::vector<int> cell_folds(always.size(), SyntheticTensor::kAlwaysTrain);
    for (int f = 0; f < SyntheticTensor::kFolds; ++f) {
        const auto fold = tensor.fold_triples(f);
        emit(dir / ("fold_" + std::to_string(f) + ".tsv"), fold);
        cells.insert(cells.end(), fold.begin(), fold.end());
        cell_folds.insert(cell_folds.end(), fold.size(), f);
    }
    emit(dir / "cells.tsv", cells);
    write_fold_file(dir / "cells.folds", cell_folds);
    run.output("cells.folds", dir / "cells.folds");

    run.out << "entities " << o.n << ", relations 2 (symmetric, antisymmetric)\n";
    run.out << "always-train " << always.size() << '\n';
    for (int f = 0; f < SyntheticTensor::kFolds; ++f) {
        const auto split = tensor.split(f);
        const fs::path sub = dir / ("split_" + std::to_string(f));
        fs::create_directories(sub);
        emit(sub / "train.tsv", split.train);
        emit(sub / "valid.tsv", split.valid);
        emit(sub / "test.tsv", split.test);
        run.out << "split " << f << ": train " << split.train.size() << ", valid " << split.valid.size() << ", test "
                << split.test.size() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// spectral

struct SpectralOptions {
    std::string action;
    std::vector<std::string> matrix;
    std::string complex_matrix;
    std::size_t random_n = 0;
    std::size_t count = 2;
    std::size_t k = 0;
    std::size_t rank = 0;
    bool lift = false;
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* random_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* rank_opt = nullptr;
};

class CheckPrinter {
public:
    explicit CheckPrinter(std::ostream& out) : out_(out) {}

    // Passes when residual <= tol.
    void check(const std::string& name, double residual, double tol) {
        const bool ok = residual <= tol;
        failed_ |= !ok;
        const auto flags = out_.flags();
        out_ << (ok ? "PASS  " : "FAIL  ") << std::left << std::setw(34) << name << std::right << "residual "
             << std::scientific << std::setprecision(3) << residual << "  tol " << tol << '\n';
        out_.flags(flags);
    }
    void check_count(const std::string& name, std::size_t value, std::size_t limit) {
        const bool ok = value <= limit;
        failed_ |= !ok;
        out_ << (ok ? "PASS  " : "FAIL  ") << std::left << std::setw(34) << name << std::right << "value " << value
             << "  limit " << limit << '\n';
    }
    bool failed() const { return failed_; }

private:
    std::ostream& out_;
    bool failed_ = false;
};

RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    RealMatrix m(rows, cols);
    for (double& v : m.values()) v = normal(rng);
    return m;
}

double max_abs(const RealMatrix& m) {
    double worst = 0.0;
    for (double v : m.values()) worst = std::max(worst, std::abs(v));
    return worst;
}

void write_grid_file(const fs::path& path, const ComplexMatrix& m, Run& run, const std::string& role) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_complex_grid(out, m);
    out.close();
    run.output(role, path);
}

ComplexMatrix row_of(std::span<const Complex> values) {
    ComplexMatrix m(1, values.size());
    for (std::size_t j = 0; j < values.size(); ++j) m.set(0, j, values[j]);
    return m;
}

int run_spectral(const SpectralOptions& o, Run& run, std::ostream&) {
    const bool random = o.random_opt->count() > 0;
    const std::size_t sources = (random ? 1 : 0) + (o.matrix.empty() ? 0 : 1) + (o.complex_matrix.empty() ? 0 : 1);
    if (sources != 1) throw UsageError("give exactly one of --matrix, --complex-matrix or --random");
    if (random && o.seed_opt->count() == 0) throw UsageError("--random requires an explicit --seed");
    if (o.action != "blocks" && o.matrix.size() > 1) throw UsageError("only 'blocks' accepts several --matrix files");
    if (!o.complex_matrix.empty() && o.action != "check" && o.action != "diag")
        throw UsageError("--complex-matrix applies to 'check' and 'diag' only");
    if (o.action == "rank-bound" && o.k_opt->count() == 0) throw UsageError("rank-bound requires --k");
    if (o.rank_opt->count() > 0 && !(random && o.action == "rank-bound"))
        throw UsageError("--rank applies to rank-bound with --random only");

    std::mt19937_64 rng(o.seed);
    std::vector<RealMatrix> inputs;
    std::optional<ComplexMatrix> complex_input;
    if (random) {
        const std::size_t n = o.random_n;
        if (n == 0) throw UsageError("--random needs n >= 1");
        if (o.action == "rank-bound") {
            const std::size_t r = o.rank_opt->count() > 0 ? o.rank : o.k;
            inputs.push_back(random_matrix(n, r, rng) * random_matrix(n, r, rng).transposed());
        } else {
            const std::size_t m = o.action == "blocks" ? o.count : 1;
            for (std::size_t i = 0; i < m; ++i) inputs.push_back(random_matrix(n, n, rng));
        }
    } else if (!o.complex_matrix.empty()) {
        require_file(o.complex_matrix, "matrix file");
        run.input("matrix", o.complex_matrix);
        std::ifstream in(o.complex_matrix);
        complex_input = read_complex_grid(in);
    } else {
        for (const auto& path : o.matrix) {
            require_file(path, "matrix file");
            run.input("matrix", path);
            inputs.push_back(read_real_grid(fs::path(path)));
        }
    }
    for (const auto& X : inputs)
        if (!X.is_square())
            throw SpectralError("matrix is " + std::to_string(X.rows()) + "x" + std::to_string(X.cols()) +
                                ", not square");
    if (complex_input && !complex_input->is_square())
        throw SpectralError("matrix is " + std::to_string(complex_input->rows()) + "x" +
                            std::to_string(complex_input->cols()) + ", not square");

    CheckPrinter checks(run.out);
    const fs::path prefix = o.out;

    // The matrix the check/diag actions operate on.
    auto subject = [&]() -> ComplexMatrix {
        if (complex_input) {
            if (o.lift) throw UsageError("--lift needs a real matrix");
            return *complex_input;
        }
        return o.lift || random ? lift_to_normal(inputs.front()) : ComplexMatrix::from_real(inputs.front());
    };

    if (o.action == "lift") {
        const auto& X = inputs.front();
        const auto Z = lift_to_normal(X);
        const double scale = std::max(1.0, std::pow(frobenius_norm(Z), 2));
        checks.check("Re(Z) equals X", max_abs(Z.re() - X), 0.0);
        checks.check("Im(Z) equals X^T", max_abs(Z.im() - X.transposed()), 0.0);
        checks.check("normality ||ZZ*-Z*Z||/||Z||^2", commutator_residual(Z) / scale, 1e-12);
        if (!o.out.empty()) write_grid_file(with_suffix(prefix, ".Z.tsv"), Z, run, "Z");
    } else if (o.action == "check") {
        const auto Z = subject();
        const double scale = std::max(1.0, std::pow(frobenius_norm(Z), 2));
        checks.check("normality ||ZZ*-Z*Z||/||Z||^2", commutator_residual(Z) / scale, 1e-12);
    } else if (o.action == "diag") {
        const auto Z = subject();
        const auto d = diagonalize_normal(Z);
        checks.check("unitarity max|E*E-I|", d.unitarity_residual(), 1e-8);
        checks.check("reconstruction ||EWE*-Z||/||Z||",
                     frobenius_norm(d.reconstruct() - Z) / std::max(1.0, frobenius_norm(Z)), 1e-8);
        if (!complex_input && (o.lift || random)) {
            const auto& X = inputs.front();
            checks.check("real part ||Re(EWE*)-X||/||X||",
                         frobenius_norm(real_part_reconstruction(d.E, d.W) - X) / std::max(1.0, frobenius_norm(X)),
                         1e-8);
        }
        run.out << "eigenvalues (|w| descending):\n" << std::setprecision(10);
        for (const auto& w : d.W) run.out << "  " << w.real() << (w.imag() < 0 ? " - " : " + ") << std::abs(w.imag()) << "i\n";
        if (!o.out.empty()) {
            write_grid_file(with_suffix(prefix, ".E.tsv"), d.E, run, "E");
            write_grid_file(with_suffix(prefix, ".W.tsv"), row_of(d.W), run, "W");
        }
    } else if (o.action == "rank-bound") {
        const auto& X = inputs.front();
        run.out << "numerical rank " << numerical_rank(X) << ", k = " << o.k << '\n';
        const auto d = rank_bounded_decomposition(X, o.k);
        checks.check_count("retained columns <= 2k", d.columns(), 2 * o.k);
        checks.check("unitarity max|E*E-I|", d.unitarity_residual(), 1e-8);
        checks.check("real part ||Re(EWE*)-X||/||X||",
                     frobenius_norm(real_part_reconstruction(d.E, d.W) - X) / std::max(1.0, frobenius_norm(X)), 1e-6);
        if (!o.out.empty()) {
            write_grid_file(with_suffix(prefix, ".E.tsv"), d.E, run, "E");
            write_grid_file(with_suffix(prefix, ".W.tsv"), row_of(d.W), run, "W");
        }
    } else if (o.action == "blocks") {
        const auto b = block_tensor_decomposition(inputs);
        const std::size_t n = inputs.front().rows();
        checks.check_count("columns of E = n*m", b.E.cols(), n * inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto label = "X_" + std::to_string(i + 1);
            checks.check(label + " ||Re(E L E*)-X||/||X||",
                         frobenius_norm(b.reconstruct(i) - inputs[i]) / std::max(1.0, frobenius_norm(inputs[i])), 1e-8);
            double outside = 0.0;
            for (std::size_t j = 0; j < b.lambdas[i].size(); ++j)
                if (j / n != i) outside = std::max(outside, std::abs(b.lambdas[i][j]));
            checks.check(label + " diagonal zero outside block", outside, 0.0);
        }
        if (!o.out.empty()) {
            write_grid_file(with_suffix(prefix, ".E.tsv"), b.E, run, "E");
            ComplexMatrix lambdas(b.lambdas.size(), b.E.cols());
            for (std::size_t i = 0; i < b.lambdas.size(); ++i)
                for (std::size_t j = 0; j < b.E.cols(); ++j) lambdas.set(i, j, b.lambdas[i][j]);
            write_grid_file(with_suffix(prefix, ".W.tsv"), lambdas, run, "W");
        }
    }
    return checks.failed() ? kExitCheckFailed : kExitOk;
}

// ---------------------------------------------------------------------------
// export-pca

struct PcaOptions {
    std::string model;
    std::size_t components = 2;
    std::string out;
};

int run_export_pca(const PcaOptions& o, Run& run, std::ostream&) {
    const auto model = load_model(o.model, run);
    const auto data = relation_embedding_matrix(model.params);
    const auto pca = principal_components(data, o.components);

    std::ofstream file(o.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + o.out);
    file << "relation";
    for (std::size_t c = 0; c < o.components; ++c) file << "\tc" << c + 1;
    file << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        file << model.vocabulary.relation_name(static_cast<RelationId>(r));
        for (std::size_t c = 0; c < o.components; ++c) file << '\t' << pca.coordinates(r, c);
        file << '\n';
    }
    file.close();
    run.output("projection", o.out);

    run.out << "projected " << data.rows() << " relations from " << data.cols() << " dimensions\n";
    run.out << "component\tvariance\n" << std::setprecision(6);
    for (std::size_t c = 0; c < o.components; ++c) run.out << c + 1 << '\t' << pca.variances[c] << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::optional<fs::path>& manifest_override);

int run_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const auto original = read_manifest(manifest_path);
    if (original.command == "replay") throw UsageError("cannot replay a replay");
    bool ok = true;
    for (const auto& f : original.inputs) {
        const bool same = fs::is_regular_file(f.path) && sha256_file(f.path) == f.sha256;
        out << (same ? "PASS  input  " : "FAIL  input  ") << f.role << "  " << f.path << '\n';
        ok &= same;
    }
    if (!ok) {
        err << "error: inputs changed since the recorded run; not replaying\n";
        return kExitCheckFailed;
    }
    const auto replay_manifest = with_suffix(manifest_path, ".replay");
    std::ostringstream replay_out;
    const int code = dispatch(original.args, replay_out, err, replay_manifest);
    const auto replayed = read_manifest(replay_manifest);
    for (const auto& f : original.outputs) {
        const auto match = std::find_if(replayed.outputs.begin(), replayed.outputs.end(),
                                        [&](const FileRecord& g) { return g.role == f.role && g.path == f.path; });
        const bool same = match != replayed.outputs.end() && match->sha256 == f.sha256;
        out << (same ? "PASS  output " : "FAIL  output ") << f.role << "  " << f.path << '\n';
        ok &= same;
    }
    const bool status_same = replayed.status == original.status;
    out << (status_same ? "PASS  status " : "FAIL  status ") << replayed.status << '\n';
    ok &= status_same;
    (void)code;
    return ok ? kExitOk : kExitCheckFailed;
}

void record_config(const CLI::App& sub, RunManifest& manifest) {
    for (const CLI::Option* opt : sub.get_options()) {
        const auto name = opt->get_name();
        if (name.empty() || name == "--help" || name == "-h") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
        } else {
            value = opt->get_default_str();
        }
        manifest.config.emplace_back(name, value);
    }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::optional<fs::path>& manifest_override) {
    CLI::App app{"Knowledge-graph completion with complex embeddings, plus a spectral verification lab.", "ckg"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    TrainOptions train_o;
    auto* train_cmd = app.add_subcommand("train", "Train an embedding model with SGD and AdaGrad");
    train_cmd->add_option("--model", train_o.model, "Model kind")
        ->check(CLI::IsMember({"complex", "distmult", "cp", "transe", "rescal"}));
    train_cmd->add_option("--rank", train_o.rank, "Embedding rank K");
    train_cmd->add_option("--lr", train_o.lr, "Initial AdaGrad learning rate");
    train_cmd->add_option("--l2", train_o.l2, "L2 regularization weight");
    train_cmd->add_option("--neg-ratio", train_o.neg_ratio, "Generated negatives per positive");
    train_cmd->add_option("--batches", train_o.batches, "Batches per epoch");
    train_cmd->add_option("--max-iter", train_o.max_iter, "Maximum number of epochs");
    train_cmd->add_option("--validate-every", train_o.validate_every, "Epochs between validations");
    train_cmd->add_option("--loss", train_o.loss, "Loss")->check(CLI::IsMember({"logistic", "max-margin"}));
    train_o.margin_opt = train_cmd->add_option("--margin", train_o.margin, "Margin for the max-margin loss");
    train_o.norm_opt = train_cmd->add_option("--norm", train_o.norm, "TransE norm order")->check(CLI::IsMember({1, 2}));
    train_cmd->add_option("--seed", train_o.seed, "Random seed")->required();
    train_cmd->add_option("--train", train_o.train, "Training triples (TSV)")->required();
    train_cmd->add_option("--valid", train_o.valid, "Validation triples (TSV)");
    train_cmd->add_option("--out", train_o.out, "Output model file")->required();
    train_cmd->add_option("--labels", train_o.labels, "Whether files carry a label column")
        ->check(CLI::IsMember({"auto", "yes", "no"}));
    train_cmd->add_option("--threads", train_o.threads, "Threads for validation ranking");

    EvalOptions eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model: MRR/Hits@N or average precision");
    eval_cmd->add_option("--model", eval_o.model, "Model file")->required();
    eval_cmd->add_option("--test", eval_o.test, "Test triples (TSV)")->required();
    eval_cmd->add_option("--filter", eval_o.filter, "Files whose positives are filtered (repeatable)");
    eval_cmd->add_option("--labels", eval_o.labels, "Whether the test file carries labels")
        ->check(CLI::IsMember({"auto", "yes", "no"}));
    eval_cmd->add_option("--out", eval_o.out, "Write the report as TSV");
    eval_cmd->add_option("--threads", eval_o.threads, "Ranking threads");

    PredictOptions predict_o;
    auto* predict_cmd = app.add_subcommand("predict", "Rank candidate subjects or objects for a query");
    predict_cmd->add_option("--model", predict_o.model, "Model file")->required();
    predict_cmd->add_option("--relation", predict_o.relation, "Relation name")->required();
    predict_cmd->add_option("--subject", predict_o.subject, "Known subject; objects are ranked");
    predict_cmd->add_option("--object", predict_o.object, "Known object; subjects are ranked");
    predict_cmd->add_option("--top-k", predict_o.top_k, "Number of candidates to print");

    SynthOptions synth_o;
    auto* synth_cmd = app.add_subcommand("synth", "Generate the symmetric/antisymmetric synthetic task");
    synth_cmd->add_option("--n", synth_o.n, "Number of entities")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    synth_cmd->add_option("--seed", synth_o.seed, "Random seed")->required();
    synth_cmd->add_option("--out-dir", synth_o.out_dir, "Output directory")->required();

    SpectralOptions spectral_o;
    auto* spectral_cmd = app.add_subcommand("spectral", "Verify normal-matrix constructions on concrete matrices");
    spectral_cmd->add_option("action", spectral_o.action, "lift | check | diag | rank-bound | blocks")
        ->required()
        ->check(CLI::IsMember({"lift", "check", "diag", "rank-bound", "blocks"}));
    spectral_cmd->add_option("--matrix", spectral_o.matrix, "Real matrix grid (repeatable for blocks)");
    spectral_cmd->add_option("--complex-matrix", spectral_o.complex_matrix, "Complex matrix grid of 're im' cells");
    spectral_o.random_opt = spectral_cmd->add_option("--random", spectral_o.random_n, "Random n x n input");
    spectral_cmd->add_option("--count", spectral_o.count, "Number of random matrices for blocks")
        ->check(CLI::PositiveNumber);
    spectral_o.k_opt = spectral_cmd->add_option("--k", spectral_o.k, "Rank bound for rank-bound");
    spectral_o.rank_opt = spectral_cmd->add_option("--rank", spectral_o.rank, "Rank of the random rank-bound input");
    spectral_cmd->add_flag("--lift", spectral_o.lift, "Lift a real input to X + iX^T before check/diag");
    spectral_o.seed_opt = spectral_cmd->add_option("--seed", spectral_o.seed, "Random seed");
    spectral_cmd->add_option("--out", spectral_o.out, "Prefix for result grids");

    PcaOptions pca_o;
    auto* pca_cmd = app.add_subcommand("export-pca", "Project relation embeddings on principal components");
    pca_cmd->add_option("--model", pca_o.model, "Model file")->required();
    pca_cmd->add_option("--components", pca_o.components, "Number of components");
    pca_cmd->add_option("--out", pca_o.out, "Output TSV")->required();

    std::string replay_path;
    auto* replay_cmd = app.add_subcommand("replay", "Rerun a command from its manifest and compare outputs");
    replay_cmd->add_option("manifest", replay_path, "Manifest file")->required();

    std::string manifest_flag;
    for (auto* sub : {train_cmd, eval_cmd, predict_cmd, synth_cmd, spectral_cmd, pca_cmd})
        sub->add_option("--manifest", manifest_flag, "Where to write the run manifest");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    if (replay_cmd->parsed()) {
        try {
            return run_replay(replay_path, out, err);
        } catch (const UsageError& e) {
            err << "usage error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitError;
        }
    }

    CLI::App* sub = app.get_subcommands().front();
    Run run;
    run.manifest.command = sub->get_name();
    run.manifest.args = args;
    record_config(*sub, run.manifest);

    const std::string name = sub->get_name();
    if (manifest_override) {
        run.manifest_path = *manifest_override;
    } else if (!manifest_flag.empty()) {
        run.manifest_path = manifest_flag;
    } else if (name == "train") {
        run.manifest_path = with_suffix(train_o.out, ".manifest");
    } else if (name == "synth") {
        run.manifest_path = fs::path(synth_o.out_dir) / "manifest.txt";
    } else if (name == "eval" && !eval_o.out.empty()) {
        run.manifest_path = with_suffix(eval_o.out, ".manifest");
    } else if (name == "spectral" && !spectral_o.out.empty()) {
        run.manifest_path = with_suffix(spectral_o.out, ".manifest");
    } else if (name == "export-pca") {
        run.manifest_path = with_suffix(pca_o.out, ".manifest");
    } else {
        run.manifest_path = "ckg-" + name + ".manifest";
    }

    const auto start = std::chrono::steady_clock::now();
    int code = kExitError;
    try {
        if (name == "train") {
            run.manifest.seed = train_o.seed;
            code = run_train(train_o, run, err);
        } else if (name == "eval") {
            code = run_eval(eval_o, run, err);
        } else if (name == "predict") {
            code = run_predict(predict_o, run, err);
        } else if (name == "synth") {
            run.manifest.seed = synth_o.seed;
            code = run_synth(synth_o, run, err);
        } else if (name == "spectral") {
            if (spectral_o.seed_opt->count() > 0) run.manifest.seed = spectral_o.seed;
            code = run_spectral(spectral_o, run, err);
        } else {
            code = run_export_pca(pca_o, run, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        code = kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        code = kExitError;
    }

    const std::string captured = run.out.str();
    out << captured;
    run.manifest.outputs.push_back({"stdout", "-", sha256_hex(captured)});
    run.manifest.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.manifest.status = code == kExitOk ? "ok" : code == kExitCheckFailed ? "check-failed" : "failed";
    try {
        if (run.manifest_path.has_parent_path()) fs::create_directories(run.manifest_path.parent_path());
        write_manifest(run.manifest_path, run.manifest);
    } catch (const std::exception& e) {
        err << "error: could not write manifest: " << e.what() << '\n';
        if (code == kExitOk) code = kExitError;
    }
    return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return dispatch(args, out, err, std::nullopt);
}

}  // namespace ckg
