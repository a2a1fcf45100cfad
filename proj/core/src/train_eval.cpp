#include "graingraph/train_eval.hpp"

#include "graingraph/errors.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace graingraph {
namespace {

double population_sd(const std::vector<double>& xs, double mean) {
    double acc = 0.0;
    for (const double x : xs) {
        acc += (x - mean) * (x - mean);
    }
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& ctx) {
    try {
        std::rethrow_exception(ep);
    } catch (const NumericError& e) {
        throw NumericError(ctx + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + e.what());
    } catch (const Error& e) {
        // remaining subclasses all map to the same exit class
        throw ValueError(ctx + e.what());
    }
}

} // namespace

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") {
        return OptimizerKind::Adam;
    }
    if (s == "sgd") {
        return OptimizerKind::Sgd;
    }
    throw ValueError("unknown optimizer: " + s);
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Adam ? "adam" : "sgd";
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.epochs == b.epochs && a.learning_rate == b.learning_rate &&
           a.optimizer == b.optimizer && a.adam_beta1 == b.adam_beta1 &&
           a.adam_beta2 == b.adam_beta2 && a.adam_eps == b.adam_eps &&
           a.sgd_momentum == b.sgd_momentum && a.weight_decay == b.weight_decay &&
           a.seed == b.seed && a.early_stop_patience == b.early_stop_patience &&
           a.standardize_targets == b.standardize_targets;
}

Optimizer::Optimizer(OptimizerKind kind, const TrainConfig& cfg) : kind_(kind), cfg_(cfg) {
    if (!(cfg.learning_rate > 0.0)) {
        throw ValueError("learning_rate must be positive");
    }
    if (kind == OptimizerKind::Adam) {
        if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
            !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0) || !(cfg.adam_eps > 0.0)) {
            throw ValueError("bad Adam hyperparameters");
        }
    }
}

void Optimizer::step(ParamStore& store, const std::map<std::string, Tensor>& grads) {
    ++t_;
    for (auto& [name, p] : store.params) {
        const auto git = grads.find(name);
        if (git == grads.end()) {
            throw UsageError("optimizer step missing gradient for " + name);
        }
        const Tensor& g = git->second;
        if (g.shape != p.shape) {
            throw ShapeError("gradient shape " + shape_str(g.shape) + " mismatches parameter " +
                             name + " " + shape_str(p.shape));
        }
        if (kind_ == OptimizerKind::Adam) {
            Tensor& m = m_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
            Tensor& v = v_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
            const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                const double grad = g.data[i] + cfg_.weight_decay * p.data[i];
                m.data[i] = cfg_.adam_beta1 * m.data[i] + (1.0 - cfg_.adam_beta1) * grad;
                v.data[i] = cfg_.adam_beta2 * v.data[i] + (1.0 - cfg_.adam_beta2) * grad * grad;
                const double mhat = m.data[i] / bc1;
                const double vhat = v.data[i] / bc2;
                p.data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            }
        } else {
            Tensor& vel = m_.try_emplace(name, Tensor::zeros(p.shape)).first->second;
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                const double grad = g.data[i] + cfg_.weight_decay * p.data[i];
                vel.data[i] = cfg_.sgd_momentum * vel.data[i] + grad;
                p.data[i] -= cfg_.learning_rate * vel.data[i];
            }
        }
        for (const double x : p.data) {
            if (!std::isfinite(x)) {
                throw NumericError("optimizer produced non-finite value in " + name);
            }
        }
    }
}

TrainResult train(const std::vector<GrainGraph>& graphs, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    if (graphs.size() < 2) {
        throw ValueError("train: need at least 2 labeled graphs");
    }
    if (train_cfg.epochs < 1) {
        throw ValueError("train: epochs must be at least 1");
    }
    std::vector<double> y(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        if (!graphs[i].label) {
            throw ValueError("train: graph " + std::to_string(i) + " has no label");
        }
        y[i] = *graphs[i].label;
        if (graphs[i].grain_dim != graphs[0].grain_dim ||
            graphs[i].size_dim != graphs[0].size_dim || graphs[i].ori_dim != graphs[0].ori_dim) {
            throw ValueError("train: graph " + std::to_string(i) +
                             " has inconsistent feature dims");
        }
    }

    double t_mean = 0.0, t_sd = 1.0;
    if (train_cfg.standardize_targets) {
        t_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        t_sd = population_sd(y, t_mean);
        if (t_sd == 0.0) {
            t_sd = 1.0;
        }
    }
    std::vector<double> y_std(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y_std[i] = (y[i] - t_mean) / t_sd;
    }

    ParamStore params = init_params(model_cfg, graphs[0]);
    Optimizer opt(train_cfg.optimizer, train_cfg);
    std::mt19937_64 dropout_rng(train_cfg.seed ^ 0x6a09e667f3bcc909ULL);

    TrainResult result;
    result.target_mean = t_mean;
    result.target_sd = t_sd;
    ParamStore best = params;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t i = 0; i < graphs.size(); ++i) {
            try {
                Tape tape;
                const Var pred =
                    forward_on_tape(tape, graphs[i], params, model_cfg, true, dropout_rng);
                const Var loss =
                    tape.square(tape.sub(pred, tape.constant(Tensor::scalar(y_std[i]))));
                epoch_loss += tape.value(loss).scalar_value();
                tape.backward(loss);
                opt.step(params, tape.param_grads(params));
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", sample " +
                                   std::to_string(i) + ": " + e.what());
            }
        }
        epoch_loss /= static_cast<double>(graphs.size());
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": non-finite training loss");
        }
        result.loss_trace.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
            if (train_cfg.early_stop_patience > 0 &&
                since_best >= train_cfg.early_stop_patience) {
                break;
            }
        }
    }

    // fold the target transform into the output layer: w2*sd, b2*sd + mean
    Tensor& w2 = best.at("head.w2");
    for (double& v : w2.data) {
        v *= t_sd;
    }
    Tensor& b2 = best.at("head.b2");
    for (double& v : b2.data) {
        v = v * t_sd + t_mean;
    }
    result.best_params = std::move(best);
    return result;
}

Metrics metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size()) {
        throw ValueError("metrics: inputs must be equal-length and non-empty");
    }
    const std::size_t n = y_true.size();
    double mse = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y_true[i] - y_pred[i];
        mse += d * d;
        mae += std::abs(d);
    }
    mse /= static_cast<double>(n);
    mae /= static_cast<double>(n);
    const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) /
                        static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    }
    if (ss_tot == 0.0) {
        throw ValueError("metrics: r2 undefined for constant y_true");
    }
    return Metrics{mse, mae, 1.0 - ss_res / ss_tot};
}

std::string serialize_eval_report(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["seed"] = report.seed;
    j["method"] = report.method;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : report.config) {
        cfg[k] = v;
    }
    j["config"] = std::move(cfg);
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (const SamplePrediction& s : report.samples) {
        samples.push_back({{"id", s.id},
                           {"fold", s.fold},
                           {"y_true", s.y_true},
                           {"y_pred", s.y_pred}});
    }
    j["samples"] = std::move(samples);
    j["metrics"] = {{"mse", report.metric_values.mse},
                    {"mae", report.metric_values.mae},
                    {"r2", report.metric_values.r2}};
    return j.dump(2) + "\n";
}

EvalReport parse_eval_report(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report JSON parse failure: ") + e.what());
    }
    try {
        if (!j.contains("version") || j.at("version").get<int>() != 1) {
            throw FormatError("unsupported report version");
        }
        EvalReport r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.method = j.at("method").get<std::string>();
        for (const auto& [k, v] : j.at("config").items()) {
            r.config.emplace(k, v.get<std::string>());
        }
        for (const auto& s : j.at("samples")) {
            r.samples.push_back(SamplePrediction{
                s.at("id").get<std::string>(), s.at("fold").get<int>(),
                s.at("y_true").get<double>(), s.at("y_pred").get<double>()});
        }
        r.metric_values.mse = j.at("metrics").at("mse").get<double>();
        r.metric_values.mae = j.at("metrics").at("mae").get<double>();
        r.metric_values.r2 = j.at("metrics").at("r2").get<double>();

        if (r.samples.empty()) {
            throw ValidationError("report has no samples");
        }
        std::vector<double> yt, yp;
        for (const SamplePrediction& s : r.samples) {
            yt.push_back(s.y_true);
            yp.push_back(s.y_pred);
        }
        const Metrics m = metrics(yt, yp);
        if (std::abs(m.mse - r.metric_values.mse) > 1e-12 ||
            std::abs(m.mae - r.metric_values.mae) > 1e-12 ||
            std::abs(m.r2 - r.metric_values.r2) > 1e-12) {
            throw ValidationError("report metrics disagree with per-sample rows");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad report JSON: ") + e.what());
    }
}

EvalReport read_eval_report_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open report: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_eval_report(ss.str());
}

void write_eval_report_file(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << serialize_eval_report(report);
    if (!out) {
        throw IoError("failed writing report: " + path);
    }
}

std::string config_fingerprint(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["method"] = report.method;
    j["seed"] = report.seed;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : report.config) {
        cfg[k] = v;
    }
    j["config"] = std::move(cfg);
    const std::uint64_t h = fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

EvalReport loocv(std::vector<DatasetSample> samples, const ModelConfig& model_cfg,
                 const TrainConfig& train_cfg, const DiscretizationConfig& disc_cfg,
                 int threads) {
    if (samples.size() < 3) {
        throw ValueError("loocv: need at least 3 samples");
    }
    std::sort(samples.begin(), samples.end(),
              [](const DatasetSample& a, const DatasetSample& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].id == samples[i - 1].id) {
            throw ValueError("loocv: duplicate sample id " + samples[i].id);
        }
    }
    for (const DatasetSample& s : samples) {
        if (!s.graph.label) {
            throw ValueError("loocv: sample " + s.id + " has no label");
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = samples.size();
    std::vector<double> preds(n, 0.0);
    std::vector<std::exception_ptr> errors(n);

    const auto run_fold = [&](std::size_t f) {
        std::vector<GrainGraph> fold_train;
        fold_train.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i != f) {
                fold_train.push_back(samples[i].graph);
            }
        }
        TrainResult res = train(fold_train, model_cfg, train_cfg);
        preds[f] = predict(samples[f].graph, res.best_params, model_cfg);
    };

    const int t_count = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (t_count == 1) {
        for (std::size_t f = 0; f < n; ++f) {
            try {
                run_fold(f);
            } catch (...) {
                errors[f] = std::current_exception();
            }
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(t_count));
        for (int t = 0; t < t_count; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t f = static_cast<std::size_t>(t); f < n;
                     f += static_cast<std::size_t>(t_count)) {
                    try {
                        run_fold(f);
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    for (std::size_t f = 0; f < n; ++f) {
        if (errors[f]) {
            rethrow_with_context(errors[f],
                                 "fold " + std::to_string(f) + " (" + samples[f].id + "): ");
        }
    }

    EvalReport report;
    report.seed = train_cfg.seed;
    report.method = "hetero_gat";
    report.config = describe_model_config(model_cfg);
    report.config.merge(describe_train_config(train_cfg));
    report.config.merge(describe_discretization(disc_cfg));
    std::vector<double> yt(n), yp(n);
    for (std::size_t i = 0; i < n; ++i) {
        yt[i] = *samples[i].graph.label;
        yp[i] = preds[i];
        report.samples.push_back(
            SamplePrediction{samples[i].id, static_cast<int>(i), yt[i], yp[i]});
    }
    report.metric_values = metrics(yt, yp);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<double> descriptors(const GrainTable& table, const DiscretizationConfig& cfg) {
    if (table.grains.empty()) {
        throw ValueError("descriptors: empty grain table");
    }
    validate_discretization(cfg);
    const std::size_t n = table.grains.size();
    double mean_size = 0.0;
    for (const Grain& g : table.grains) {
        mean_size += g.size;
    }
    mean_size /= static_cast<double>(n);
    double sd_size = 0.0;
    for (const Grain& g : table.grains) {
        sd_size += (g.size - mean_size) * (g.size - mean_size);
    }
    sd_size = std::sqrt(sd_size / static_cast<double>(n));

    std::map<int, double> perim_of_id;
    for (const Grain& g : table.grains) {
        perim_of_id[g.id] = g.perimeter;
    }
    double lp_sum = 0.0;
    double strong = 0.0;
    double directed = 0.0;
    for (const AdjacencyRecord& rec : table.adjacency) {
        const double pa = perim_of_id.at(rec.grain_a);
        const double pb = perim_of_id.at(rec.grain_b);
        for (const double perim : {pa, pb}) {
            const double lp = rec.shared_length / perim;
            lp_sum += lp;
            if (lp >= cfg.lambda) {
                strong += 1.0;
            }
            directed += 1.0;
        }
    }
    const double mean_lp = directed > 0.0 ? lp_sum / directed : 0.0;
    const double frac_strong = directed > 0.0 ? strong / directed : 0.0;

    std::vector<double> size_hist(static_cast<std::size_t>(cfg.n_size), 0.0);
    std::vector<double> ori_hist(static_cast<std::size_t>(cfg.ori_category_count()), 0.0);
    for (const Grain& g : table.grains) {
        size_hist[static_cast<std::size_t>(size_category(g.size, cfg) - 1)] += 1.0;
        ori_hist[static_cast<std::size_t>(orientation_category(g.euler_mean, cfg).flat - 1)] +=
            1.0;
    }
    for (double& v : size_hist) {
        v /= static_cast<double>(n);
    }
    for (double& v : ori_hist) {
        v /= static_cast<double>(n);
    }

    std::vector<double> out;
    out.reserve(5 + size_hist.size() + ori_hist.size());
    out.push_back(mean_size);
    out.push_back(sd_size);
    out.push_back(static_cast<double>(n));
    out.push_back(mean_lp);
    out.push_back(frac_strong);
    out.insert(out.end(), size_hist.begin(), size_hist.end());
    out.insert(out.end(), ori_hist.begin(), ori_hist.end());
    return out;
}

namespace {

void standardize_columns(const std::vector<std::vector<double>>& X, std::vector<double>& mean,
                         std::vector<double>& sd) {
    const std::size_t n = X.size();
    const std::size_t p = X.front().size();
    mean.assign(p, 0.0);
    sd.assign(p, 0.0);
    for (const auto& row : X) {
        if (row.size() != p) {
            throw ValueError("feature rows have inconsistent lengths");
        }
        for (std::size_t j = 0; j < p; ++j) {
            mean[j] += row[j];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(n);
    }
    for (const auto& row : X) {
        for (std::size_t j = 0; j < p; ++j) {
            sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
        }
    }
    for (double& v : sd) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v == 0.0) {
            v = 1.0;
        }
    }
}

} // namespace

RidgeModel ridge_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                     double alpha) {
    if (alpha < 0.0) {
        throw ValueError("ridge_fit: alpha must be non-negative");
    }
    if (X.empty() || X.size() != y.size()) {
        throw ValueError("ridge_fit: X and y must be equal-length and non-empty");
    }
    const std::size_t n = X.size();
    const std::size_t p = X.front().size();
    RidgeModel model;
    standardize_columns(X, model.feat_mean, model.feat_sd);
    model.intercept = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (p == 0) {
        return model;
    }

    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (X[i][j] - model.feat_mean[j]) / model.feat_sd[j];
        }
        yc(static_cast<Eigen::Index>(i)) = y[i] - model.intercept;
    }
    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += alpha;
    const Eigen::VectorXd w = A.ldlt().solve(Z.transpose() * yc);
    model.weights.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double v = w(static_cast<Eigen::Index>(j));
        if (!std::isfinite(v)) {
            throw NumericError("ridge_fit: solve produced non-finite weights");
        }
        model.weights[j] = v;
    }
    return model;
}

double ridge_predict(const RidgeModel& model, const std::vector<double>& x) {
    if (x.size() != model.weights.size()) {
        throw ValueError("ridge_predict: feature length " + std::to_string(x.size()) +
                         " mismatches model " + std::to_string(model.weights.size()));
    }
    double out = model.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) {
        out += model.weights[j] * (x[j] - model.feat_mean[j]) / model.feat_sd[j];
    }
    return out;
}

double knn_predict(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                   const std::vector<double>& query, int k) {
    if (X.empty() || X.size() != y.size()) {
        throw ValueError("knn_predict: X and y must be equal-length and non-empty");
    }
    if (k < 1 || static_cast<std::size_t>(k) > X.size()) {
        throw ValueError("knn_predict: k " + std::to_string(k) + " outside [1, " +
                         std::to_string(X.size()) + "]");
    }
    const std::size_t p = X.front().size();
    if (query.size() != p) {
        throw ValueError("knn_predict: query length mismatches features");
    }
    std::vector<double> mean, sd;
    standardize_columns(X, mean, sd);

    std::vector<double> dist2(X.size(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double d = (X[i][j] - query[j]) / sd[j];
            acc += d * d;
        }
        dist2[i] = acc;
    }
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist2[a] != dist2[b]) {
            return dist2[a] < dist2[b];
        }
        return a < b; // distance ties toward the lowest index
    });
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += y[order[static_cast<std::size_t>(i)]];
    }
    return acc / static_cast<double>(k);
}

namespace {

EvalReport baseline_loocv(const std::string& method, const std::vector<std::string>& ids,
                          const std::vector<std::vector<double>>& X,
                          const std::vector<double>& y,
                          const std::function<double(const std::vector<std::vector<double>>&,
                                                     const std::vector<double>&,
                                                     const std::vector<double>&)>& fit_predict,
                          std::map<std::string, std::string> config) {
    if (ids.size() != X.size() || ids.size() != y.size()) {
        throw ValueError("baseline loocv: ids, X, y must have equal lengths");
    }
    if (ids.size() < 3) {
        throw ValueError("baseline loocv: need at least 3 samples");
    }
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (ids[order[i]] == ids[order[i - 1]]) {
            throw ValueError("baseline loocv: duplicate sample id " + ids[order[i]]);
        }
    }

    EvalReport report;
    report.seed = 0;
    report.method = method;
    report.config = std::move(config);

    const std::size_t n = order.size();
    std::vector<double> yt(n), yp(n);
    for (std::size_t f = 0; f < n; ++f) {
        std::vector<std::vector<double>> Xf;
        std::vector<double> yf;
        Xf.reserve(n - 1);
        yf.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i != f) {
                Xf.push_back(X[order[i]]);
                yf.push_back(y[order[i]]);
            }
        }
        yt[f] = y[order[f]];
        yp[f] = fit_predict(Xf, yf, X[order[f]]);
        report.samples.push_back(
            SamplePrediction{ids[order[f]], static_cast<int>(f), yt[f], yp[f]});
    }
    report.metric_values = metrics(yt, yp);
    return report;
}

} // namespace

EvalReport ridge_loocv(const std::vector<std::string>& ids,
                       const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                       double alpha, const std::map<std::string, std::string>& extra_config) {
    std::map<std::string, std::string> config = extra_config;
    config["baseline.alpha"] = format_double(alpha);
    if (!X.empty()) {
        config["baseline.feature_dim"] = std::to_string(X.front().size());
    }
    return baseline_loocv(
        "ridge", ids, X, y,
        [alpha](const auto& Xf, const auto& yf, const auto& q) {
            return ridge_predict(ridge_fit(Xf, yf, alpha), q);
        },
        std::move(config));
}

EvalReport knn_loocv(const std::vector<std::string>& ids,
                     const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                     int k, const std::map<std::string, std::string>& extra_config) {
    std::map<std::string, std::string> config = extra_config;
    config["baseline.k"] = std::to_string(k);
    if (!X.empty()) {
        config["baseline.feature_dim"] = std::to_string(X.front().size());
    }
    return baseline_loocv(
        "knn", ids, X, y,
        [k](const auto& Xf, const auto& yf, const auto& q) { return knn_predict(Xf, yf, q, k); },
        std::move(config));
}

std::string serialize_loss_trace_csv(const std::vector<double>& loss_trace) {
    std::string out = "epoch,loss\n";
    for (std::size_t i = 0; i < loss_trace.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(loss_trace[i]);
        out += '\n';
    }
    return out;
}

std::map<std::string, std::string> describe_model_config(const ModelConfig& cfg) {
    return {{"model.layers", std::to_string(cfg.layers)},
            {"model.hidden_dim", std::to_string(cfg.hidden_dim)},
            {"model.dropout_p", format_double(cfg.dropout_p)},
            {"model.leaky_slope", format_double(cfg.leaky_slope)},
            {"model.head_hidden", std::to_string(cfg.head_hidden)},
            {"model.layer_norm_eps", format_double(cfg.layer_norm_eps)},
            {"model.seed", std::to_string(cfg.seed)}};
}

std::map<std::string, std::string> describe_train_config(const TrainConfig& cfg) {
    return {{"train.epochs", std::to_string(cfg.epochs)},
            {"train.learning_rate", format_double(cfg.learning_rate)},
            {"train.optimizer", to_string(cfg.optimizer)},
            {"train.adam_beta1", format_double(cfg.adam_beta1)},
            {"train.adam_beta2", format_double(cfg.adam_beta2)},
            {"train.adam_eps", format_double(cfg.adam_eps)},
            {"train.sgd_momentum", format_double(cfg.sgd_momentum)},
            {"train.weight_decay", format_double(cfg.weight_decay)},
            {"train.seed", std::to_string(cfg.seed)},
            {"train.early_stop_patience", std::to_string(cfg.early_stop_patience)},
            {"train.standardize_targets", cfg.standardize_targets ? "true" : "false"}};
}

std::map<std::string, std::string> describe_discretization(const DiscretizationConfig& cfg) {
    return {{"disc.n_size", std::to_string(cfg.n_size)},
            {"disc.size_min", format_double(cfg.size_min)},
            {"disc.size_max", format_double(cfg.size_max)},
            {"disc.n_phi", std::to_string(cfg.n_phi)},
            {"disc.phi1_min", format_double(cfg.phi_ranges[0].first)},
            {"disc.phi1_max", format_double(cfg.phi_ranges[0].second)},
            {"disc.Phi_min", format_double(cfg.phi_ranges[1].first)},
            {"disc.Phi_max", format_double(cfg.phi_ranges[1].second)},
            {"disc.phi2_min", format_double(cfg.phi_ranges[2].first)},
            {"disc.phi2_max", format_double(cfg.phi_ranges[2].second)},
            {"disc.lambda", format_double(cfg.lambda)},
            {"disc.fingerprint", discretization_fingerprint(cfg)}};
}

} // namespace graingraph
