#pragma once

#include "graingraph/diffcore.hpp"
#include "graingraph/graph_build.hpp"
#include "graingraph/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace graingraph {

enum class OptimizerKind { Adam, Sgd };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct TrainConfig {
    int epochs = 300;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double sgd_momentum = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    int early_stop_patience = 50;
    // Targets are z-scored inside train(); the returned parameters have the
    // inverse transform folded into the output layer, so predictions come out
    // in original units.
    bool standardize_targets = true;
};

bool operator==(const TrainConfig& a, const TrainConfig& b);

// Stateful first-order optimizer over a ParamStore. Step order follows the
// store's (sorted) parameter names; state is keyed by name.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, const TrainConfig& cfg);
    // grads must cover every parameter in the store.
    void step(ParamStore& store, const std::map<std::string, Tensor>& grads);
    long long steps_taken() const { return t_; }

private:
    OptimizerKind kind_;
    TrainConfig cfg_;
    long long t_ = 0;
    std::map<std::string, Tensor> m_; // Adam first moment / SGD velocity
    std::map<std::string, Tensor> v_; // Adam second moment
};

struct TrainResult {
    ParamStore best_params;         // best training-loss epoch, output in MPa
    int best_epoch = 0;             // 0-based epoch index of the snapshot
    std::vector<double> loss_trace; // per-epoch mean loss, standardized units
    double target_mean = 0.0;
    double target_sd = 1.0;
};

// Per-sample squared-error steps over the labeled graphs in fixed order.
// Deterministic given the seeds. Requires >= 2 labeled graphs with matching
// feature dims.
TrainResult train(const std::vector<GrainGraph>& graphs, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
};

// r2 = 1 - SS_res/SS_tot about mean(y_true). Constant y_true is an error.
Metrics metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred);

struct SamplePrediction {
    std::string id;
    int fold = 0;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct EvalReport {
    std::uint64_t seed = 0;
    std::string method; // "hetero_gat", "ridge", "knn"
    std::map<std::string, std::string> config;
    std::vector<SamplePrediction> samples;
    Metrics metric_values;
    double wall_seconds = 0.0; // in-memory only; never serialized
};

// Canonical JSON (sorted config keys, samples ordered by id, no timing), so
// identical runs serialize byte-identically.
std::string serialize_eval_report(const EvalReport& report);
// Validates schema and that stored metrics match the per-sample rows to 1e-12.
EvalReport parse_eval_report(const std::string& json_text);
EvalReport read_eval_report_file(const std::string& path);
void write_eval_report_file(const EvalReport& report, const std::string& path);
std::string config_fingerprint(const EvalReport& report);

struct DatasetSample {
    std::string id;
    GrainGraph graph; // label must be set
};

// Leave-one-out over the samples, sorted by id first so input order never
// matters. threads > 1 runs folds concurrently; results are identical to the
// serial run. Fold errors carry the fold index and sample id.
EvalReport loocv(std::vector<DatasetSample> samples, const ModelConfig& model_cfg,
                 const TrainConfig& train_cfg, const DiscretizationConfig& disc_cfg,
                 int threads = 1);

// Fixed-length table descriptor: [mean size, sd size, grain count, mean lp,
// fraction of strong directed edges, normalized size histogram, normalized
// orientation histogram].
std::vector<double> descriptors(const GrainTable& table, const DiscretizationConfig& cfg);

struct RidgeModel {
    std::vector<double> weights; // per standardized feature
    double intercept = 0.0;      // mean of training y
    std::vector<double> feat_mean;
    std::vector<double> feat_sd; // zero-variance columns get sd 1
};

RidgeModel ridge_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                     double alpha);
double ridge_predict(const RidgeModel& model, const std::vector<double>& x);

// Mean label of the k nearest training rows (Euclidean on internally
// standardized features); distance ties break toward the lowest index.
double knn_predict(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                   const std::vector<double>& query, int k);

// LOOCV wrappers over the descriptor baselines. extra_config entries are
// merged into the report config.
EvalReport ridge_loocv(const std::vector<std::string>& ids,
                       const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                       double alpha,
                       const std::map<std::string, std::string>& extra_config = {});
EvalReport knn_loocv(const std::vector<std::string>& ids,
                     const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                     int k, const std::map<std::string, std::string>& extra_config = {});

std::string serialize_loss_trace_csv(const std::vector<double>& loss_trace);

// Flattened config entries shared by reports and fingerprint logging.
std::map<std::string, std::string> describe_model_config(const ModelConfig& cfg);
std::map<std::string, std::string> describe_train_config(const TrainConfig& cfg);
std::map<std::string, std::string> describe_discretization(const DiscretizationConfig& cfg);

} // namespace graingraph
