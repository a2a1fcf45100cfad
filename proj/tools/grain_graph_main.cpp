#include "graingraph/errors.hpp"
#include "graingraph/microsynth.hpp"
#include "graingraph/model.hpp"
#include "graingraph/pipeline.hpp"
#include "graingraph/svg_plot.hpp"
#include "graingraph/train_eval.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gg = graingraph;

namespace {

std::string fingerprint_of(const std::map<std::string, std::string>& cfg) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : cfg) {
        j[k] = v;
    }
    const std::uint64_t h = gg::fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void log_fingerprint(const std::string& fp) {
    std::cerr << "config fingerprint " << fp << "\n";
}

int resolve_threads(bool flag_given, int flag_value) {
    if (flag_given) {
        if (flag_value < 1) {
            throw gg::ValueError("--threads must be >= 1");
        }
        return flag_value;
    }
    if (const char* env = std::getenv("GRAIN_GRAPH_THREADS")) {
        const std::string text(env);
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != text.size() || v < 1) {
            throw gg::ValueError("GRAIN_GRAPH_THREADS must be a positive integer, got: " + text);
        }
        return v;
    }
    return 1;
}

std::vector<double> read_loss_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw gg::IoError("cannot open loss trace: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw gg::FormatError("empty loss trace: " + path);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "epoch,loss") {
        throw gg::FormatError("loss trace header must be `epoch,loss`");
    }
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw gg::FormatError("bad loss trace row: " + line);
        }
        try {
            std::size_t pos = 0;
            const double v = std::stod(line.substr(comma + 1), &pos);
            if (pos != line.size() - comma - 1) {
                throw std::invalid_argument("trailing text");
            }
            out.push_back(v);
        } catch (const std::exception&) {
            throw gg::FormatError("bad loss value in row: " + line);
        }
    }
    return out;
}

// Shared flag bundles. Every value lands in the fingerprint (and, for the
// report-producing commands, in the report config), defaults included.
struct DiscFlags {
    int n_size = 10;
    int n_phi = 4;
    double lambda = 0.2;
    std::string phi_mode = "fixed";
};

struct IngestFlags {
    double threshold = 5.0;
    std::string symmetry = "hexagonal";
};

struct ModelFlags {
    int layers = 2;
    int hidden = 32;
    double dropout = 0.1;
    double leaky_slope = 0.2;
    int head_hidden = 16;
};

struct TrainFlags {
    int epochs = 300;
    double lr = 1e-3;
    std::string optimizer = "adam";
    double momentum = 0.0;
    double weight_decay = 0.0;
    int patience = 50;
    std::uint64_t seed = 0;
    bool raw_targets = false;
};

void add_disc_flags(CLI::App* cmd, DiscFlags& f) {
    cmd->add_option("--n-size", f.n_size, "size categories");
    cmd->add_option("--n-phi", f.n_phi, "orientation categories per Euler axis");
    cmd->add_option("--lambda", f.lambda, "strong-edge boundary-fraction threshold");
    cmd->add_option("--phi-mode", f.phi_mode, "Euler ranges: fixed or fitted")
        ->check(CLI::IsMember({"fixed", "fitted"}));
}

void add_ingest_flags(CLI::App* cmd, IngestFlags& f) {
    cmd->add_option("--threshold", f.threshold, "misorientation threshold, degrees");
    cmd->add_option("--symmetry", f.symmetry, "crystal symmetry: hexagonal or none")
        ->check(CLI::IsMember({"hexagonal", "none"}));
}

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--layers", f.layers, "message-passing rounds");
    cmd->add_option("--hidden", f.hidden, "embedding width");
    cmd->add_option("--dropout", f.dropout, "head dropout probability");
    cmd->add_option("--leaky-slope", f.leaky_slope, "LeakyReLU negative slope");
    cmd->add_option("--head-hidden", f.head_hidden, "head hidden width");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--lr", f.lr, "learning rate");
    cmd->add_option("--optimizer", f.optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--momentum", f.momentum, "sgd momentum");
    cmd->add_option("--weight-decay", f.weight_decay, "L2 coupling added to gradients");
    cmd->add_option("--patience", f.patience, "early-stop patience, 0 disables");
    cmd->add_option("--seed", f.seed, "seed for init and dropout");
    cmd->add_flag("--raw-targets", f.raw_targets, "train on unstandardized targets");
}

gg::PhiRangeMode phi_mode_of(const DiscFlags& f) {
    return f.phi_mode == "fitted" ? gg::PhiRangeMode::Fitted : gg::PhiRangeMode::Fixed;
}

gg::IngestConfig ingest_cfg_of(const IngestFlags& f) {
    gg::IngestConfig cfg;
    cfg.threshold_deg = f.threshold;
    cfg.symmetry = gg::symmetry_from_string(f.symmetry);
    return cfg;
}

gg::ModelConfig model_cfg_of(const ModelFlags& f, std::uint64_t seed) {
    gg::ModelConfig cfg;
    cfg.layers = f.layers;
    cfg.hidden_dim = f.hidden;
    cfg.dropout_p = f.dropout;
    cfg.leaky_slope = f.leaky_slope;
    cfg.head_hidden = f.head_hidden;
    cfg.seed = seed;
    return cfg;
}

gg::TrainConfig train_cfg_of(const TrainFlags& f) {
    gg::TrainConfig cfg;
    cfg.epochs = f.epochs;
    cfg.learning_rate = f.lr;
    cfg.optimizer = gg::optimizer_from_string(f.optimizer);
    cfg.sgd_momentum = f.momentum;
    cfg.weight_decay = f.weight_decay;
    cfg.early_stop_patience = f.patience;
    cfg.seed = f.seed;
    cfg.standardize_targets = !f.raw_targets;
    return cfg;
}

std::map<std::string, std::string> ingest_meta(const IngestFlags& f) {
    return {{"ingest.threshold_deg", gg::format_double(f.threshold)},
            {"ingest.symmetry", f.symmetry}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"grain knowledge-graph toolkit: synthetic EBSD scans, grain graphs, "
                 "attention-model training, and descriptor baselines"};
    app.require_subcommand(1);

    // --- synth ---------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    int synth_n = 0;
    int synth_grid = 64, synth_rows = 0, synth_cols = 0;
    double synth_step = 1.0;
    int grains_min = 10, grains_max = 40;
    std::string texture = "uniform";
    double fiber_spread = 10.0, ori_noise = 0.0;
    double sigma0 = 50.0, k_hp = 200.0, texture_coeff = 30.0, noise_sd = 0.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--n", synth_n, "sample count")->required();
    synth->add_option("--grid", synth_grid, "square grid side, pixels");
    synth->add_option("--rows", synth_rows, "override grid rows");
    synth->add_option("--cols", synth_cols, "override grid cols");
    synth->add_option("--step", synth_step, "pixel pitch, micrometres");
    synth->add_option("--n-grains-min", grains_min, "grains in the first sample");
    synth->add_option("--n-grains-max", grains_max, "grains in the last sample");
    synth->add_option("--texture", texture, "uniform or fiber")
        ->check(CLI::IsMember({"uniform", "fiber"}));
    synth->add_option("--fiber-spread", fiber_spread, "fiber deviation sd, degrees");
    synth->add_option("--noise", ori_noise, "per-pixel orientation jitter sd, degrees");
    synth->add_option("--sigma0", sigma0, "property intercept, MPa");
    synth->add_option("--k-hp", k_hp, "inverse-sqrt-size coefficient");
    synth->add_option("--texture-coeff", texture_coeff, "basal-fraction coefficient, MPa");
    synth->add_option("--noise-sd", noise_sd, "property noise sd, MPa");
    synth->add_option("--seed", synth_seed, "base seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    // --- ingest ----------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "segment a scan into a grain table");
    std::string ingest_scan, out_grains, out_adjacency;
    IngestFlags ingest_flags;
    ingest->add_option("--scan", ingest_scan, "scan CSV path")->required();
    ingest->add_option("--out-grains", out_grains, "grain CSV output")->required();
    ingest->add_option("--out-adjacency", out_adjacency, "adjacency CSV output")->required();
    add_ingest_flags(ingest, ingest_flags);

    // --- graph -----------------------------------------------------------------
    auto* graph_cmd = app.add_subcommand("graph", "build a graph JSON from a grain table");
    std::string graph_grains, graph_adjacency, graph_out, graph_disc_in, graph_disc_out;
    std::optional<double> graph_label;
    DiscFlags graph_disc;
    graph_cmd->add_option("--grains", graph_grains, "grain CSV")->required();
    graph_cmd->add_option("--adjacency", graph_adjacency, "adjacency CSV")->required();
    graph_cmd->add_option("--out", graph_out, "graph JSON output")->required();
    graph_cmd->add_option("--label", graph_label, "property label, MPa");
    auto* disc_in_opt =
        graph_cmd->add_option("--disc", graph_disc_in, "use this discretization JSON");
    graph_cmd->add_option("--disc-out", graph_disc_out, "write the discretization JSON");
    add_disc_flags(graph_cmd, graph_disc);

    // --- train -------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train on every sample of a dataset");
    std::string train_dataset, train_out, train_disc_out, train_loss_csv;
    IngestFlags train_ingest;
    DiscFlags train_disc;
    ModelFlags train_model;
    TrainFlags train_flags;
    train_cmd->add_option("--dataset", train_dataset, "dataset directory (manifest.csv inside)")
        ->required();
    train_cmd->add_option("--out", train_out, "checkpoint JSON output")->required();
    train_cmd->add_option("--disc-out", train_disc_out, "write the fitted discretization JSON");
    train_cmd->add_option("--loss-csv", train_loss_csv, "write the loss trace CSV");
    add_ingest_flags(train_cmd, train_ingest);
    add_disc_flags(train_cmd, train_disc);
    add_model_flags(train_cmd, train_model);
    add_train_flags(train_cmd, train_flags);

    // --- eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "leave-one-out evaluation over a dataset");
    std::string eval_dataset, eval_report;
    bool eval_loocv = false;
    int eval_threads = 1;
    IngestFlags eval_ingest;
    DiscFlags eval_disc;
    ModelFlags eval_model;
    TrainFlags eval_flags;
    eval_cmd->add_option("--dataset", eval_dataset, "dataset directory")->required();
    eval_cmd->add_flag("--loocv", eval_loocv, "leave-one-out over every sample");
    eval_cmd->add_option("--report", eval_report, "report JSON output")->required();
    auto* threads_opt = eval_cmd->add_option("--threads", eval_threads,
                                             "fold workers (GRAIN_GRAPH_THREADS fallback)");
    add_ingest_flags(eval_cmd, eval_ingest);
    add_disc_flags(eval_cmd, eval_disc);
    add_model_flags(eval_cmd, eval_model);
    add_train_flags(eval_cmd, eval_flags);

    // --- predict -------------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "predict the property of one sample");
    std::string predict_model, predict_disc, predict_scan, predict_grains, predict_adjacency;
    IngestFlags predict_ingest;
    predict_cmd->add_option("--model", predict_model, "checkpoint JSON")->required();
    predict_cmd->add_option("--disc", predict_disc, "discretization JSON")->required();
    auto* scan_opt = predict_cmd->add_option("--scan", predict_scan, "scan CSV to ingest");
    auto* grains_opt = predict_cmd->add_option("--grains", predict_grains, "grain CSV");
    auto* adj_opt = predict_cmd->add_option("--adjacency", predict_adjacency, "adjacency CSV");
    scan_opt->excludes(grains_opt)->excludes(adj_opt);
    grains_opt->needs(adj_opt);
    adj_opt->needs(grains_opt);
    add_ingest_flags(predict_cmd, predict_ingest);

    // --- baseline ------------------------------------------------------------
    auto* baseline_cmd = app.add_subcommand("baseline", "descriptor baseline LOOCV");
    std::string baseline_dataset, baseline_method = "ridge", baseline_report;
    double baseline_alpha = 1.0;
    int baseline_k = 3;
    IngestFlags baseline_ingest;
    DiscFlags baseline_disc;
    baseline_cmd->add_option("--dataset", baseline_dataset, "dataset directory")->required();
    baseline_cmd->add_option("--method", baseline_method, "ridge or knn")
        ->check(CLI::IsMember({"ridge", "knn"}));
    baseline_cmd->add_option("--report", baseline_report, "report JSON output")->required();
    baseline_cmd->add_option("--alpha", baseline_alpha, "ridge regularization");
    baseline_cmd->add_option("--k", baseline_k, "neighbor count");
    add_ingest_flags(baseline_cmd, baseline_ingest);
    add_disc_flags(baseline_cmd, baseline_disc);

    // --- plot -------------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand("plot", "render a report or loss trace as SVG");
    std::string plot_kind = "scatter", plot_report, plot_loss_csv, plot_out, plot_title;
    plot_cmd->add_option("--kind", plot_kind, "scatter or loss")
        ->check(CLI::IsMember({"scatter", "loss"}));
    plot_cmd->add_option("--report", plot_report, "report JSON (scatter)");
    plot_cmd->add_option("--loss-csv", plot_loss_csv, "loss trace CSV (loss)");
    plot_cmd->add_option("--out", plot_out, "SVG output")->required();
    plot_cmd->add_option("--title", plot_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (synth->parsed()) {
            gg::DatasetRanges ranges;
            ranges.base.rows = synth_rows > 0 ? synth_rows : synth_grid;
            ranges.base.cols = synth_cols > 0 ? synth_cols : synth_grid;
            ranges.base.step = synth_step;
            ranges.base.texture = gg::texture_from_string(texture);
            ranges.base.fiber_spread_deg = fiber_spread;
            ranges.base.orientation_noise_deg = ori_noise;
            ranges.base.seed = synth_seed;
            ranges.n_grains_min = grains_min;
            ranges.n_grains_max = grains_max;
            gg::OracleConfig ocfg;
            ocfg.sigma0 = sigma0;
            ocfg.k_hp = k_hp;
            ocfg.texture_coeff = texture_coeff;
            ocfg.noise_sd = noise_sd;
            ocfg.seed = synth_seed;
            gg::gen_dataset(synth_n, ranges, ocfg, synth_out);
            log_fingerprint(fingerprint_of(
                {{"synth.n", std::to_string(synth_n)},
                 {"synth.rows", std::to_string(ranges.base.rows)},
                 {"synth.cols", std::to_string(ranges.base.cols)},
                 {"synth.step", gg::format_double(synth_step)},
                 {"synth.n_grains_min", std::to_string(grains_min)},
                 {"synth.n_grains_max", std::to_string(grains_max)},
                 {"synth.texture", texture},
                 {"synth.fiber_spread_deg", gg::format_double(fiber_spread)},
                 {"synth.orientation_noise_deg", gg::format_double(ori_noise)},
                 {"synth.sigma0", gg::format_double(sigma0)},
                 {"synth.k_hp", gg::format_double(k_hp)},
                 {"synth.texture_coeff", gg::format_double(texture_coeff)},
                 {"synth.noise_sd", gg::format_double(noise_sd)},
                 {"synth.seed", std::to_string(synth_seed)}}));
            std::cout << "wrote " << synth_n << " samples to " << synth_out << "\n";
        } else if (ingest->parsed()) {
            const gg::GrainTable table =
                gg::ingest_scan_file(ingest_scan, ingest_cfg_of(ingest_flags));
            gg::write_grain_table_files(table, out_grains, out_adjacency);
            log_fingerprint(fingerprint_of(ingest_meta(ingest_flags)));
            std::cout << "segmented " << table.grains.size() << " grains\n";
        } else if (graph_cmd->parsed()) {
            const gg::GrainTable table =
                gg::load_grain_table_files(graph_grains, graph_adjacency);
            gg::DiscretizationConfig disc;
            if (disc_in_opt->count() > 0) {
                disc = gg::read_discretization_file(graph_disc_in);
            } else {
                disc = gg::fit_discretization({table}, graph_disc.n_size, graph_disc.n_phi,
                                              graph_disc.lambda, phi_mode_of(graph_disc));
            }
            const gg::GrainGraph g = gg::build_graph(table, disc, graph_label);
            gg::write_graph_file(g, graph_out);
            if (!graph_disc_out.empty()) {
                gg::write_discretization_file(disc, graph_disc_out);
            }
            log_fingerprint(fingerprint_of(gg::describe_discretization(disc)));
            std::cout << "graph: " << g.grain_count << " grain, " << g.size_node_count
                      << " size, " << g.ori_node_count << " orientation nodes\n";
        } else if (train_cmd->parsed()) {
            const auto tables = gg::load_dataset_tables(train_dataset + "/manifest.csv",
                                                        ingest_cfg_of(train_ingest));
            const gg::GraphDataset dataset =
                gg::build_dataset_graphs(tables, train_disc.n_size, train_disc.n_phi,
                                         train_disc.lambda, phi_mode_of(train_disc));
            std::vector<gg::GrainGraph> graphs;
            graphs.reserve(dataset.samples.size());
            for (const auto& s : dataset.samples) {
                graphs.push_back(s.graph);
            }
            const gg::ModelConfig model_cfg = model_cfg_of(train_model, train_flags.seed);
            const gg::TrainConfig train_cfg = train_cfg_of(train_flags);
            gg::TrainResult result = gg::train(graphs, model_cfg, train_cfg);
            gg::write_checkpoint_file(result.best_params, model_cfg,
                                      gg::discretization_fingerprint(dataset.disc), train_out);
            if (!train_disc_out.empty()) {
                gg::write_discretization_file(dataset.disc, train_disc_out);
            }
            if (!train_loss_csv.empty()) {
                std::ofstream out(train_loss_csv, std::ios::binary);
                if (!out) {
                    throw gg::IoError("cannot open for writing: " + train_loss_csv);
                }
                out << gg::serialize_loss_trace_csv(result.loss_trace);
            }
            auto meta = gg::describe_model_config(model_cfg);
            meta.merge(gg::describe_train_config(train_cfg));
            meta.merge(gg::describe_discretization(dataset.disc));
            meta.merge(ingest_meta(train_ingest));
            log_fingerprint(fingerprint_of(meta));
            std::cout << "best epoch " << result.best_epoch << ", training loss "
                      << gg::format_double(result.loss_trace[static_cast<std::size_t>(
                             result.best_epoch)])
                      << "\n";
        } else if (eval_cmd->parsed()) {
            if (!eval_loocv) {
                throw gg::UsageError("eval requires --loocv (the only protocol)");
            }
            const int threads = resolve_threads(threads_opt->count() > 0, eval_threads);
            const auto tables = gg::load_dataset_tables(eval_dataset + "/manifest.csv",
                                                        ingest_cfg_of(eval_ingest));
            const gg::GraphDataset dataset =
                gg::build_dataset_graphs(tables, eval_disc.n_size, eval_disc.n_phi,
                                         eval_disc.lambda, phi_mode_of(eval_disc));
            const gg::ModelConfig model_cfg = model_cfg_of(eval_model, eval_flags.seed);
            const gg::TrainConfig train_cfg = train_cfg_of(eval_flags);
            gg::EvalReport report =
                gg::loocv(dataset.samples, model_cfg, train_cfg, dataset.disc, threads);
            report.config.merge(ingest_meta(eval_ingest));
            gg::write_eval_report_file(report, eval_report);
            log_fingerprint(gg::config_fingerprint(report));
            std::cout << "mse " << gg::format_double(report.metric_values.mse) << ", mae "
                      << gg::format_double(report.metric_values.mae) << ", r2 "
                      << gg::format_double(report.metric_values.r2) << "\n";
        } else if (predict_cmd->parsed()) {
            gg::Checkpoint ckpt = gg::read_checkpoint_file(predict_model);
            const gg::DiscretizationConfig disc = gg::read_discretization_file(predict_disc);
            const std::string disc_fp = gg::discretization_fingerprint(disc);
            if (disc_fp != ckpt.discretization_fingerprint) {
                throw gg::ValidationError("discretization fingerprint " + disc_fp +
                                          " does not match the model's training fingerprint " +
                                          ckpt.discretization_fingerprint);
            }
            gg::GrainTable table;
            if (scan_opt->count() > 0) {
                table = gg::ingest_scan_file(predict_scan, ingest_cfg_of(predict_ingest));
            } else if (grains_opt->count() > 0) {
                table = gg::load_grain_table_files(predict_grains, predict_adjacency);
            } else {
                throw gg::UsageError("predict needs --scan or --grains/--adjacency");
            }
            const gg::GrainGraph g = gg::build_graph(table, disc);
            const double y = gg::predict(g, ckpt.params, ckpt.model_cfg);
            auto meta = gg::describe_model_config(ckpt.model_cfg);
            meta.merge(gg::describe_discretization(disc));
            log_fingerprint(fingerprint_of(meta));
            std::cout << gg::format_double(y) << "\n";
        } else if (baseline_cmd->parsed()) {
            const auto tables = gg::load_dataset_tables(baseline_dataset + "/manifest.csv",
                                                        ingest_cfg_of(baseline_ingest));
            std::vector<gg::GrainTable> raw;
            raw.reserve(tables.size());
            for (const auto& t : tables) {
                raw.push_back(t.table);
            }
            const gg::DiscretizationConfig disc =
                gg::fit_discretization(raw, baseline_disc.n_size, baseline_disc.n_phi,
                                       baseline_disc.lambda, phi_mode_of(baseline_disc));
            const gg::DescriptorMatrix m = gg::dataset_descriptors(tables, disc);
            auto extra = gg::describe_discretization(disc);
            extra.merge(ingest_meta(baseline_ingest));
            const gg::EvalReport report =
                baseline_method == "ridge"
                    ? gg::ridge_loocv(m.ids, m.X, m.y, baseline_alpha, extra)
                    : gg::knn_loocv(m.ids, m.X, m.y, baseline_k, extra);
            gg::write_eval_report_file(report, baseline_report);
            log_fingerprint(gg::config_fingerprint(report));
            std::cout << "mse " << gg::format_double(report.metric_values.mse) << ", mae "
                      << gg::format_double(report.metric_values.mae) << ", r2 "
                      << gg::format_double(report.metric_values.r2) << "\n";
        } else if (plot_cmd->parsed()) {
            std::string svg;
            if (plot_kind == "scatter") {
                if (plot_report.empty()) {
                    throw gg::UsageError("plot --kind scatter needs --report");
                }
                const gg::EvalReport report = gg::read_eval_report_file(plot_report);
                svg = gg::render_scatter_svg(
                    report.samples,
                    plot_title.empty() ? report.method + " predictions" : plot_title);
            } else {
                if (plot_loss_csv.empty()) {
                    throw gg::UsageError("plot --kind loss needs --loss-csv");
                }
                svg = gg::render_loss_svg(read_loss_csv(plot_loss_csv),
                                          plot_title.empty() ? "training loss" : plot_title);
            }
            gg::write_svg_file(svg, plot_out);
            log_fingerprint(fingerprint_of({{"plot.kind", plot_kind}}));
            std::cout << "wrote " << plot_out << "\n";
        }
    } catch (const gg::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const gg::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const gg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
