#pragma once

#include "graingraph/graph_build.hpp"
#include "graingraph/microsynth.hpp"
#include "graingraph/orientation.hpp"
#include "graingraph/scan.hpp"
#include "graingraph/train_eval.hpp"

#include <string>
#include <vector>

namespace graingraph {

// Segmentation settings shared by every entry point that turns a raw scan
// into a grain table.
struct IngestConfig {
    double threshold_deg = 5.0;
    Symmetry symmetry = Symmetry::Hexagonal;
};

GrainTable ingest_scan(const ScanField& field, const IngestConfig& cfg);
GrainTable ingest_scan_file(const std::string& path, const IngestConfig& cfg);

// One labeled grain table, keyed by the manifest sample id.
struct LabeledTable {
    std::string id;
    GrainTable table;
    double ys = 0.0; // MPa
};

// Reads manifest.csv, then every referenced scan, segmenting each one.
std::vector<LabeledTable> load_dataset_tables(const std::string& manifest_path,
                                              const IngestConfig& icfg);

struct GraphDataset {
    DiscretizationConfig disc; // fitted over all tables
    std::vector<DatasetSample> samples;
};

// Fits one discretization across the whole dataset, then builds one labeled
// graph per table so every sample shares attribute-node semantics.
GraphDataset build_dataset_graphs(const std::vector<LabeledTable>& tables, int n_size, int n_phi,
                                  double lambda, PhiRangeMode phi_mode);

// Descriptor design matrix for the feature baselines, rows aligned with ids.
struct DescriptorMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
};

DescriptorMatrix dataset_descriptors(const std::vector<LabeledTable>& tables,
                                     const DiscretizationConfig& disc);

} // namespace graingraph
