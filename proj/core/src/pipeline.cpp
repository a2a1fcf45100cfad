#include "graingraph/pipeline.hpp"

#include "graingraph/errors.hpp"

namespace graingraph {

GrainTable ingest_scan(const ScanField& field, const IngestConfig& cfg) {
    if (!(cfg.threshold_deg > 0.0)) {
        throw ValueError("segmentation threshold must be positive");
    }
    const LabelGrid labels = segment_grains(field, cfg.threshold_deg, cfg.symmetry);
    return grain_metrics(field, labels);
}

GrainTable ingest_scan_file(const std::string& path, const IngestConfig& cfg) {
    return ingest_scan(read_scan_csv(path), cfg);
}

std::vector<LabeledTable> load_dataset_tables(const std::string& manifest_path,
                                              const IngestConfig& icfg) {
    const DatasetManifest manifest = load_manifest_csv(manifest_path);
    if (manifest.entries.empty()) {
        throw ValueError("manifest has no samples: " + manifest_path);
    }
    std::vector<LabeledTable> out;
    out.reserve(manifest.entries.size());
    for (const ManifestEntry& entry : manifest.entries) {
        LabeledTable lt;
        lt.id = entry.sample_id;
        lt.ys = entry.ys;
        lt.table = ingest_scan_file(entry.scan_path, icfg);
        out.push_back(std::move(lt));
    }
    return out;
}

GraphDataset build_dataset_graphs(const std::vector<LabeledTable>& tables, int n_size, int n_phi,
                                  double lambda, PhiRangeMode phi_mode) {
    if (tables.empty()) {
        throw ValueError("cannot build graphs from an empty dataset");
    }
    std::vector<GrainTable> raw;
    raw.reserve(tables.size());
    for (const LabeledTable& lt : tables) {
        raw.push_back(lt.table);
    }
    GraphDataset out;
    out.disc = fit_discretization(raw, n_size, n_phi, lambda, phi_mode);
    out.samples.reserve(tables.size());
    for (const LabeledTable& lt : tables) {
        out.samples.push_back(DatasetSample{lt.id, build_graph(lt.table, out.disc, lt.ys)});
    }
    return out;
}

DescriptorMatrix dataset_descriptors(const std::vector<LabeledTable>& tables,
                                     const DiscretizationConfig& disc) {
    if (tables.empty()) {
        throw ValueError("cannot build descriptors from an empty dataset");
    }
    DescriptorMatrix out;
    out.ids.reserve(tables.size());
    out.X.reserve(tables.size());
    out.y.reserve(tables.size());
    for (const LabeledTable& lt : tables) {
        out.ids.push_back(lt.id);
        out.X.push_back(descriptors(lt.table, disc));
        out.y.push_back(lt.ys);
    }
    return out;
}

} // namespace graingraph
