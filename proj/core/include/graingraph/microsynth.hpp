#pragma once

#include "graingraph/scan.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace graingraph {

enum class TextureMode { Uniform, Fiber };

TextureMode texture_from_string(const std::string& s);
std::string to_string(TextureMode t);

// Recipe for one synthetic scan. All randomness flows from `seed`; equal
// configs produce byte-identical fields.
struct SynthConfig {
    int rows = 64;
    int cols = 64;
    int n_grains = 20;
    double step = 1.0; // µm
    TextureMode texture = TextureMode::Uniform;
    std::array<double, 3> fiber_axis{0.0, 0.0, 1.0};
    double fiber_spread_deg = 10.0;   // sd of deviation from the fiber axis
    double orientation_noise_deg = 0.0; // per-pixel jitter sd
    std::uint64_t seed = 0;
};

// y = sigma0 + k_hp / sqrt(mean size) + texture_coeff * frac(Phi < 45°) + N(0, noise_sd)
struct OracleConfig {
    double sigma0 = 50.0;       // MPa
    double k_hp = 200.0;        // MPa·µm^0.5
    double texture_coeff = 30.0; // MPa
    double noise_sd = 0.0;      // MPa
    std::uint64_t seed = 0;
};

struct VoronoiResult {
    LabelGrid labels;
    std::vector<std::pair<int, int>> sites; // (row, col) per label, index = label-1
};

// Nearest-site labeling; ties go to the lowest site index. Sites are distinct
// cells (duplicates are resampled deterministically), so every label owns at
// least its own cell.
VoronoiResult gen_voronoi(const SynthConfig& cfg);

// One base orientation per grain drawn from the texture mode, then optional
// per-pixel jitter. Zero noise leaves every pixel of a grain identical.
ScanField assign_orientations(const LabelGrid& labels, const SynthConfig& cfg);

// Scalar property of a grain table under the configured law. Deterministic
// given ocfg.seed.
double oracle_property(const GrainTable& table, const OracleConfig& ocfg);

// gen_dataset varies n_grains linearly across [n_grains_min, n_grains_max]
// so the property labels span a detectable range.
struct DatasetRanges {
    SynthConfig base;
    int n_grains_min = 10;
    int n_grains_max = 40;
};

struct ManifestEntry {
    std::string sample_id;
    double ys = 0.0; // MPa
    std::string scan_path;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// Writes s000.csv.. plus manifest.csv (`sample_id,ys`) and a config echo
// (gen_config.json) into out_dir, creating it if needed. Per-sample seeds are
// base.seed + index and ocfg.seed + index.
DatasetManifest gen_dataset(int n_samples, const DatasetRanges& ranges, const OracleConfig& ocfg,
                            const std::string& out_dir);

// Manifest round-trip used by training tools.
std::string serialize_manifest_csv(const DatasetManifest& manifest);
DatasetManifest load_manifest_csv(const std::string& path);

} // namespace graingraph
