#pragma once

#include "graingraph/orientation.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace graingraph {

// One EBSD measurement point on the raster grid.
struct ScanPoint {
    double x = 0.0; // micrometres
    double y = 0.0; // micrometres
    EulerDeg euler;
    int phase = 0;
};

// Rectangular raster of scan points, row-major (row = constant y).
struct ScanField {
    int rows = 0;
    int cols = 0;
    double step = 0.0; // micrometres
    std::vector<ScanPoint> points;

    const ScanPoint& at(int row, int col) const {
        return points[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(col)];
    }
    ScanPoint& at(int row, int col) {
        return points[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(col)];
    }
};

bool operator==(const ScanPoint& a, const ScanPoint& b);
bool operator==(const ScanField& a, const ScanField& b);

// Dense per-pixel grain labels in 1..n_labels.
struct LabelGrid {
    int rows = 0;
    int cols = 0;
    int n_labels = 0;
    std::vector<int> labels;

    int at(int row, int col) const {
        return labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(col)];
    }
};

struct Grain {
    int id = 0;
    int pixel_count = 0; // 0 for grains loaded from CSV (not grid-derived)
    double size = 0.0;   // circle-equivalent diameter, micrometres
    EulerDeg euler_mean;
    double perimeter = 0.0; // micrometres
    double centroid_x = 0.0;
    double centroid_y = 0.0;
};

// Shared boundary between two grains; grain_a < grain_b.
struct AdjacencyRecord {
    int grain_a = 0;
    int grain_b = 0;
    double shared_length = 0.0; // micrometres
};

struct GrainTable {
    std::vector<Grain> grains;
    std::vector<AdjacencyRecord> adjacency;
    std::string provenance;

    // Index into grains by id; throws ReferenceError when absent.
    const Grain& grain_by_id(int id) const;
};

// --- scan CSV -------------------------------------------------------------
// Header `x,y,phi1,Phi,phi2[,phase]`, UTF-8, LF or CRLF, '.' decimal point.
// Columns may appear in any order. Points must form a complete rectangular
// grid with a uniform step shared by both axes.
ScanField parse_scan_csv(std::istream& in);
ScanField parse_scan_csv(const std::string& text);
ScanField read_scan_csv(const std::string& path);

// Lossless inverse of parse_scan_csv: doubles are written with shortest
// round-trip formatting, so parse(serialize(f)) == f for normalized fields.
std::string serialize_scan_csv(const ScanField& field);
void write_scan_csv(const ScanField& field, const std::string& path);

// --- segmentation ----------------------------------------------------------
// Connected-component labeling over the 4-neighborhood; an edge joins two
// neighbors whose misorientation is below threshold_deg. Components are
// seeded in row-major order, so labels are dense 1..G and deterministic.
LabelGrid segment_grains(const ScanField& field, double threshold_deg,
                         Symmetry sym = Symmetry::None);

// --- per-grain metrics ------------------------------------------------------
// size = 2*sqrt(area/pi) with area = pixel_count*step^2. Perimeter counts
// pixel edges that face either a differing label or the image border, times
// step; shared boundary lengths count differing-label pixel pairs, times step.
GrainTable grain_metrics(const ScanField& field, const LabelGrid& labels);

// --- grain-table CSV pair ---------------------------------------------------
// Grain columns `id,size,phi1,Phi,phi2,perimeter`; adjacency `a,b,shared_length`.
GrainTable load_grain_table(std::istream& grains_csv, std::istream& adjacency_csv);
GrainTable load_grain_table_files(const std::string& grains_path,
                                  const std::string& adjacency_path);
std::string serialize_grains_csv(const GrainTable& table);
std::string serialize_adjacency_csv(const GrainTable& table);
void write_grain_table_files(const GrainTable& table, const std::string& grains_path,
                             const std::string& adjacency_path);

// Shortest round-trip decimal formatting used by every CSV writer.
std::string format_double(double v);

} // namespace graingraph
