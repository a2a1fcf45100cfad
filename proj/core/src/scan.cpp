#include "graingraph/scan.hpp"

#include "graingraph/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

namespace graingraph {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double_field(std::string_view field, std::size_t line_no, std::string_view column) {
    field = trim(field);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                          std::string(field) + "' as number for column " + std::string(column));
    }
    return v;
}

int parse_int_field(std::string_view field, std::size_t line_no, std::string_view column) {
    field = trim(field);
    int v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                          std::string(field) + "' as integer for column " + std::string(column));
    }
    return v;
}

void check_angle_range(double v, std::size_t line_no, std::string_view column) {
    if (!(v >= -360.0 && v <= 720.0)) {
        throw ValueError("line " + std::to_string(line_no) + ": angle " + format_double(v) +
                         " for column " + std::string(column) + " outside [-360, 720]");
    }
}

// Header lookup that reports the missing column by name.
std::unordered_map<std::string, std::size_t>
parse_header(std::string_view line, const std::vector<std::string>& required,
             const std::vector<std::string>& optional) {
    std::unordered_map<std::string, std::size_t> index;
    const auto fields = split_csv(line);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        index.emplace(std::string(trim(fields[i])), i);
    }
    for (const auto& name : required) {
        if (!index.contains(name)) {
            throw FormatError("missing required column '" + name + "' in header");
        }
    }
    std::unordered_map<std::string, std::size_t> out;
    for (const auto& name : required) {
        out.emplace(name, index.at(name));
    }
    for (const auto& name : optional) {
        if (index.contains(name)) {
            out.emplace(name, index.at(name));
        }
    }
    return out;
}

struct RawPoint {
    double x, y;
    EulerDeg euler;
    int phase;
};

// Derive sorted distinct coordinate levels; duplicates collapse using half of
// the smallest positive gap as the merge tolerance.
std::vector<double> coordinate_levels(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double min_gap = 0.0;
    const double span = values.back() - values.front();
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        if (d > span * 1e-12 && (min_gap == 0.0 || d < min_gap)) {
            min_gap = d;
        }
    }
    std::vector<double> levels;
    levels.push_back(values.front());
    for (const double v : values) {
        if (v - levels.back() > min_gap * 0.5 && min_gap > 0.0) {
            levels.push_back(v);
        }
    }
    return levels;
}

// Checks uniform spacing and returns the step; levels must be sorted.
double uniform_step(const std::vector<double>& levels, std::string_view axis) {
    if (levels.size() < 2) {
        return 0.0;
    }
    const double step = (levels.back() - levels.front()) / static_cast<double>(levels.size() - 1);
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double d = levels[i] - levels[i - 1];
        if (std::abs(d - step) > 1e-6 * step) {
            throw GeometryError("non-uniform " + std::string(axis) + " spacing: gap " +
                                format_double(d) + " vs step " + format_double(step));
        }
    }
    return step;
}

int level_index(double v, double origin, double step, std::size_t n, std::string_view axis) {
    if (step == 0.0) {
        return 0;
    }
    const double f = (v - origin) / step;
    const int idx = static_cast<int>(std::lround(f));
    if (idx < 0 || static_cast<std::size_t>(idx) >= n ||
        std::abs(v - (origin + idx * step)) > 1e-6 * step) {
        throw GeometryError(std::string(axis) + " coordinate " + format_double(v) +
                            " does not sit on the inferred grid");
    }
    return idx;
}

} // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

bool operator==(const ScanPoint& a, const ScanPoint& b) {
    return a.x == b.x && a.y == b.y && a.phase == b.phase && a.euler.phi1 == b.euler.phi1 &&
           a.euler.Phi == b.euler.Phi && a.euler.phi2 == b.euler.phi2;
}

bool operator==(const ScanField& a, const ScanField& b) {
    return a.rows == b.rows && a.cols == b.cols && a.step == b.step && a.points == b.points;
}

const Grain& GrainTable::grain_by_id(int id) const {
    for (const Grain& g : grains) {
        if (g.id == id) {
            return g;
        }
    }
    throw ReferenceError("no grain with id " + std::to_string(id));
}

ScanField parse_scan_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty scan file");
    }
    const auto cols = parse_header(strip_cr(line), {"x", "y", "phi1", "Phi", "phi2"}, {"phase"});
    const bool has_phase = cols.contains("phase");

    std::vector<RawPoint> raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view sv = strip_cr(line);
        if (trim(sv).empty()) {
            continue;
        }
        const auto fields = split_csv(sv);
        auto field = [&](const std::string& name) -> std::string_view {
            const std::size_t idx = cols.at(name);
            if (idx >= fields.size()) {
                throw FormatError("line " + std::to_string(line_no) + ": missing value for column " + name);
            }
            return fields[idx];
        };
        RawPoint p{};
        p.x = parse_double_field(field("x"), line_no, "x");
        p.y = parse_double_field(field("y"), line_no, "y");
        p.euler.phi1 = parse_double_field(field("phi1"), line_no, "phi1");
        p.euler.Phi = parse_double_field(field("Phi"), line_no, "Phi");
        p.euler.phi2 = parse_double_field(field("phi2"), line_no, "phi2");
        check_angle_range(p.euler.phi1, line_no, "phi1");
        check_angle_range(p.euler.Phi, line_no, "Phi");
        check_angle_range(p.euler.phi2, line_no, "phi2");
        p.euler = normalize_euler(p.euler);
        p.phase = has_phase ? parse_int_field(field("phase"), line_no, "phase") : 0;
        raw.push_back(p);
    }
    if (raw.empty()) {
        throw FormatError("scan file has a header but no data rows");
    }

    std::vector<double> xs(raw.size()), ys(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        xs[i] = raw[i].x;
        ys[i] = raw[i].y;
    }
    const std::vector<double> x_levels = coordinate_levels(std::move(xs));
    const std::vector<double> y_levels = coordinate_levels(std::move(ys));
    const std::size_t n_cols = x_levels.size();
    const std::size_t n_rows = y_levels.size();
    if (n_rows * n_cols != raw.size()) {
        throw GeometryError("points do not form a complete rectangular grid: " +
                            std::to_string(raw.size()) + " points vs " + std::to_string(n_rows) +
                            "x" + std::to_string(n_cols));
    }
    const double step_x = uniform_step(x_levels, "x");
    const double step_y = uniform_step(y_levels, "y");
    double step = 0.0;
    if (step_x > 0.0 && step_y > 0.0) {
        if (std::abs(step_x - step_y) > 1e-6 * step_x) {
            throw GeometryError("x step " + format_double(step_x) + " differs from y step " +
                                format_double(step_y));
        }
        step = step_x;
    } else if (step_x > 0.0) {
        step = step_x;
    } else if (step_y > 0.0) {
        step = step_y;
    } else {
        throw GeometryError("cannot infer step from a single scan point");
    }

    ScanField field;
    field.rows = static_cast<int>(n_rows);
    field.cols = static_cast<int>(n_cols);
    field.step = step;
    field.points.resize(raw.size());
    std::vector<char> occupied(raw.size(), 0);
    for (const RawPoint& p : raw) {
        const int c = level_index(p.x, x_levels.front(), step_x, n_cols, "x");
        const int r = level_index(p.y, y_levels.front(), step_y, n_rows, "y");
        const std::size_t idx =
            static_cast<std::size_t>(r) * n_cols + static_cast<std::size_t>(c);
        if (occupied[idx]) {
            throw GeometryError("duplicate grid cell at x=" + format_double(p.x) +
                                " y=" + format_double(p.y));
        }
        occupied[idx] = 1;
        field.points[idx] = ScanPoint{p.x, p.y, p.euler, p.phase};
    }
    return field;
}

ScanField parse_scan_csv(const std::string& text) {
    std::istringstream in(text);
    return parse_scan_csv(in);
}

ScanField read_scan_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scan file: " + path);
    }
    return parse_scan_csv(in);
}

std::string serialize_scan_csv(const ScanField& field) {
    std::string out = "x,y,phi1,Phi,phi2,phase\n";
    out.reserve(out.size() + field.points.size() * 48);
    for (const ScanPoint& p : field.points) {
        out += format_double(p.x);
        out += ',';
        out += format_double(p.y);
        out += ',';
        out += format_double(p.euler.phi1);
        out += ',';
        out += format_double(p.euler.Phi);
        out += ',';
        out += format_double(p.euler.phi2);
        out += ',';
        out += std::to_string(p.phase);
        out += '\n';
    }
    return out;
}

void write_scan_csv(const ScanField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << serialize_scan_csv(field);
    if (!out) {
        throw IoError("failed writing scan file: " + path);
    }
}

LabelGrid segment_grains(const ScanField& field, double threshold_deg, Symmetry sym) {
    if (field.rows <= 0 || field.cols <= 0 || field.points.empty()) {
        throw ValueError("segment_grains: empty scan field");
    }
    if (field.points.size() !=
        static_cast<std::size_t>(field.rows) * static_cast<std::size_t>(field.cols)) {
        throw ValueError("segment_grains: points length does not match rows*cols");
    }
    if (!(threshold_deg > 0.0)) {
        throw ValueError("segment_grains: threshold must be positive");
    }

    const std::size_t n = field.points.size();
    std::vector<Quat> quats(n);
    for (std::size_t i = 0; i < n; ++i) {
        quats[i] = quat_from_euler(field.points[i].euler);
    }
    // angle < threshold  <=>  |cos(angle/2)| > cos(threshold/2)
    const double cos_half_threshold = std::cos(threshold_deg * kPi / 360.0);
    const auto joined = [&](std::size_t a, std::size_t b) {
        const Quat& qa = quats[a];
        const Quat& qb = quats[b];
        if (sym == Symmetry::None) {
            const double d =
                std::abs(qa.w * qb.w + qa.x * qb.x + qa.y * qb.y + qa.z * qb.z);
            return d > cos_half_threshold;
        }
        const Quat delta = quat_mul(qa, quat_conj(qb));
        double best = 0.0;
        for (const Quat& s : hexagonal_operators()) {
            const double wc =
                std::abs(delta.w * s.w - delta.x * s.x - delta.y * s.y - delta.z * s.z);
            best = std::max(best, wc);
        }
        return best > cos_half_threshold;
    };

    LabelGrid grid;
    grid.rows = field.rows;
    grid.cols = field.cols;
    grid.labels.assign(n, 0);
    std::deque<std::size_t> queue;
    int next_label = 0;
    const int rows = field.rows;
    const int cols = field.cols;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (grid.labels[seed] != 0) {
            continue;
        }
        ++next_label;
        grid.labels[seed] = next_label;
        queue.push_back(seed);
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            const int r = static_cast<int>(cur) / cols;
            const int c = static_cast<int>(cur) % cols;
            const std::array<std::pair<int, int>, 4> nbrs{
                {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
            for (const auto& [nr, nc] : nbrs) {
                if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) {
                    continue;
                }
                const std::size_t ni =
                    static_cast<std::size_t>(nr) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(nc);
                if (grid.labels[ni] == 0 && joined(cur, ni)) {
                    grid.labels[ni] = next_label;
                    queue.push_back(ni);
                }
            }
        }
    }
    grid.n_labels = next_label;
    return grid;
}

GrainTable grain_metrics(const ScanField& field, const LabelGrid& labels) {
    if (labels.rows != field.rows || labels.cols != field.cols ||
        labels.labels.size() != field.points.size()) {
        throw ValueError("grain_metrics: label grid shape does not match field");
    }
    const int g_count = labels.n_labels;
    if (g_count <= 0) {
        throw ValueError("grain_metrics: label grid has no labels");
    }
    std::vector<char> seen(static_cast<std::size_t>(g_count), 0);
    for (const int l : labels.labels) {
        if (l < 1 || l > g_count) {
            throw ValueError("grain_metrics: label " + std::to_string(l) + " outside 1.." +
                             std::to_string(g_count));
        }
        seen[static_cast<std::size_t>(l - 1)] = 1;
    }
    for (int g = 0; g < g_count; ++g) {
        if (!seen[static_cast<std::size_t>(g)]) {
            throw ValueError("grain_metrics: label gap, label " + std::to_string(g + 1) +
                             " has no pixels");
        }
    }

    const std::size_t ng = static_cast<std::size_t>(g_count);
    std::vector<long long> pixel_count(ng, 0);
    std::vector<double> sum_x(ng, 0.0), sum_y(ng, 0.0);
    std::vector<Quat> quat_sum(ng, Quat{0, 0, 0, 0});
    std::vector<Quat> quat_ref(ng);
    std::vector<long long> boundary_edges(ng, 0);
    std::map<std::pair<int, int>, long long> pair_counts;

    const int rows = field.rows;
    const int cols = field.cols;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t idx =
                static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c);
            const int label = labels.labels[idx];
            const std::size_t g = static_cast<std::size_t>(label - 1);
            const ScanPoint& p = field.points[idx];
            Quat q = quat_from_euler(p.euler);
            if (pixel_count[g] == 0) {
                quat_ref[g] = q;
            } else {
                // sign-align with the grain's first pixel before summing
                const double dot = q.w * quat_ref[g].w + q.x * quat_ref[g].x +
                                   q.y * quat_ref[g].y + q.z * quat_ref[g].z;
                if (dot < 0.0) {
                    q = Quat{-q.w, -q.x, -q.y, -q.z};
                }
            }
            quat_sum[g].w += q.w;
            quat_sum[g].x += q.x;
            quat_sum[g].y += q.y;
            quat_sum[g].z += q.z;
            ++pixel_count[g];
            sum_x[g] += p.x;
            sum_y[g] += p.y;

            // image-border edges
            if (r == 0) ++boundary_edges[g];
            if (r == rows - 1) ++boundary_edges[g];
            if (c == 0) ++boundary_edges[g];
            if (c == cols - 1) ++boundary_edges[g];

            // differing-label pairs (right and down, each pair counted once)
            if (c + 1 < cols) {
                const int other = labels.labels[idx + 1];
                if (other != label) {
                    ++boundary_edges[g];
                    ++boundary_edges[static_cast<std::size_t>(other - 1)];
                    ++pair_counts[{std::min(label, other), std::max(label, other)}];
                }
            }
            if (r + 1 < rows) {
                const int other = labels.labels[idx + static_cast<std::size_t>(cols)];
                if (other != label) {
                    ++boundary_edges[g];
                    ++boundary_edges[static_cast<std::size_t>(other - 1)];
                    ++pair_counts[{std::min(label, other), std::max(label, other)}];
                }
            }
        }
    }

    GrainTable table;
    table.provenance = "grid " + std::to_string(rows) + "x" + std::to_string(cols) + " step " +
                       format_double(field.step);
    table.grains.reserve(ng);
    const double step = field.step;
    for (std::size_t g = 0; g < ng; ++g) {
        Grain grain;
        grain.id = static_cast<int>(g) + 1;
        grain.pixel_count = static_cast<int>(pixel_count[g]);
        const double area = static_cast<double>(pixel_count[g]) * step * step;
        grain.size = 2.0 * std::sqrt(area / kPi);
        grain.perimeter = static_cast<double>(boundary_edges[g]) * step;
        grain.euler_mean = euler_from_quat(quat_normalize(quat_sum[g]));
        grain.centroid_x = sum_x[g] / static_cast<double>(pixel_count[g]);
        grain.centroid_y = sum_y[g] / static_cast<double>(pixel_count[g]);
        table.grains.push_back(grain);
    }
    table.adjacency.reserve(pair_counts.size());
    for (const auto& [pair, count] : pair_counts) {
        table.adjacency.push_back(
            AdjacencyRecord{pair.first, pair.second, static_cast<double>(count) * step});
    }
    return table;
}

GrainTable load_grain_table(std::istream& grains_csv, std::istream& adjacency_csv) {
    GrainTable table;
    table.provenance = "csv";

    std::string line;
    if (!std::getline(grains_csv, line)) {
        throw FormatError("empty grain file (no header)");
    }
    const auto gcols =
        parse_header(strip_cr(line), {"id", "size", "phi1", "Phi", "phi2", "perimeter"}, {});
    std::size_t line_no = 1;
    std::unordered_map<int, std::size_t> id_index;
    while (std::getline(grains_csv, line)) {
        ++line_no;
        const std::string_view sv = strip_cr(line);
        if (trim(sv).empty()) {
            continue;
        }
        const auto fields = split_csv(sv);
        auto field = [&](const std::string& name) -> std::string_view {
            const std::size_t idx = gcols.at(name);
            if (idx >= fields.size()) {
                throw FormatError("line " + std::to_string(line_no) + ": missing value for column " + name);
            }
            return fields[idx];
        };
        Grain g;
        g.id = parse_int_field(field("id"), line_no, "id");
        g.size = parse_double_field(field("size"), line_no, "size");
        g.euler_mean.phi1 = parse_double_field(field("phi1"), line_no, "phi1");
        g.euler_mean.Phi = parse_double_field(field("Phi"), line_no, "Phi");
        g.euler_mean.phi2 = parse_double_field(field("phi2"), line_no, "phi2");
        g.perimeter = parse_double_field(field("perimeter"), line_no, "perimeter");
        check_angle_range(g.euler_mean.phi1, line_no, "phi1");
        check_angle_range(g.euler_mean.Phi, line_no, "Phi");
        check_angle_range(g.euler_mean.phi2, line_no, "phi2");
        g.euler_mean = normalize_euler(g.euler_mean);
        if (!(g.size > 0.0)) {
            throw ValueError("line " + std::to_string(line_no) + ": grain size must be positive");
        }
        if (!(g.perimeter > 0.0)) {
            throw ValueError("line " + std::to_string(line_no) + ": perimeter must be positive");
        }
        if (id_index.contains(g.id)) {
            throw ValueError("duplicate grain id " + std::to_string(g.id));
        }
        id_index.emplace(g.id, table.grains.size());
        table.grains.push_back(g);
    }

    line_no = 0;
    bool have_header = false;
    std::map<std::pair<int, int>, double> pairs;
    while (std::getline(adjacency_csv, line)) {
        ++line_no;
        const std::string_view sv = strip_cr(line);
        if (trim(sv).empty()) {
            continue;
        }
        if (!have_header) {
            // header is required once any content exists
            static_cast<void>(parse_header(sv, {"a", "b", "shared_length"}, {}));
            have_header = true;
            continue;
        }
        const auto fields = split_csv(sv);
        const auto acols = parse_header("a,b,shared_length", {"a", "b", "shared_length"}, {});
        auto field = [&](const std::string& name) -> std::string_view {
            const std::size_t idx = acols.at(name);
            if (idx >= fields.size()) {
                throw FormatError("line " + std::to_string(line_no) + ": missing value for column " + name);
            }
            return fields[idx];
        };
        const int a = parse_int_field(field("a"), line_no, "a");
        const int b = parse_int_field(field("b"), line_no, "b");
        const double shared = parse_double_field(field("shared_length"), line_no, "shared_length");
        if (a == b) {
            throw ValueError("line " + std::to_string(line_no) + ": self adjacency for grain " +
                             std::to_string(a));
        }
        if (!id_index.contains(a)) {
            throw ReferenceError("adjacency references unknown grain id " + std::to_string(a));
        }
        if (!id_index.contains(b)) {
            throw ReferenceError("adjacency references unknown grain id " + std::to_string(b));
        }
        if (!(shared > 0.0)) {
            throw ValueError("line " + std::to_string(line_no) + ": shared_length must be positive");
        }
        const double perim_a = table.grains[id_index.at(a)].perimeter;
        const double perim_b = table.grains[id_index.at(b)].perimeter;
        if (shared > std::min(perim_a, perim_b)) {
            throw ValueError("line " + std::to_string(line_no) + ": shared_length " +
                             format_double(shared) + " exceeds a grain perimeter");
        }
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        if (pairs.contains(key)) {
            throw ValueError("duplicate adjacency pair " + std::to_string(key.first) + "," +
                             std::to_string(key.second));
        }
        pairs.emplace(key, shared);
    }
    for (const auto& [key, shared] : pairs) {
        table.adjacency.push_back(AdjacencyRecord{key.first, key.second, shared});
    }
    return table;
}

GrainTable load_grain_table_files(const std::string& grains_path,
                                  const std::string& adjacency_path) {
    std::ifstream g(grains_path);
    if (!g) {
        throw IoError("cannot open grain file: " + grains_path);
    }
    std::ifstream a(adjacency_path);
    if (!a) {
        throw IoError("cannot open adjacency file: " + adjacency_path);
    }
    GrainTable t = load_grain_table(g, a);
    t.provenance = grains_path;
    return t;
}

std::string serialize_grains_csv(const GrainTable& table) {
    std::string out = "id,size,phi1,Phi,phi2,perimeter\n";
    for (const Grain& g : table.grains) {
        out += std::to_string(g.id);
        out += ',';
        out += format_double(g.size);
        out += ',';
        out += format_double(g.euler_mean.phi1);
        out += ',';
        out += format_double(g.euler_mean.Phi);
        out += ',';
        out += format_double(g.euler_mean.phi2);
        out += ',';
        out += format_double(g.perimeter);
        out += '\n';
    }
    return out;
}

std::string serialize_adjacency_csv(const GrainTable& table) {
    std::string out = "a,b,shared_length\n";
    for (const AdjacencyRecord& rec : table.adjacency) {
        out += std::to_string(rec.grain_a);
        out += ',';
        out += std::to_string(rec.grain_b);
        out += ',';
        out += format_double(rec.shared_length);
        out += '\n';
    }
    return out;
}

void write_grain_table_files(const GrainTable& table, const std::string& grains_path,
                             const std::string& adjacency_path) {
    std::ofstream g(grains_path, std::ios::binary);
    if (!g) {
        throw IoError("cannot open for writing: " + grains_path);
    }
    g << serialize_grains_csv(table);
    std::ofstream a(adjacency_path, std::ios::binary);
    if (!a) {
        throw IoError("cannot open for writing: " + adjacency_path);
    }
    a << serialize_adjacency_csv(table);
}

} // namespace graingraph
