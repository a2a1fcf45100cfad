#include "graingraph/microsynth.hpp"

#include "graingraph/errors.hpp"
#include "graingraph/orientation.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace graingraph {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kOrientationStream = 0x517cc1b727220a95ULL;

// Quaternion rotating the z axis onto `axis`.
Quat align_z_to(const std::array<double, 3>& axis) {
    const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (!(n > 0.0)) {
        throw ValueError("fiber axis must be non-zero");
    }
    const double ux = axis[0] / n, uy = axis[1] / n, uz = axis[2] / n;
    if (uz > 1.0 - 1e-12) {
        return Quat{1.0, 0.0, 0.0, 0.0};
    }
    if (uz < -1.0 + 1e-12) {
        return Quat{0.0, 1.0, 0.0, 0.0}; // 180° about x
    }
    // rotation axis = z × u, angle = acos(uz)
    const double angle = std::acos(uz);
    double rx = -uy, ry = ux;
    const double rn = std::sqrt(rx * rx + ry * ry);
    rx /= rn;
    ry /= rn;
    const double s = std::sin(angle / 2.0);
    return quat_normalize(Quat{std::cos(angle / 2.0), rx * s, ry * s, 0.0});
}

Quat random_unit_axis_rotation(std::mt19937_64& rng, double angle_deg) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double z = 2.0 * u01(rng) - 1.0;
    const double phi = 2.0 * kPi * u01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const std::array<double, 3> axis{r * std::cos(phi), r * std::sin(phi), z};
    return quat_from_axis_angle(axis, angle_deg);
}

} // namespace

TextureMode texture_from_string(const std::string& s) {
    if (s == "uniform") {
        return TextureMode::Uniform;
    }
    if (s == "fiber") {
        return TextureMode::Fiber;
    }
    throw ValueError("unknown texture mode: " + s);
}

std::string to_string(TextureMode t) {
    return t == TextureMode::Uniform ? "uniform" : "fiber";
}

VoronoiResult gen_voronoi(const SynthConfig& cfg) {
    if (cfg.rows <= 0 || cfg.cols <= 0) {
        throw ValueError("grid must be non-empty");
    }
    const long long pixels = static_cast<long long>(cfg.rows) * cfg.cols;
    if (cfg.n_grains < 1) {
        throw ValueError("n_grains must be at least 1");
    }
    if (cfg.n_grains > pixels) {
        throw ValueError("n_grains " + std::to_string(cfg.n_grains) + " exceeds pixel count " +
                         std::to_string(pixels));
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> row_d(0, cfg.rows - 1);
    std::uniform_int_distribution<int> col_d(0, cfg.cols - 1);
    std::vector<std::pair<int, int>> sites;
    std::set<std::pair<int, int>> taken;
    sites.reserve(static_cast<std::size_t>(cfg.n_grains));
    while (sites.size() < static_cast<std::size_t>(cfg.n_grains)) {
        const std::pair<int, int> s{row_d(rng), col_d(rng)};
        if (taken.insert(s).second) {
            sites.push_back(s);
        }
    }

    VoronoiResult out;
    out.labels.rows = cfg.rows;
    out.labels.cols = cfg.cols;
    out.labels.n_labels = cfg.n_grains;
    out.labels.labels.resize(static_cast<std::size_t>(pixels));

    const auto relabel = [&]() {
        for (int r = 0; r < cfg.rows; ++r) {
            for (int c = 0; c < cfg.cols; ++c) {
                long long best = -1;
                int best_site = 0;
                for (std::size_t s = 0; s < sites.size(); ++s) {
                    const long long dr = r - sites[s].first;
                    const long long dc = c - sites[s].second;
                    const long long d2 = dr * dr + dc * dc;
                    if (best < 0 || d2 < best) {
                        best = d2;
                        best_site = static_cast<int>(s);
                    }
                }
                out.labels.labels[static_cast<std::size_t>(r) * cfg.cols + c] = best_site + 1;
            }
        }
    };

    // Returns the labels whose cells are not one 4-connected component. A
    // digital Voronoi cell is usually connected but a thin sliver can fall
    // between lattice points; such fields could not be re-segmented back to
    // this partition, so the offending sites get resampled below.
    std::vector<long long> total(sites.size());
    std::vector<long long> reached(sites.size());
    std::vector<char> visited(static_cast<std::size_t>(pixels));
    std::vector<int> stack;
    const auto disconnected = [&]() {
        std::fill(total.begin(), total.end(), 0);
        std::fill(reached.begin(), reached.end(), 0);
        std::fill(visited.begin(), visited.end(), 0);
        for (const int lbl : out.labels.labels) {
            ++total[static_cast<std::size_t>(lbl - 1)];
        }
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const int want = static_cast<int>(s) + 1;
            stack.clear();
            stack.push_back(sites[s].first * cfg.cols + sites[s].second);
            visited[static_cast<std::size_t>(stack.back())] = 1;
            while (!stack.empty()) {
                const int px = stack.back();
                stack.pop_back();
                ++reached[s];
                const int r = px / cfg.cols, c = px % cfg.cols;
                const int nbr[4] = {px - cfg.cols, px + cfg.cols, px - 1, px + 1};
                const bool ok[4] = {r > 0, r + 1 < cfg.rows, c > 0, c + 1 < cfg.cols};
                for (int k = 0; k < 4; ++k) {
                    if (ok[k] && !visited[static_cast<std::size_t>(nbr[k])] &&
                        out.labels.labels[static_cast<std::size_t>(nbr[k])] == want) {
                        visited[static_cast<std::size_t>(nbr[k])] = 1;
                        stack.push_back(nbr[k]);
                    }
                }
            }
        }
        std::vector<int> bad;
        for (std::size_t s = 0; s < sites.size(); ++s) {
            if (reached[s] != total[s]) {
                bad.push_back(static_cast<int>(s));
            }
        }
        return bad;
    };

    int budget = 10000;
    for (;;) {
        relabel();
        const std::vector<int> bad = disconnected();
        if (bad.empty()) {
            break;
        }
        budget -= static_cast<int>(bad.size());
        if (budget <= 0) {
            throw GeometryError("could not place sites with connected cells");
        }
        for (const int s : bad) {
            taken.erase(sites[static_cast<std::size_t>(s)]);
            for (;;) {
                const std::pair<int, int> cand{row_d(rng), col_d(rng)};
                if (taken.insert(cand).second) {
                    sites[static_cast<std::size_t>(s)] = cand;
                    break;
                }
            }
        }
    }
    out.sites = sites;
    return out;
}

ScanField assign_orientations(const LabelGrid& labels, const SynthConfig& cfg) {
    if (labels.rows <= 0 || labels.cols <= 0 || labels.n_labels <= 0) {
        throw ValueError("label grid must be non-empty");
    }
    if (cfg.texture == TextureMode::Fiber && !(cfg.fiber_spread_deg > 0.0)) {
        throw ValueError("fiber spread must be positive");
    }

    std::mt19937_64 rng(cfg.seed ^ kOrientationStream);
    std::uniform_real_distribution<double> angle360(0.0, 360.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    const Quat align = align_z_to(cfg.fiber_axis);
    std::vector<Quat> base(static_cast<std::size_t>(labels.n_labels));
    for (Quat& q : base) {
        if (cfg.texture == TextureMode::Uniform) {
            EulerDeg e;
            e.phi1 = angle360(rng);
            e.Phi = std::acos(sym(rng)) * 180.0 / kPi;
            e.phi2 = angle360(rng);
            q = quat_from_euler(e);
        } else {
            const double azimuth = angle360(rng);
            std::normal_distribution<double> dev(0.0, cfg.fiber_spread_deg);
            const double deviation = std::abs(dev(rng));
            const double spin = angle360(rng);
            // z-fiber sample tilted to the configured axis
            const Quat local = quat_mul(quat_axis_rotation(2, azimuth),
                                        quat_mul(quat_axis_rotation(0, deviation),
                                                 quat_axis_rotation(2, spin)));
            q = quat_mul(align, local);
        }
    }

    std::vector<EulerDeg> base_euler(base.size());
    for (std::size_t g = 0; g < base.size(); ++g) {
        base_euler[g] = euler_from_quat(base[g]);
    }

    ScanField field;
    field.rows = labels.rows;
    field.cols = labels.cols;
    field.step = cfg.step;
    field.points.resize(labels.labels.size());
    std::normal_distribution<double> jitter(0.0, cfg.orientation_noise_deg);
    for (int r = 0; r < labels.rows; ++r) {
        for (int c = 0; c < labels.cols; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * labels.cols + c;
            const int label = labels.labels[idx];
            if (label < 1 || label > labels.n_labels) {
                throw ValueError("label " + std::to_string(label) + " outside 1.." +
                                 std::to_string(labels.n_labels));
            }
            ScanPoint p;
            p.x = c * cfg.step;
            p.y = r * cfg.step;
            p.phase = 0;
            if (cfg.orientation_noise_deg > 0.0) {
                const double ang = std::abs(jitter(rng));
                const Quat q = quat_mul(random_unit_axis_rotation(rng, ang),
                                        base[static_cast<std::size_t>(label - 1)]);
                p.euler = euler_from_quat(q);
            } else {
                p.euler = base_euler[static_cast<std::size_t>(label - 1)];
            }
            field.points[idx] = p;
        }
    }
    return field;
}

double oracle_property(const GrainTable& table, const OracleConfig& ocfg) {
    if (table.grains.empty()) {
        throw ValueError("oracle_property: empty grain table");
    }
    if (ocfg.noise_sd < 0.0) {
        throw ValueError("noise_sd must be non-negative");
    }
    double mean_size = 0.0;
    double textured = 0.0;
    for (const Grain& g : table.grains) {
        mean_size += g.size;
        if (g.euler_mean.Phi < 45.0) {
            textured += 1.0;
        }
    }
    mean_size /= static_cast<double>(table.grains.size());
    const double f_texture = textured / static_cast<double>(table.grains.size());
    double ys = ocfg.sigma0 + ocfg.k_hp / std::sqrt(mean_size) + ocfg.texture_coeff * f_texture;
    if (ocfg.noise_sd > 0.0) {
        std::mt19937_64 rng(ocfg.seed);
        std::normal_distribution<double> noise(0.0, ocfg.noise_sd);
        ys += noise(rng);
    }
    return ys;
}

DatasetManifest gen_dataset(int n_samples, const DatasetRanges& ranges, const OracleConfig& ocfg,
                            const std::string& out_dir) {
    if (n_samples < 1) {
        throw ValueError("n_samples must be at least 1");
    }
    if (ranges.n_grains_min < 1 || ranges.n_grains_max < ranges.n_grains_min) {
        throw ValueError("invalid n_grains range");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    }

    DatasetManifest manifest;
    manifest.entries.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        SynthConfig cfg = ranges.base;
        cfg.seed = ranges.base.seed + static_cast<std::uint64_t>(i);
        if (n_samples > 1) {
            const double t = static_cast<double>(i) / static_cast<double>(n_samples - 1);
            cfg.n_grains = ranges.n_grains_min +
                           static_cast<int>(std::lround(t * (ranges.n_grains_max - ranges.n_grains_min)));
        } else {
            cfg.n_grains = ranges.n_grains_min;
        }

        const VoronoiResult vor = gen_voronoi(cfg);
        const ScanField field = assign_orientations(vor.labels, cfg);
        const GrainTable table = grain_metrics(field, vor.labels);
        OracleConfig sample_ocfg = ocfg;
        sample_ocfg.seed = ocfg.seed + static_cast<std::uint64_t>(i);
        const double ys = oracle_property(table, sample_ocfg);

        char name[16];
        std::snprintf(name, sizeof(name), "s%03d", i);
        const std::string scan_path =
            (std::filesystem::path(out_dir) / (std::string(name) + ".csv")).string();
        write_scan_csv(field, scan_path);
        manifest.entries.push_back(ManifestEntry{name, ys, scan_path});
    }

    {
        const std::string path = (std::filesystem::path(out_dir) / "manifest.csv").string();
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot open for writing: " + path);
        }
        out << serialize_manifest_csv(manifest);
        if (!out) {
            throw IoError("failed writing manifest: " + path);
        }
    }
    {
        nlohmann::ordered_json j;
        j["n_samples"] = n_samples;
        j["grid"] = {ranges.base.rows, ranges.base.cols};
        j["step"] = ranges.base.step;
        j["n_grains_min"] = ranges.n_grains_min;
        j["n_grains_max"] = ranges.n_grains_max;
        j["texture"] = to_string(ranges.base.texture);
        j["fiber_axis"] = ranges.base.fiber_axis;
        j["fiber_spread_deg"] = ranges.base.fiber_spread_deg;
        j["orientation_noise_deg"] = ranges.base.orientation_noise_deg;
        j["seed"] = ranges.base.seed;
        j["oracle"] = {{"sigma0", ocfg.sigma0},
                       {"k_hp", ocfg.k_hp},
                       {"texture_coeff", ocfg.texture_coeff},
                       {"noise_sd", ocfg.noise_sd},
                       {"seed", ocfg.seed}};
        const std::string path =
            (std::filesystem::path(out_dir) / "gen_config.json").string();
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot open for writing: " + path);
        }
        out << j.dump(2) << '\n';
    }
    return manifest;
}

std::string serialize_manifest_csv(const DatasetManifest& manifest) {
    std::string out = "sample_id,ys\n";
    for (const ManifestEntry& e : manifest.entries) {
        out += e.sample_id;
        out += ',';
        out += format_double(e.ys);
        out += '\n';
    }
    return out;
}

DatasetManifest load_manifest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty manifest: " + path);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "sample_id,ys") {
        throw FormatError("manifest header must be 'sample_id,ys', got '" + line + "'");
    }
    DatasetManifest manifest;
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": missing comma");
        }
        ManifestEntry e;
        e.sample_id = line.substr(0, comma);
        const std::string ys_str = line.substr(comma + 1);
        double ys = 0.0;
        const auto res = std::from_chars(ys_str.data(), ys_str.data() + ys_str.size(), ys);
        if (res.ec != std::errc() || res.ptr != ys_str.data() + ys_str.size()) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": bad ys value '" +
                              ys_str + "'");
        }
        e.ys = ys;
        e.scan_path = (dir / (e.sample_id + ".csv")).string();
        manifest.entries.push_back(e);
    }
    return manifest;
}

} // namespace graingraph
