#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graingraph/errors.hpp"
#include "graingraph/microsynth.hpp"
#include "graingraph/orientation.hpp"
#include "graingraph/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <vector>

using namespace graingraph;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Nearest-site labeling recomputed independently from the returned sites.
int brute_force_label(int r, int c, const std::vector<std::pair<int, int>>& sites) {
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
    return best_site + 1;
}

std::filesystem::path fresh_dir(const char* tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     (std::string("graingraph_test_") + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("voronoi labels match a brute-force nearest-site scan") {
    std::mt19937_64 seeds(1);
    for (int trial = 0; trial < 20; ++trial) {
        SynthConfig cfg;
        cfg.rows = 20 + static_cast<int>(seeds() % 30);
        cfg.cols = 20 + static_cast<int>(seeds() % 30);
        cfg.n_grains = 3 + static_cast<int>(seeds() % 12);
        cfg.seed = seeds();
        const VoronoiResult vor = gen_voronoi(cfg);
        REQUIRE(static_cast<int>(vor.sites.size()) == cfg.n_grains);
        for (int r = 0; r < cfg.rows; ++r) {
            for (int c = 0; c < cfg.cols; ++c) {
                CHECK(vor.labels.at(r, c) == brute_force_label(r, c, vor.sites));
            }
        }
    }
}

TEST_CASE("voronoi sites are distinct and own their pixel") {
    SynthConfig cfg;
    cfg.rows = 12;
    cfg.cols = 12;
    cfg.n_grains = 30; // dense enough to force duplicate draws
    cfg.seed = 4;
    const VoronoiResult vor = gen_voronoi(cfg);
    std::set<std::pair<int, int>> unique(vor.sites.begin(), vor.sites.end());
    CHECK(unique.size() == vor.sites.size());
    for (std::size_t s = 0; s < vor.sites.size(); ++s) {
        CHECK(vor.labels.at(vor.sites[s].first, vor.sites[s].second) ==
              static_cast<int>(s) + 1);
    }
}

TEST_CASE("every voronoi cell is non-empty and 4-connected") {
    for (const std::uint64_t seed : {0ULL, 1ULL, 2ULL, 11ULL, 99ULL}) {
        SynthConfig cfg;
        cfg.rows = 64;
        cfg.cols = 64;
        cfg.n_grains = 25;
        cfg.seed = seed;
        const VoronoiResult vor = gen_voronoi(cfg);

        std::vector<int> total(static_cast<std::size_t>(cfg.n_grains), 0);
        for (const int lbl : vor.labels.labels) {
            ++total[static_cast<std::size_t>(lbl - 1)];
        }
        for (const int t : total) {
            CHECK(t > 0);
        }
        // flood fill from each site must reach the whole cell
        std::vector<char> visited(vor.labels.labels.size(), 0);
        for (std::size_t s = 0; s < vor.sites.size(); ++s) {
            std::vector<int> stack{vor.sites[s].first * cfg.cols + vor.sites[s].second};
            visited[static_cast<std::size_t>(stack[0])] = 1;
            int reached = 0;
            const int want = static_cast<int>(s) + 1;
            while (!stack.empty()) {
                const int px = stack.back();
                stack.pop_back();
                ++reached;
                const int r = px / cfg.cols, c = px % cfg.cols;
                const int nbr[4] = {px - cfg.cols, px + cfg.cols, px - 1, px + 1};
                const bool ok[4] = {r > 0, r + 1 < cfg.rows, c > 0, c + 1 < cfg.cols};
                for (int k = 0; k < 4; ++k) {
                    if (ok[k] && !visited[static_cast<std::size_t>(nbr[k])] &&
                        vor.labels.labels[static_cast<std::size_t>(nbr[k])] == want) {
                        visited[static_cast<std::size_t>(nbr[k])] = 1;
                        stack.push_back(nbr[k]);
                    }
                }
            }
            CHECK(reached == total[s]);
        }
    }
}

TEST_CASE("voronoi rejects impossible configurations") {
    SynthConfig cfg;
    cfg.rows = 3;
    cfg.cols = 3;
    cfg.n_grains = 10;
    CHECK_THROWS_AS(gen_voronoi(cfg), ValueError);
    cfg.n_grains = 0;
    CHECK_THROWS_AS(gen_voronoi(cfg), ValueError);
}

TEST_CASE("generation is deterministic in the seed") {
    SynthConfig cfg;
    cfg.rows = 48;
    cfg.cols = 48;
    cfg.n_grains = 14;
    cfg.orientation_noise_deg = 3.0;
    cfg.seed = 123;
    const VoronoiResult v1 = gen_voronoi(cfg);
    const VoronoiResult v2 = gen_voronoi(cfg);
    CHECK(v1.labels.labels == v2.labels.labels);
    CHECK(v1.sites == v2.sites);
    CHECK(assign_orientations(v1.labels, cfg) == assign_orientations(v2.labels, cfg));

    cfg.seed = 124;
    CHECK(gen_voronoi(cfg).labels.labels != v1.labels.labels);
}

TEST_CASE("zero-noise fields segment back to the generator partition") {
    for (const std::uint64_t seed : {0ULL, 3ULL, 7ULL, 13ULL, 31ULL}) {
        SynthConfig cfg;
        cfg.rows = 64;
        cfg.cols = 64;
        cfg.n_grains = 20;
        cfg.orientation_noise_deg = 0.0;
        cfg.seed = seed;
        const VoronoiResult vor = gen_voronoi(cfg);
        const ScanField f = assign_orientations(vor.labels, cfg);
        const LabelGrid seg = segment_grains(f, 5.0);
        REQUIRE(seg.n_labels == cfg.n_grains);
        // exact partition match up to relabeling: the label pairing must be a
        // bijection
        std::map<int, int> fwd, bwd;
        for (std::size_t i = 0; i < seg.labels.size(); ++i) {
            const int a = vor.labels.labels[i];
            const int b = seg.labels[i];
            const auto [it_f, new_f] = fwd.try_emplace(a, b);
            CHECK(it_f->second == b);
            const auto [it_b, new_b] = bwd.try_emplace(b, a);
            CHECK(it_b->second == a);
        }
    }
}

TEST_CASE("zero noise leaves all pixels of a grain identical") {
    SynthConfig cfg;
    cfg.rows = 32;
    cfg.cols = 32;
    cfg.n_grains = 6;
    cfg.orientation_noise_deg = 0.0;
    cfg.seed = 17;
    const VoronoiResult vor = gen_voronoi(cfg);
    const ScanField f = assign_orientations(vor.labels, cfg);
    std::map<int, EulerDeg> rep;
    for (int r = 0; r < cfg.rows; ++r) {
        for (int c = 0; c < cfg.cols; ++c) {
            const int lbl = vor.labels.at(r, c);
            const auto [it, fresh] = rep.try_emplace(lbl, f.at(r, c).euler);
            if (!fresh) {
                CHECK(f.at(r, c).euler.phi1 == it->second.phi1);
                CHECK(f.at(r, c).euler.Phi == it->second.Phi);
                CHECK(f.at(r, c).euler.phi2 == it->second.phi2);
            }
        }
    }
}

TEST_CASE("uniform texture draws Phi with the sin distribution") {
    // For orientations uniform on SO(3), cos(Phi) is uniform on [-1, 1].
    // Chi-square over 10 equal cos bins, 4000 grains, alpha well below 1e-6.
    SynthConfig cfg;
    cfg.rows = 1;
    cfg.cols = 4000;
    cfg.n_grains = 4000;
    cfg.texture = TextureMode::Uniform;
    cfg.seed = 99;
    const VoronoiResult vor = gen_voronoi(cfg);
    const ScanField f = assign_orientations(vor.labels, cfg);
    std::array<int, 10> counts{};
    for (const ScanPoint& p : f.points) {
        const double c = std::cos(p.euler.Phi * kPi / 180.0);
        int bin = static_cast<int>((c + 1.0) / 0.2);
        bin = std::max(0, std::min(9, bin));
        ++counts[static_cast<std::size_t>(bin)];
    }
    const double expected = 4000.0 / 10.0;
    double chi2 = 0.0;
    for (const int n : counts) {
        chi2 += (n - expected) * (n - expected) / expected;
    }
    CHECK(chi2 < 60.0); // df=9; P(chi2 > 60) ~ 2e-9
}

TEST_CASE("fiber texture concentrates near the fiber axis") {
    SynthConfig cfg;
    cfg.rows = 1;
    cfg.cols = 2000;
    cfg.n_grains = 2000;
    cfg.texture = TextureMode::Fiber;
    cfg.fiber_axis = {0.0, 0.0, 1.0};
    cfg.fiber_spread_deg = 10.0;
    cfg.seed = 7;
    const VoronoiResult vor = gen_voronoi(cfg);
    const ScanField f = assign_orientations(vor.labels, cfg);
    double mean_dev = 0.0;
    for (const ScanPoint& p : f.points) {
        mean_dev += p.euler.Phi; // Phi is the c-axis tilt from Z
    }
    mean_dev /= static_cast<double>(f.points.size());
    // half-normal with sd 10: mean = 10 * sqrt(2/pi) ~ 7.98
    CHECK(mean_dev > 6.0);
    CHECK(mean_dev < 10.0);

    SynthConfig bad = cfg;
    bad.fiber_spread_deg = 0.0;
    CHECK_THROWS_AS(assign_orientations(vor.labels, bad), ValueError);
}

TEST_CASE("per-pixel jitter has the configured magnitude") {
    SynthConfig cfg;
    cfg.rows = 50;
    cfg.cols = 50;
    cfg.n_grains = 1;
    cfg.orientation_noise_deg = 5.0;
    cfg.seed = 31;
    const VoronoiResult vor = gen_voronoi(cfg);
    const ScanField noisy = assign_orientations(vor.labels, cfg);
    SynthConfig clean = cfg;
    clean.orientation_noise_deg = 0.0;
    const ScanField base = assign_orientations(vor.labels, clean);

    double acc = 0.0;
    for (std::size_t i = 0; i < noisy.points.size(); ++i) {
        const double d = misorientation_deg(noisy.points[i].euler, base.points[i].euler);
        acc += d * d;
    }
    const double rms = std::sqrt(acc / static_cast<double>(noisy.points.size()));
    // small-angle jitter: rms misorientation tracks the noise scale
    CHECK(rms > 3.0);
    CHECK(rms < 8.0);
}

TEST_CASE("oracle property follows the closed-form law at zero noise") {
    GrainTable t;
    t.grains.push_back(Grain{1, 0, 16.0, EulerDeg{0.0, 30.0, 0.0}, 20.0, 0.0, 0.0});
    t.grains.push_back(Grain{2, 0, 9.0, EulerDeg{0.0, 60.0, 0.0}, 18.0, 0.0, 0.0});
    t.grains.push_back(Grain{3, 0, 25.0, EulerDeg{0.0, 80.0, 0.0}, 30.0, 0.0, 0.0});
    OracleConfig ocfg;
    ocfg.sigma0 = 40.0;
    ocfg.k_hp = 150.0;
    ocfg.texture_coeff = 60.0;
    ocfg.noise_sd = 0.0;
    // mean size (16+9+25)/3; one of three grains below 45 degrees
    const double want =
        40.0 + 150.0 / std::sqrt(50.0 / 3.0) + 60.0 * (1.0 / 3.0);
    CHECK(oracle_property(t, ocfg) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("oracle noise is reproducible and has the configured scale") {
    GrainTable t;
    t.grains.push_back(Grain{1, 0, 10.0, EulerDeg{0.0, 90.0, 0.0}, 12.0, 0.0, 0.0});
    OracleConfig ocfg;
    ocfg.noise_sd = 5.0;
    ocfg.seed = 1;
    const double base = [&] {
        OracleConfig c = ocfg;
        c.noise_sd = 0.0;
        return oracle_property(t, c);
    }();
    CHECK(oracle_property(t, ocfg) == oracle_property(t, ocfg));
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        OracleConfig c = ocfg;
        c.seed = s;
        const double d = oracle_property(t, c) - base;
        acc += d * d;
    }
    const double sd = std::sqrt(acc / 4000.0);
    CHECK(sd > 4.0);
    CHECK(sd < 6.0);
}

TEST_CASE("gen_dataset writes scans, manifest, and a config echo") {
    const auto dir = fresh_dir("dataset");
    const int n = 5;
    DatasetRanges ranges;
    ranges.base.rows = 24;
    ranges.base.cols = 24;
    ranges.base.seed = 50;
    ranges.n_grains_min = 4;
    ranges.n_grains_max = 8;
    OracleConfig ocfg;
    ocfg.noise_sd = 2.0;
    ocfg.seed = 50;
    const DatasetManifest manifest = gen_dataset(n, ranges, ocfg, dir.string());
    REQUIRE(static_cast<int>(manifest.entries.size()) == n);

    CHECK(std::filesystem::exists(dir / "manifest.csv"));
    CHECK(std::filesystem::exists(dir / "gen_config.json"));
    for (int i = 0; i < n; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "s%03d.csv", i);
        CHECK(std::filesystem::exists(dir / name));
    }

    const DatasetManifest loaded = load_manifest_csv((dir / "manifest.csv").string());
    REQUIRE(loaded.entries.size() == manifest.entries.size());
    for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
        CHECK(loaded.entries[i].sample_id == manifest.entries[i].sample_id);
        CHECK(loaded.entries[i].ys == manifest.entries[i].ys);
        CHECK(std::filesystem::exists(loaded.entries[i].scan_path));
    }

    // per-sample seeds differ: the first two scans must not coincide
    const ScanField s0 = read_scan_csv((dir / "s000.csv").string());
    const ScanField s1 = read_scan_csv((dir / "s001.csv").string());
    CHECK(!(s0 == s1));
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest loader rejects bad headers") {
    const auto dir = fresh_dir("manifest");
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "manifest.csv", std::ios::binary);
        out << "id,label\nx,1\n";
    }
    CHECK_THROWS_AS(load_manifest_csv((dir / "manifest.csv").string()), FormatError);
    CHECK_THROWS_AS(load_manifest_csv((dir / "missing.csv").string()), IoError);
    std::filesystem::remove_all(dir);
}
