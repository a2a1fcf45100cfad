#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graingraph/errors.hpp"
#include "graingraph/pipeline.hpp"
#include "graingraph/svg_plot.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using namespace graingraph;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const auto dir = std::filesystem::temp_directory_path() /
                     ("graingraph_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

ScanField synth_field(std::uint64_t seed, int n_grains) {
    SynthConfig cfg;
    cfg.rows = 40;
    cfg.cols = 40;
    cfg.n_grains = n_grains;
    cfg.seed = seed;
    const VoronoiResult vor = gen_voronoi(cfg);
    return assign_orientations(vor.labels, cfg);
}

std::string px(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// Minimal XML well-formedness scan: tags balance, one root element.
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    int roots = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t end = text.find('>', i);
        if (end == std::string::npos) {
            return false;
        }
        std::string tag = text.substr(i + 1, end - i - 1);
        i = end + 1;
        if (tag.empty()) {
            return false;
        }
        if (tag[0] == '?' || tag[0] == '!') {
            continue;
        }
        const bool closing = tag[0] == '/';
        const bool self_closing = tag.back() == '/';
        if (closing) {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) {
                return false;
            }
            stack.pop_back();
            continue;
        }
        std::string name = tag;
        if (self_closing) {
            name.pop_back();
        }
        const std::size_t sp = name.find_first_of(" \t\n");
        if (sp != std::string::npos) {
            name = name.substr(0, sp);
        }
        if (name.empty()) {
            return false;
        }
        if (stack.empty()) {
            ++roots;
            if (roots > 1) {
                return false;
            }
        }
        if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty() && roots == 1;
}

} // namespace

TEST_CASE("ingest reproduces direct segmentation plus metrics") {
    const ScanField field = synth_field(3, 12);
    IngestConfig cfg;
    cfg.threshold_deg = 5.0;
    cfg.symmetry = Symmetry::None;
    const GrainTable got = ingest_scan(field, cfg);
    const LabelGrid labels = segment_grains(field, 5.0, Symmetry::None);
    const GrainTable want = grain_metrics(field, labels);
    CHECK(serialize_grains_csv(got) == serialize_grains_csv(want));
    CHECK(serialize_adjacency_csv(got) == serialize_adjacency_csv(want));
    CHECK(static_cast<int>(got.grains.size()) == labels.n_labels);

    IngestConfig bad;
    bad.threshold_deg = 0.0;
    CHECK_THROWS_AS(ingest_scan(field, bad), ValueError);
}

TEST_CASE("ingest from file round-trips through scan csv") {
    const auto dir = fresh_dir("ingest");
    const ScanField field = synth_field(4, 8);
    const std::string path = (dir / "scan.csv").string();
    write_scan_csv(field, path);
    IngestConfig cfg;
    const GrainTable from_file = ingest_scan_file(path, cfg);
    const GrainTable direct = ingest_scan(field, cfg);
    CHECK(serialize_grains_csv(from_file) == serialize_grains_csv(direct));
    CHECK_THROWS_AS(ingest_scan_file((dir / "missing.csv").string(), cfg), IoError);
}

TEST_CASE("dataset loading follows the manifest") {
    const auto dir = fresh_dir("dataset");
    DatasetRanges ranges;
    ranges.base.rows = 32;
    ranges.base.cols = 32;
    ranges.base.seed = 5;
    ranges.n_grains_min = 6;
    ranges.n_grains_max = 12;
    OracleConfig ocfg;
    ocfg.noise_sd = 2.0;
    ocfg.seed = 9;
    const DatasetManifest manifest = gen_dataset(4, ranges, ocfg, dir.string());
    REQUIRE(manifest.entries.size() == 4);

    IngestConfig icfg;
    const std::vector<LabeledTable> tables =
        load_dataset_tables((dir / "manifest.csv").string(), icfg);
    REQUIRE(tables.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(tables[i].id == manifest.entries[i].sample_id);
        CHECK(tables[i].ys == manifest.entries[i].ys);
        CHECK(!tables[i].table.grains.empty());
    }
    CHECK_THROWS_AS(load_dataset_tables((dir / "nope.csv").string(), icfg), IoError);
}

TEST_CASE("dataset graphs share one discretization and carry labels") {
    const auto dir = fresh_dir("graphs");
    DatasetRanges ranges;
    ranges.base.rows = 32;
    ranges.base.cols = 32;
    ranges.base.seed = 6;
    ranges.n_grains_min = 6;
    ranges.n_grains_max = 10;
    OracleConfig ocfg;
    ocfg.seed = 10;
    gen_dataset(3, ranges, ocfg, dir.string());
    const std::vector<LabeledTable> tables =
        load_dataset_tables((dir / "manifest.csv").string(), IngestConfig{});

    const GraphDataset ds = build_dataset_graphs(tables, 6, 2, 0.2, PhiRangeMode::Fixed);
    REQUIRE(ds.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const GrainGraph& g = ds.samples[i].graph;
        CHECK(ds.samples[i].id == tables[i].id);
        CHECK(g.discretization == ds.disc);
        REQUIRE(g.label.has_value());
        CHECK(*g.label == tables[i].ys);
        validate_graph(g);
    }
    // the fitted size range spans every table, not just its own
    std::vector<GrainTable> raw;
    for (const LabeledTable& t : tables) {
        raw.push_back(t.table);
    }
    CHECK(ds.disc == fit_discretization(raw, 6, 2, 0.2, PhiRangeMode::Fixed));
}

TEST_CASE("descriptor matrix rows align with ids and labels") {
    const auto dir = fresh_dir("desc");
    DatasetRanges ranges;
    ranges.base.rows = 32;
    ranges.base.cols = 32;
    ranges.base.seed = 7;
    OracleConfig ocfg;
    ocfg.seed = 11;
    gen_dataset(3, ranges, ocfg, dir.string());
    const std::vector<LabeledTable> tables =
        load_dataset_tables((dir / "manifest.csv").string(), IngestConfig{});
    const DiscretizationConfig disc = build_dataset_graphs(tables, 6, 2, 0.2,
                                                           PhiRangeMode::Fixed).disc;

    const DescriptorMatrix dm = dataset_descriptors(tables, disc);
    REQUIRE(dm.ids.size() == 3);
    REQUIRE(dm.X.size() == 3);
    REQUIRE(dm.y.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(dm.ids[i] == tables[i].id);
        CHECK(dm.y[i] == tables[i].ys);
        CHECK(dm.X[i] == descriptors(tables[i].table, disc));
    }
}

TEST_CASE("scatter plot places perfect predictions on the identity line") {
    const std::vector<SamplePrediction> samples{
        {"a", 0, 10.0, 10.0}, {"b", 1, 20.0, 20.0}, {"c", 2, 30.0, 30.0}};
    const std::string svg = render_scatter_svg(samples, "calibration");
    CHECK(count_occurrences(svg, "<circle") == 3);
    CHECK(svg.find("R&#178; = 1.0000") != std::string::npos);
    CHECK(svg.find("calibration") != std::string::npos);

    // recompute the pixel affine: data range [10,30] padded by 5% each side
    const double lo = 9.0, hi = 31.0;
    const double x0 = 70.0, x1 = 620.0, y0 = 430.0, y1 = 40.0;
    for (const SamplePrediction& s : samples) {
        const double cx = x0 + (s.y_true - lo) / (hi - lo) * (x1 - x0);
        const double cy = y0 + (s.y_pred - lo) / (hi - lo) * (y1 - y0);
        const std::string want = "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\"";
        CHECK(svg.find(want) != std::string::npos);
    }
}

TEST_CASE("scatter omits the fit caption when measured values are constant") {
    const std::vector<SamplePrediction> samples{{"a", 0, 5.0, 4.0}, {"b", 1, 5.0, 6.0}};
    const std::string svg = render_scatter_svg(samples, "flat");
    CHECK(svg.find("R&#178;") == std::string::npos);
    CHECK(count_occurrences(svg, "<circle") == 2);
}

TEST_CASE("plots reject empty inputs") {
    CHECK_THROWS_AS(render_scatter_svg({}, "t"), ValueError);
    CHECK_THROWS_AS(render_loss_svg({}, "t"), ValueError);
}

TEST_CASE("loss plot draws one vertex per epoch") {
    const std::string one = render_loss_svg({0.7}, "loss");
    CHECK(count_occurrences(one, "<circle") == 1);
    CHECK(one.find("<polyline") == std::string::npos);

    const std::vector<double> trace{0.9, 0.5, 0.3, 0.25, 0.24};
    const std::string svg = render_loss_svg(trace, "loss");
    const std::size_t at = svg.find("points=\"");
    REQUIRE(at != std::string::npos);
    const std::size_t end = svg.find('"', at + 8);
    const std::string pts = svg.substr(at + 8, end - at - 8);
    CHECK(count_occurrences(pts, ",") == trace.size());
}

TEST_CASE("titles with markup characters stay escaped") {
    const std::vector<SamplePrediction> samples{{"a", 0, 1.0, 2.0}, {"b", 1, 3.0, 2.5}};
    const std::string svg = render_scatter_svg(samples, "a<b & \"c\" > 'd'");
    CHECK(svg.find("a&lt;b &amp; &quot;c&quot; &gt; &apos;d&apos;") != std::string::npos);
    CHECK(xml_well_formed(svg));
}

TEST_CASE("rendered documents stay well-formed across random inputs") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> v(-1e4, 1e4);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 10);
        std::vector<SamplePrediction> samples;
        for (int i = 0; i < n; ++i) {
            samples.push_back({"s" + std::to_string(i), i, v(rng), v(rng)});
        }
        if (trial % 7 == 0) {
            for (auto& s : samples) {
                s.y_true = 42.0; // constant measured branch
            }
        }
        CHECK(xml_well_formed(render_scatter_svg(samples, "trial " + std::to_string(trial))));

        std::vector<double> trace;
        for (int i = 0; i < 1 + static_cast<int>(rng() % 6); ++i) {
            trace.push_back(std::abs(v(rng)));
        }
        if (trial % 5 == 0) {
            trace.assign(3, 1.25); // zero-span axis branch
        }
        CHECK(xml_well_formed(render_loss_svg(trace, "loss " + std::to_string(trial))));
    }
}

TEST_CASE("svg files land on disk intact") {
    const auto dir = fresh_dir("svg");
    const std::string path = (dir / "plot.svg").string();
    const std::string svg = render_loss_svg({1.0, 0.5}, "t");
    write_svg_file(svg, path);
    std::ifstream in(path, std::ios::binary);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body == svg);
    CHECK_THROWS_AS(write_svg_file(svg, (dir / "no" / "dir" / "x.svg").string()), IoError);
}
