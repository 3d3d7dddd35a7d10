#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tsad/ensemble.hpp"
#include "tsad/errors.hpp"
#include "tsad/model_io.hpp"
#include "tsad/rng.hpp"

using namespace tsad;

namespace {

Matrix wave_series(std::size_t n, std::size_t d, std::uint64_t seed) {
    RngStream rng(seed);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m(i, j) = std::sin(0.1 * static_cast<double>(i * (j + 1))) +
                      0.1 * rng.next_normal();
    return m;
}

ModelBundle make_bundle(std::uint64_t seed, bool with_stacking) {
    EnsembleConfig cfg;
    cfg.method = Method::NestedRotations;
    cfg.members = 3;
    cfg.window_length = 8;
    cfg.seed = seed;
    cfg.training.epochs = 2;
    DetectorSpec pca;
    pca.kind = DetectorKind::LinearPca;
    DetectorSpec ae;
    ae.ae_hidden = {6, 3};
    cfg.detector_specs = {pca, ae};

    ModelBundle bundle;
    bundle.config = cfg;
    bundle.members = fit_ensemble(wave_series(150, 6, seed), cfg);
    if (with_stacking) {
        StackingHead head;
        head.logistic.weights = {0.5, -0.25, 1.75};
        head.logistic.bias = -0.125;
        const ScoreMatrix raw =
            score_points(bundle.members, wave_series(60, 6, seed + 1));
        head.score_stats = standardize_fit(raw.scores);
        bundle.stacking = head;
    }
    return bundle;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(out);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

bool members_equal(const EnsembleMember& a, const EnsembleMember& b) {
    return a.feature_subset == b.feature_subset && a.threshold == b.threshold &&
           a.detector.weights == b.detector.weights &&
           a.detector.dims == b.detector.dims &&
           a.detector.input_dim == b.detector.input_dim &&
           a.detector.window_length == b.detector.window_length &&
           a.detector.spec.kind == b.detector.spec.kind &&
           a.standardizer.means == b.standardizer.means &&
           a.standardizer.stds == b.standardizer.stds &&
           a.rotation.assembled == b.rotation.assembled &&
           a.rotation.partition_layout == b.rotation.partition_layout;
}

} // namespace

TEST_CASE("a reloaded model reproduces the saved one bit for bit") {
    const ModelBundle bundle = make_bundle(31, false);
    TempFile f("tsad_model_roundtrip.bin");
    save_model(bundle, f.path.string());

    const ModelBundle loaded = load_model(f.path.string());
    CHECK(loaded.config.method == bundle.config.method);
    CHECK(loaded.config.members == bundle.config.members);
    CHECK(loaded.config.partitions == bundle.config.partitions);
    CHECK(loaded.config.subsample_fraction == bundle.config.subsample_fraction);
    CHECK(loaded.config.window_length == bundle.config.window_length);
    CHECK(loaded.config.threshold_mode == bundle.config.threshold_mode);
    CHECK(loaded.config.seed == bundle.config.seed);
    CHECK(loaded.config.training.epochs == bundle.config.training.epochs);
    CHECK(loaded.config.detector_specs.size() == 2);
    CHECK(loaded.config.detector_specs[1].ae_hidden ==
          bundle.config.detector_specs[1].ae_hidden);
    CHECK_FALSE(loaded.stacking.has_value());

    REQUIRE(loaded.members.size() == bundle.members.size());
    for (std::size_t i = 0; i < bundle.members.size(); ++i)
        CHECK(members_equal(loaded.members[i], bundle.members[i]));

    // Scoring new data gives bitwise-identical results.
    const Matrix eval = wave_series(50, 6, 99);
    const ScoreMatrix a = score_points(bundle.members, eval);
    const ScoreMatrix b = score_points(loaded.members, eval);
    CHECK(a.scores == b.scores);
    CHECK(a.binary == b.binary);
}

TEST_CASE("the stacking head round-trips") {
    const ModelBundle bundle = make_bundle(32, true);
    TempFile f("tsad_model_stacked.bin");
    save_model(bundle, f.path.string());
    const ModelBundle loaded = load_model(f.path.string());
    REQUIRE(loaded.stacking.has_value());
    CHECK(loaded.stacking->logistic.weights == bundle.stacking->logistic.weights);
    CHECK(loaded.stacking->logistic.bias == bundle.stacking->logistic.bias);
    CHECK(loaded.stacking->score_stats.means == bundle.stacking->score_stats.means);
    CHECK(loaded.stacking->score_stats.stds == bundle.stacking->score_stats.stds);
}

TEST_CASE("truncated files are rejected as corrupt") {
    const ModelBundle bundle = make_bundle(33, false);
    TempFile f("tsad_model_trunc.bin");
    save_model(bundle, f.path.string());
    const auto bytes = slurp(f.path);

    for (std::size_t keep : {bytes.size() - 1, bytes.size() / 2, std::size_t{21}}) {
        std::vector<std::uint8_t> cut(bytes.begin(),
                                      bytes.begin() + static_cast<std::ptrdiff_t>(keep));
        dump(f.path, cut);
        CHECK_THROWS_AS(load_model(f.path.string()), CorruptModelError);
    }

    // Too short to even hold the header.
    dump(f.path, {bytes.begin(), bytes.begin() + 5});
    CHECK_THROWS_AS(load_model(f.path.string()), DataError);
}

TEST_CASE("payload corruption fails the checksum") {
    const ModelBundle bundle = make_bundle(34, false);
    TempFile f("tsad_model_flip.bin");
    save_model(bundle, f.path.string());
    auto bytes = slurp(f.path);

    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40; // somewhere inside the payload
    dump(f.path, flipped);
    CHECK_THROWS_AS(load_model(f.path.string()), CorruptModelError);

    flipped = bytes;
    flipped[bytes.size() - 1] ^= 0x01; // the stored checksum itself
    dump(f.path, flipped);
    CHECK_THROWS_AS(load_model(f.path.string()), CorruptModelError);

    // Appending trailing bytes must also fail: the length is part of the format.
    flipped = bytes;
    flipped.push_back(0);
    dump(f.path, flipped);
    CHECK_THROWS_AS(load_model(f.path.string()), CorruptModelError);
}

TEST_CASE("an unsupported format version is reported as such") {
    const ModelBundle bundle = make_bundle(35, false);
    TempFile f("tsad_model_version.bin");
    save_model(bundle, f.path.string());
    auto bytes = slurp(f.path);
    bytes[8] = 2; // format version lives right after the 8-byte magic
    dump(f.path, bytes);
    CHECK_THROWS_AS(load_model(f.path.string()), ModelVersionError);
}

TEST_CASE("files without the magic are not model files") {
    TempFile f("tsad_model_magic.bin");
    dump(f.path, std::vector<std::uint8_t>(64, 0x5A));
    CHECK_THROWS_AS(load_model(f.path.string()), DataError);

    const ModelBundle bundle = make_bundle(36, false);
    save_model(bundle, f.path.string());
    auto bytes = slurp(f.path);
    bytes[0] ^= 0xFF;
    dump(f.path, bytes);
    CHECK_THROWS_AS(load_model(f.path.string()), DataError);
}

TEST_CASE("filesystem failures map to IoError") {
    CHECK_THROWS_AS(load_model("/nonexistent/dir/model.bin"), IoError);
    const ModelBundle bundle = make_bundle(37, false);
    CHECK_THROWS_AS(save_model(bundle, "/nonexistent/dir/model.bin"), IoError);
}
