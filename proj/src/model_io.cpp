#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/model_io.hpp"

namespace tsad {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'D', 'M', 'D', 'L', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : data)
        crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xFFu);
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back((v >> (8 * i)) & 0xFFu);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void sizes(const std::vector<std::size_t>& v) {
        u64(v.size());
        for (std::size_t x : v) u64(x);
    }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (double x : m.row(i)) f64(x);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        const auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> doubles() {
        std::vector<double> v(count());
        for (double& x : v) x = f64();
        return v;
    }
    std::vector<std::size_t> sizes() {
        std::vector<std::size_t> v(count());
        for (std::size_t& x : v) x = u64();
        return v;
    }
    Matrix matrix() {
        const std::size_t rows = count();
        const std::size_t cols = count();
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = f64();
        return m;
    }

    bool done() const { return pos_ == data_.size(); }

    // Element counts are bounded by the remaining bytes so corrupt counts
    // cannot trigger huge allocations before the overrun is noticed.
    std::size_t count() {
        const std::uint64_t n = u64();
        if (n > data_.size() - pos_)
            throw CorruptModelError("corrupt model file: implausible element count");
        return static_cast<std::size_t>(n);
    }

private:
    std::span<const std::uint8_t> take(std::size_t n) {
        if (data_.size() - pos_ < n)
            throw CorruptModelError("corrupt model file: truncated payload");
        const auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void write_spec(Writer& w, const DetectorSpec& spec) {
    w.u8(static_cast<std::uint8_t>(spec.kind));
    w.sizes(spec.ae_hidden);
    w.u64(spec.lstm_hidden);
    w.u64(spec.pca_components);
}

DetectorSpec read_spec(Reader& r) {
    DetectorSpec spec;
    spec.kind = static_cast<DetectorKind>(r.u8());
    spec.ae_hidden = r.sizes();
    spec.lstm_hidden = r.u64();
    spec.pca_components = r.u64();
    spec.validate();
    return spec;
}

void write_standardizer(Writer& w, const Standardizer& s) {
    w.doubles(s.means);
    w.doubles(s.stds);
}

Standardizer read_standardizer(Reader& r) {
    Standardizer s;
    s.means = r.doubles();
    s.stds = r.doubles();
    if (s.means.size() != s.stds.size())
        throw CorruptModelError("corrupt model file: standardizer shape");
    return s;
}

void write_member(Writer& w, const EnsembleMember& member) {
    w.sizes(member.feature_subset);
    w.u64(member.rotation.partition_layout.size());
    for (const auto& group : member.rotation.partition_layout) w.sizes(group);
    w.u64(member.rotation.blocks.size());
    for (const Matrix& block : member.rotation.blocks) w.matrix(block);
    w.matrix(member.rotation.assembled);
    write_standardizer(w, member.standardizer);
    write_spec(w, member.detector.spec);
    w.u64(member.detector.input_dim);
    w.u64(member.detector.window_length);
    w.u32(TrainedDetector::kLayoutVersion);
    w.sizes(member.detector.dims);
    w.doubles(member.detector.weights);
    w.f64(member.threshold);
}

EnsembleMember read_member(Reader& r) {
    EnsembleMember member;
    member.feature_subset = r.sizes();
    member.rotation.partition_layout.resize(r.count());
    for (auto& group : member.rotation.partition_layout) group = r.sizes();
    member.rotation.blocks.resize(r.count());
    for (Matrix& block : member.rotation.blocks) block = r.matrix();
    member.rotation.assembled = r.matrix();
    member.standardizer = read_standardizer(r);
    member.detector.spec = read_spec(r);
    member.detector.input_dim = r.u64();
    member.detector.window_length = r.u64();
    if (r.u32() != TrainedDetector::kLayoutVersion)
        throw ModelVersionError("unsupported detector weight layout version");
    member.detector.dims = r.sizes();
    member.detector.weights = r.doubles();
    member.threshold = r.f64();
    return member;
}

void write_config(Writer& w, const EnsembleConfig& cfg) {
    w.u8(static_cast<std::uint8_t>(cfg.method));
    w.u8(static_cast<std::uint8_t>(cfg.threshold_mode));
    w.u64(cfg.members);
    w.u64(cfg.partitions);
    w.f64(cfg.subsample_fraction);
    w.u64(cfg.window_length);
    w.u64(cfg.seed);
    w.u64(cfg.training.epochs);
    w.u64(cfg.training.batch_size);
    w.f64(cfg.training.learning_rate);
    w.f64(cfg.training.adam_beta1);
    w.f64(cfg.training.adam_beta2);
    w.f64(cfg.training.adam_eps);
    w.u64(cfg.training.seed);
    w.u64(cfg.detector_specs.size());
    for (const DetectorSpec& spec : cfg.detector_specs) write_spec(w, spec);
}

EnsembleConfig read_config(Reader& r) {
    EnsembleConfig cfg;
    const std::uint8_t method = r.u8();
    if (method > static_cast<std::uint8_t>(Method::Stacked))
        throw CorruptModelError("corrupt model file: unknown method");
    cfg.method = static_cast<Method>(method);
    const std::uint8_t mode = r.u8();
    if (mode > static_cast<std::uint8_t>(ThresholdMode::Tukey))
        throw CorruptModelError("corrupt model file: unknown threshold mode");
    cfg.threshold_mode = static_cast<ThresholdMode>(mode);
    cfg.members = r.u64();
    cfg.partitions = r.u64();
    cfg.subsample_fraction = r.f64();
    cfg.window_length = r.u64();
    cfg.seed = r.u64();
    cfg.training.epochs = r.u64();
    cfg.training.batch_size = r.u64();
    cfg.training.learning_rate = r.f64();
    cfg.training.adam_beta1 = r.f64();
    cfg.training.adam_beta2 = r.f64();
    cfg.training.adam_eps = r.f64();
    cfg.training.seed = r.u64();
    cfg.detector_specs.resize(r.count());
    for (DetectorSpec& spec : cfg.detector_specs) spec = read_spec(r);
    return cfg;
}

} // namespace

void save_model(const ModelBundle& bundle, const std::string& path) {
    Writer payload;
    write_config(payload, bundle.config);
    payload.u64(bundle.members.size());
    for (const EnsembleMember& member : bundle.members)
        write_member(payload, member);
    payload.u8(bundle.stacking.has_value() ? 1 : 0);
    if (bundle.stacking.has_value()) {
        payload.doubles(bundle.stacking->logistic.weights);
        payload.f64(bundle.stacking->logistic.bias);
        write_standardizer(payload, bundle.stacking->score_stats);
    }

    Writer header;
    for (char c : kMagic) header.u8(static_cast<std::uint8_t>(c));
    header.u32(kFormatVersion);
    header.u64(payload.bytes().size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open model file for writing: " + path);
    out.write(reinterpret_cast<const char*>(header.bytes().data()),
              static_cast<std::streamsize>(header.bytes().size()));
    out.write(reinterpret_cast<const char*>(payload.bytes().data()),
              static_cast<std::streamsize>(payload.bytes().size()));
    Writer trailer;
    trailer.u32(crc32(payload.bytes()));
    out.write(reinterpret_cast<const char*>(trailer.bytes().data()),
              static_cast<std::streamsize>(trailer.bytes().size()));
    out.flush();
    if (!out)
        throw IoError("failed writing model file: " + path);
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open model file: " + path);
    std::vector<std::uint8_t> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("failed reading model file: " + path);

    constexpr std::size_t kHeaderSize = sizeof kMagic + 4 + 8;
    if (bytes.size() < kHeaderSize)
        throw DataError("not a model file: " + path);
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw DataError("not a model file: " + path);

    const std::span<const std::uint8_t> whole(bytes.data(), bytes.size());
    Reader header(whole.subspan(sizeof kMagic, 12));
    const std::uint32_t version = header.u32();
    if (version != kFormatVersion)
        throw ModelVersionError("unsupported model format version " +
                                std::to_string(version));
    const std::uint64_t payload_size = header.u64();
    const std::uint64_t remaining = bytes.size() - kHeaderSize;
    if (payload_size > remaining || remaining - payload_size < 4)
        throw CorruptModelError("corrupt model file: truncated payload");
    if (remaining - payload_size != 4)
        throw CorruptModelError("corrupt model file: trailing bytes");

    const std::span<const std::uint8_t> payload(bytes.data() + kHeaderSize,
                                                payload_size);
    Reader crc_reader(
        whole.subspan(kHeaderSize + payload_size, 4));
    if (crc32(payload) != crc_reader.u32())
        throw CorruptModelError("corrupt model file: checksum mismatch");

    Reader r(payload);
    ModelBundle bundle;
    try {
        bundle.config = read_config(r);
        bundle.members.resize(r.count());
        for (EnsembleMember& member : bundle.members) member = read_member(r);
        if (r.u8() == 1) {
            StackingHead head;
            head.logistic.weights = r.doubles();
            head.logistic.bias = r.f64();
            head.score_stats = read_standardizer(r);
            bundle.stacking = std::move(head);
        }
    } catch (const CorruptModelError&) {
        throw;
    } catch (const ArgumentError& e) {
        // A checksum-valid payload can still carry values no fitted model
        // produces (e.g. out-of-range enums); treat those as corruption.
        throw CorruptModelError(std::string("corrupt model file: ") + e.what());
    }
    if (!r.done())
        throw CorruptModelError("corrupt model file: trailing payload bytes");
    return bundle;
}

} // namespace tsad
