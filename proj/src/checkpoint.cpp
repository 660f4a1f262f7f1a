#include "relsynth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "relsynth/io.hpp"

namespace relsynth {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'Y', 'N'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    }
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void finish() {
        out_.flush();
        if (!out_) throw IoError("write failed for " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FileNotFound(path.string());
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    std::uint8_t u8() {
        if (at_ >= buf_.size()) throw IoError("truncated checkpoint");
        return static_cast<std::uint8_t>(buf_[at_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        std::uint64_t n = u64();
        if (at_ + n > buf_.size()) throw IoError("truncated checkpoint");
        std::string s(buf_.data() + at_, n);
        at_ += n;
        return s;
    }

private:
    std::vector<char> buf_;
    std::size_t at_ = 0;
};

void write_codec(Writer& w, const TableCodec& codec) {
    w.str(codec.table);
    w.u64(codec.encoded_width);
    w.u64(codec.attributes.size());
    for (const AttributeCodec& ac : codec.attributes) {
        w.str(ac.name);
        w.u8(static_cast<std::uint8_t>(ac.kind));
        w.u8(ac.unique ? 1 : 0);
        w.u8(ac.nullable ? 1 : 0);
        w.f64(ac.num_min);
        w.f64(ac.num_max);
        w.i64(ac.dt_min);
        w.i64(ac.dt_max);
        w.u64(ac.categories.size());
        for (const std::string& c : ac.categories) w.str(c);
        w.u64(ac.span.offset);
        w.u64(ac.span.width);
        w.i64(ac.span.flag_column);
    }
}

TableCodec read_codec(Reader& r) {
    TableCodec codec;
    codec.table = r.str();
    codec.encoded_width = r.u64();
    const std::uint64_t attrs = r.u64();
    for (std::uint64_t a = 0; a < attrs; ++a) {
        AttributeCodec ac;
        ac.name = r.str();
        const std::uint8_t kind = r.u8();
        if (kind > 3) throw IoError("corrupt checkpoint: bad attribute kind");
        ac.kind = static_cast<AttributeKind>(kind);
        ac.unique = r.u8() != 0;
        ac.nullable = r.u8() != 0;
        ac.num_min = r.f64();
        ac.num_max = r.f64();
        ac.dt_min = r.i64();
        ac.dt_max = r.i64();
        const std::uint64_t cats = r.u64();
        for (std::uint64_t c = 0; c < cats; ++c) ac.categories.push_back(r.str());
        ac.span.offset = r.u64();
        ac.span.width = r.u64();
        ac.span.flag_column = static_cast<int>(r.i64());
        codec.attributes.push_back(std::move(ac));
    }
    return codec;
}

}  // namespace

void save_checkpoint(const GraphVaeModel& model, const std::filesystem::path& path) {
    Writer w(path);
    w.u8(static_cast<std::uint8_t>(kMagic[0]));
    w.u8(static_cast<std::uint8_t>(kMagic[1]));
    w.u8(static_cast<std::uint8_t>(kMagic[2]));
    w.u8(static_cast<std::uint8_t>(kMagic[3]));
    w.u32(kVersion);
    w.u64(model.schema_fingerprint);

    const TrainConfig& cfg = model.config;
    w.i64(cfg.k1);
    w.i64(cfg.k2);
    w.u64(cfg.hidden);
    w.u64(cfg.epochs);
    w.u64(cfg.batch_size);
    w.f64(cfg.learning_rate);
    w.u64(cfg.seed);
    w.u64(cfg.latent.size());
    for (std::size_t n : cfg.latent) w.u64(n);
    w.u64(cfg.beta.size());
    for (double b : cfg.beta) w.f64(b);

    w.u64(model.codecs.size());
    for (const TableCodec& codec : model.codecs) write_codec(w, codec);

    w.u64(model.params.count());
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        const Matrix& m = model.params.value(i);
        w.str(model.params.name(i));
        w.u64(m.rows());
        w.u64(m.cols());
        for (std::size_t k = 0; k < m.size(); ++k) w.f64(m.data()[k]);
    }
    w.finish();
}

GraphVaeModel load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw VersionMismatch("not a checkpoint file: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw VersionMismatch(kVersion, version);
    const std::uint64_t fingerprint = r.u64();

    TrainConfig cfg;
    cfg.k1 = static_cast<int>(r.i64());
    cfg.k2 = static_cast<int>(r.i64());
    cfg.hidden = r.u64();
    cfg.epochs = r.u64();
    cfg.batch_size = r.u64();
    cfg.learning_rate = r.f64();
    cfg.seed = r.u64();
    const std::uint64_t nl = r.u64();
    for (std::uint64_t i = 0; i < nl; ++i) cfg.latent.push_back(r.u64());
    const std::uint64_t nb = r.u64();
    for (std::uint64_t i = 0; i < nb; ++i) cfg.beta.push_back(r.f64());

    const std::uint64_t ntables = r.u64();
    std::vector<TableCodec> codecs;
    codecs.reserve(ntables);
    for (std::uint64_t t = 0; t < ntables; ++t) codecs.push_back(read_codec(r));
    if (cfg.latent.size() != codecs.size() || cfg.beta.size() != codecs.size())
        throw IoError("corrupt checkpoint: per-table vectors do not match the codecs");

    GraphVaeModel model = build_model(std::move(codecs), cfg, fingerprint);

    const std::uint64_t nparams = r.u64();
    if (nparams != model.params.count())
        throw IoError("corrupt checkpoint: parameter count mismatch");
    for (std::uint64_t i = 0; i < nparams; ++i) {
        const std::string name = r.str();
        const std::uint64_t rows = r.u64();
        const std::uint64_t cols = r.u64();
        if (name != model.params.name(i))
            throw IoError("corrupt checkpoint: parameter " + name + " out of place");
        Matrix& m = model.params.value(i);
        if (rows != m.rows() || cols != m.cols())
            throw IoError("corrupt checkpoint: shape mismatch for " + name);
        for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
    }
    return model;
}

}  // namespace relsynth
