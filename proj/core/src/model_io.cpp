#include "caa/model_io.hpp"

#include "caa/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace caa {

namespace {

    class Writer {
    public:
        void u8(std::uint8_t v) { out_.push_back(v); }
        void u32(std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i) {
                out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
            }
        }
        void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
        void bytes(char const* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
        auto take() -> std::vector<std::uint8_t> { return std::move(out_); }

    private:
        std::vector<std::uint8_t> out_;
    };

    class Reader {
    public:
        explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

        void need(std::size_t n, char const* what)
        {
            if (pos_ + n > in_.size()) {
                throw LoadError(std::string("truncated model file while reading ") + what, in_.size());
            }
        }
        auto u8(char const* what) -> std::uint8_t
        {
            need(1, what);
            return in_[pos_++];
        }
        auto u32(char const* what) -> std::uint32_t
        {
            need(4, what);
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i) {
                v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
            }
            pos_ += 4;
            return v;
        }
        auto f32(char const* what) -> float { return std::bit_cast<float>(u32(what)); }
        [[nodiscard]] auto pos() const -> std::size_t { return pos_; }
        [[nodiscard]] auto remaining() const -> std::size_t { return in_.size() - pos_; }
        auto span(std::size_t n) -> std::span<const std::uint8_t> { return in_.subspan(pos_, n); }

    private:
        std::span<const std::uint8_t> in_;
        std::size_t pos_ = 0;
    };

} // namespace

auto encode_model(Classifier const& model) -> std::vector<std::uint8_t>
{
    Writer w;
    w.bytes("CAAM", 4);
    w.u32(kModelFormatVersion);
    auto const& arch = model.architecture();
    w.u8(static_cast<std::uint8_t>(arch.kind));
    w.u32(static_cast<std::uint32_t>(arch.sizes.size()));
    for (auto s : arch.sizes) {
        w.u32(s);
    }
    auto const dims = model.input_dims();
    w.u32(dims.height);
    w.u32(dims.width);
    w.u32(dims.channels);
    w.u32(model.num_classes());
    w.f32(model.training_eps());
    for (float p : model.params()) {
        w.f32(p);
    }
    return w.take();
}

auto decode_model(std::span<const std::uint8_t> bytes) -> Classifier
{
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(r.span(4).data(), "CAAM", 4) != 0) {
        throw LoadError("bad model magic (expected \"CAAM\")", 0);
    }
    for (int i = 0; i < 4; ++i) {
        r.u8("magic");
    }
    auto const version = r.u32("version");
    if (version != kModelFormatVersion) {
        throw LoadError("unsupported model format version " + std::to_string(version), 4);
    }
    auto const tag_pos = r.pos();
    auto const tag = r.u8("architecture tag");
    if (tag > 2) {
        throw LoadError("unknown architecture tag " + std::to_string(tag), tag_pos);
    }
    auto const n = r.u32("layer count");
    if (n > 1024) {
        throw LoadError("implausible layer count", tag_pos + 1);
    }
    std::vector<std::uint32_t> sizes(n);
    for (auto& s : sizes) {
        s = r.u32("layer sizes");
    }
    Architecture arch { static_cast<ArchKind>(tag), std::move(sizes) };
    InputDims dims;
    dims.height = r.u32("input dims");
    dims.width = r.u32("input dims");
    dims.channels = r.u32("input dims");
    auto const k = r.u32("num_classes");
    auto const eps = r.f32("training eps");
    std::size_t count = 0;
    try {
        count = Classifier::parameter_count(arch, dims, k);
    } catch (Error const& e) {
        throw LoadError(std::string("invalid model header: ") + e.what(), r.pos());
    }
    if (r.remaining() < count * 4) {
        throw LoadError("truncated model weights", bytes.size());
    }
    if (r.remaining() > count * 4) {
        throw LoadError("trailing bytes after model weights", r.pos() + count * 4);
    }
    std::vector<float> params(count);
    for (auto& p : params) {
        p = r.f32("weights");
    }
    return { std::move(arch), dims, k, std::move(params), eps };
}

auto read_file_bytes(std::filesystem::path const& path) -> std::vector<std::uint8_t>
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

void write_file_atomic(std::filesystem::path const& path, std::span<const std::uint8_t> bytes)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(reinterpret_cast<char const*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_text_atomic(std::filesystem::path const& path, std::string const& text)
{
    write_file_atomic(path, { reinterpret_cast<std::uint8_t const*>(text.data()), text.size() });
}

void save_model(Classifier const& model, std::filesystem::path const& path)
{
    write_file_atomic(path, encode_model(model));
}

auto load_model(std::filesystem::path const& path) -> Classifier
{
    return decode_model(read_file_bytes(path));
}

} // namespace caa
