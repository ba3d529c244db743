#include "model/checkpoint.hpp"

#include "util/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mepo::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'E', 'P', 'O', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader
{
public:
    Reader(std::ifstream& in, std::string file)
        : in_(in)
        , file_(std::move(file))
    {
    }

    template <typename T>
    T get()
    {
        T v{};
        bytes(reinterpret_cast<char*>(&v), sizeof(T));
        return v;
    }

    void bytes(char* dst, std::size_t n)
    {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            fail(ErrorKind::Schema, file_ + ": truncated checkpoint");
        }
    }

private:
    std::ifstream& in_;
    std::string file_;
};

} // namespace

const nc::Array* Checkpoint::block(const std::string& name) const
{
    for (const auto& [n, a] : blocks) {
        if (n == name) {
            return &a;
        }
    }
    return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write checkpoint " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    const auto meta = ckpt.meta.dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
    for (const auto& [name, a] : ckpt.blocks) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(a.rank()));
        for (auto d : a.shape()) {
            put<std::uint64_t>(out, d);
        }
        out.write(reinterpret_cast<const char*>(a.data().data()), static_cast<std::streamsize>(a.size() * 8));
    }
    if (!out) {
        fail(ErrorKind::Io, "failed while writing checkpoint " + path.string());
    }
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
    }
    Reader r(in, path.string());
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        fail(ErrorKind::Schema, path.string() + ": not a checkpoint file");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        fail(ErrorKind::Schema, path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    const auto meta_len = r.get<std::uint64_t>();
    if (meta_len > (std::uint64_t(1) << 30)) {
        fail(ErrorKind::Schema, path.string() + ": implausible metadata length");
    }
    std::string meta(meta_len, '\0');
    r.bytes(meta.data(), meta.size());
    try {
        ck.meta = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, path.string() + ": bad checkpoint metadata: " + e.what());
    }
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t b = 0; b < count; ++b) {
        const auto name_len = r.get<std::uint32_t>();
        if (name_len > 4096) {
            fail(ErrorKind::Schema, path.string() + ": implausible block name length");
        }
        std::string name(name_len, '\0');
        r.bytes(name.data(), name.size());
        const auto rank = r.get<std::uint32_t>();
        if (rank == 0 || rank > 8) {
            fail(ErrorKind::Schema, path.string() + ": block '" + name + "' has rank " + std::to_string(rank));
        }
        nc::Shape shape(rank);
        std::uint64_t total = 1;
        for (auto& d : shape) {
            d = r.get<std::uint64_t>();
            if (d == 0 || d > (std::uint64_t(1) << 32)) {
                fail(ErrorKind::Schema, path.string() + ": block '" + name + "' has a bad dimension");
            }
            total *= d;
        }
        if (total > (std::uint64_t(1) << 31)) {
            fail(ErrorKind::Schema, path.string() + ": block '" + name + "' is too large");
        }
        nc::Array a(shape);
        r.bytes(reinterpret_cast<char*>(a.data().data()), a.size() * 8);
        ck.blocks.emplace_back(std::move(name), std::move(a));
    }
    return ck;
}

} // namespace mepo::model
