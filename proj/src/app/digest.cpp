#include "app/digest.hpp"

#include "util/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

namespace mepo::app {

namespace {

class Sha256
{
public:
    Sha256()
        : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            fail(ErrorKind::Io, "sha256: digest initialisation failed");
        }
    }

    void update(const void* data, std::size_t size)
    {
        if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
            fail(ErrorKind::Io, "sha256: digest update failed");
        }
    }

    std::string hex()
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
            fail(ErrorKind::Io, "sha256: digest finalisation failed");
        }
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 15];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

} // namespace

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string() + " for hashing");
    }
    Sha256 h;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    return h.hex();
}

std::string sha256_text(const std::string& text)
{
    Sha256 h;
    h.update(text.data(), text.size());
    return h.hex();
}

} // namespace mepo::app
