#include "nsc/hash.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <stdexcept>

#include "nsc/errors.hpp"

namespace nsc {

std::string sha1_hex(const uint8_t* data, size_t len) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data, len) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &digest_len) != 1)
        throw std::runtime_error("sha1_hex: digest computation failed");

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string git_blob_hash(const std::vector<uint8_t>& bytes) {
    std::vector<uint8_t> framed;
    const std::string header = "blob " + std::to_string(bytes.size());
    framed.reserve(header.size() + 1 + bytes.size());
    framed.insert(framed.end(), header.begin(), header.end());
    framed.push_back(0);
    framed.insert(framed.end(), bytes.begin(), bytes.end());
    return sha1_hex(framed.data(), framed.size());
}

std::string git_blob_hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for hashing");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path);
    return git_blob_hash(bytes);
}

}  // namespace nsc
