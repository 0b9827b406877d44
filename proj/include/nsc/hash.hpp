#ifndef NSC_HASH_HPP
#define NSC_HASH_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace nsc {

/// Lowercase hex SHA-1 of a raw byte range.
std::string sha1_hex(const uint8_t* data, size_t len);

/// Git blob object id of the content: SHA-1 over "blob <len>\0" + bytes.
std::string git_blob_hash(const std::vector<uint8_t>& bytes);

/// Git blob object id of a file's content.
std::string git_blob_hash_file(const std::string& path);

}  // namespace nsc

#endif
