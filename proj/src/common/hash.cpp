// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/common/hash.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>

namespace tlsqkt {

std::string git_blob_hash(std::string_view content) {
  std::string payload = "blob " + std::to_string(content.size());
  payload.push_back('\0');
  payload.append(content);
  std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
  SHA1(reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), digest.data());
  std::string hex;
  hex.reserve(2 * digest.size());
  for (unsigned char byte : digest) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", byte);
    hex += buf;
  }
  return hex;
}

}  // namespace tlsqkt
