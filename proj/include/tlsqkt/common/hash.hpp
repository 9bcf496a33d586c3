// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace tlsqkt {

/// Hex SHA-1 of "blob <size>\0<content>", i.e. what `git hash-object` prints.
std::string git_blob_hash(std::string_view content);

}  // namespace tlsqkt
