#ifndef TOMFLOW_CSVIO_HPP
#define TOMFLOW_CSVIO_HPP

#include <filesystem>
#include <string>

namespace tomflow {

/// Fixed 15-significant-digit decimal formatting used by every CSV column.
std::string fmt15(double x);

/// Shortest round-trip formatting for file-name stamps and config hashing.
std::string fmt_short(double x);

/// Writes content to path via a temporary file plus rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit hash, hex-encoded; used for the config hash in meta.txt.
std::string fnv1a_hex(const std::string& data);

} // namespace tomflow

#endif
