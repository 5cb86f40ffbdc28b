#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace marrow {

class ModelParameters;
class Protocol;
struct SolverConfig;

/// 64-bit FNV-1a. Stable across platforms, used to fingerprint run inputs.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);

std::string digest(const ModelParameters& params);
std::string digest(const Protocol& protocol);
std::string digest(const SolverConfig& config);

}  // namespace marrow
