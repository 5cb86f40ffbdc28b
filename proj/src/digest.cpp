#include "marrow/digest.hpp"

#include <cstdio>

#include "marrow/model.hpp"
#include "marrow/protocol.hpp"
#include "marrow/solver.hpp"

namespace marrow {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex_digest(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

namespace {

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string digest(const ModelParameters& params) {
    const auto& c = params.constants();
    std::string text;
    for (double v : {c.c0, c.rho1, c.rho2, c.alpha1, c.alpha2, c.alpha3, c.k, c.gamma_L, c.L_max}) {
        text += exact(v);
        text += ';';
    }
    text += to_string(c.clone_origin);
    return hex_digest(text);
}

std::string digest(const Protocol& protocol) {
    return hex_digest(serialize_protocol(protocol));
}

std::string digest(const SolverConfig& config) {
    std::string text = exact(config.rel_tol) + ";" + exact(config.abs_tol) + ";" +
                       exact(config.max_step) + ";" +
                       exact(config.sample_interval) + ";" +
                       std::string(to_string(config.dose_timing));
    return hex_digest(text);
}

}  // namespace marrow
