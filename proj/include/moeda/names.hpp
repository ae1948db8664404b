#pragma once

#include <stdexcept>
#include <string>

#include "moeda/engine.hpp"
#include "moeda/problems.hpp"
#include "moeda/variation.hpp"

namespace moeda {

inline const char* problem_kind_name(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::trap_invtrap: return "trap-invtrap";
        case ProblemKind::onemax_zeromax: return "onemax-zeromax";
        case ProblemKind::overlap: return "overlap";
    }
    throw std::logic_error("unknown problem kind");
}

inline const char* variation_kind_name(VariationKind kind) {
    switch (kind) {
        case VariationKind::mecga: return "mecga";
        case VariationKind::umda: return "umda";
        case VariationKind::nsga2_xover: return "nsga2-xover";
    }
    throw std::logic_error("unknown variation kind");
}

inline const char* replacement_kind_name(ReplacementKind kind) {
    switch (kind) {
        case ReplacementKind::elitist: return "elitist";
        case ReplacementKind::rts: return "rts";
    }
    throw std::logic_error("unknown replacement kind");
}

inline const char* representative_mode_name(RepresentativeMode mode) {
    switch (mode) {
        case RepresentativeMode::genotype: return "genotype";
        case RepresentativeMode::objective: return "objective";
    }
    throw std::logic_error("unknown representative mode");
}

inline ProblemKind parse_problem_kind(const std::string& name) {
    if (name == "trap-invtrap") return ProblemKind::trap_invtrap;
    if (name == "onemax-zeromax") return ProblemKind::onemax_zeromax;
    if (name == "overlap") return ProblemKind::overlap;
    throw std::invalid_argument("unknown problem kind: " + name);
}

inline VariationKind parse_variation_kind(const std::string& name) {
    if (name == "mecga") return VariationKind::mecga;
    if (name == "umda") return VariationKind::umda;
    if (name == "nsga2-xover") return VariationKind::nsga2_xover;
    throw std::invalid_argument("unknown algorithm: " + name);
}

inline ReplacementKind parse_replacement_kind(const std::string& name) {
    if (name == "elitist") return ReplacementKind::elitist;
    if (name == "rts") return ReplacementKind::rts;
    throw std::invalid_argument("unknown replacement scheme: " + name);
}

inline RepresentativeMode parse_representative_mode(const std::string& name) {
    if (name == "genotype") return RepresentativeMode::genotype;
    if (name == "objective") return RepresentativeMode::objective;
    throw std::invalid_argument("unknown representative mode: " + name);
}

inline const char* rts_tie_policy_name(RtsTiePolicy policy) {
    switch (policy) {
        case RtsTiePolicy::coin_flip: return "coin-flip";
        case RtsTiePolicy::keep_incumbent: return "keep-incumbent";
        case RtsTiePolicy::always_replace: return "always-replace";
    }
    throw std::logic_error("unknown tie policy");
}

inline RtsTiePolicy parse_rts_tie_policy(const std::string& name) {
    if (name == "coin-flip") return RtsTiePolicy::coin_flip;
    if (name == "keep-incumbent") return RtsTiePolicy::keep_incumbent;
    if (name == "always-replace") return RtsTiePolicy::always_replace;
    throw std::invalid_argument("unknown tie policy: " + name);
}

}  // namespace moeda
