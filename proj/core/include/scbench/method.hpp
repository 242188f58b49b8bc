#pragma once

#include <string>

namespace scbench {

enum class Scenario { KnownCodes, KnownDictionary, UnknownBoth };
enum class Method { Sae, Mlp, SparseCoding, SaeIto };

std::string to_string(Scenario s);
std::string to_string(Method m);
Scenario scenario_from_string(const std::string& s);
Method method_from_string(const std::string& s);

/// KnownCodes -> {SAE, MLP}; KnownDictionary -> {SAE, MLP, SAE+ITO};
/// UnknownBoth -> all four.
bool is_applicable(Scenario scenario, Method method);

/// A method plus the MLP hidden width when relevant ("mlp-256").
struct MethodSpec {
    Method method = Method::Sae;
    int hidden = 0;

    std::string label() const;
    static MethodSpec parse(const std::string& label);
};

}  // namespace scbench
