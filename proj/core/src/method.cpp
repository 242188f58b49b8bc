#include "scbench/method.hpp"

#include "scbench/types.hpp"

namespace scbench {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::KnownCodes: return "known-codes";
        case Scenario::KnownDictionary: return "known-dictionary";
        case Scenario::UnknownBoth: return "unknown";
    }
    return "?";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Sae: return "sae";
        case Method::Mlp: return "mlp";
        case Method::SparseCoding: return "sc";
        case Method::SaeIto: return "sae-ito";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "known-codes") return Scenario::KnownCodes;
    if (s == "known-dictionary") return Scenario::KnownDictionary;
    if (s == "unknown") return Scenario::UnknownBoth;
    throw ConfigError("unknown scenario '" + s + "' (known-codes | known-dictionary | unknown)");
}

Method method_from_string(const std::string& s) {
    if (s == "sae") return Method::Sae;
    if (s == "mlp") return Method::Mlp;
    if (s == "sc") return Method::SparseCoding;
    if (s == "sae-ito") return Method::SaeIto;
    throw ConfigError("unknown method '" + s + "' (sae | mlp | sc | sae-ito)");
}

bool is_applicable(Scenario scenario, Method method) {
    switch (scenario) {
        case Scenario::KnownCodes: return method == Method::Sae || method == Method::Mlp;
        case Scenario::KnownDictionary: return method != Method::SparseCoding;
        case Scenario::UnknownBoth: return true;
    }
    return false;
}

std::string MethodSpec::label() const {
    if (method == Method::Mlp) return "mlp-" + std::to_string(hidden);
    return to_string(method);
}

MethodSpec MethodSpec::parse(const std::string& label) {
    if (label.rfind("mlp-", 0) == 0) {
        int h = 0;
        try {
            h = std::stoi(label.substr(4));
        } catch (const std::exception&) {
            throw ConfigError("bad MLP width in '" + label + "'");
        }
        require(h >= 1, "MLP width must be >= 1");
        return {Method::Mlp, h};
    }
    Method m = method_from_string(label);
    require(m != Method::Mlp, "MLP methods are written mlp-<width>");
    return {m, 0};
}

}  // namespace scbench
