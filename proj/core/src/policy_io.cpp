#include "caa/policy.hpp"

#include "caa/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <set>
#include <string>

namespace caa {

namespace {

    using ojson = nlohmann::ordered_json;

    void only_keys(ojson const& obj, std::set<std::string> const& allowed, std::string const& at)
    {
        for (auto const& [key, value] : obj.items()) {
            if (allowed.count(key) == 0) {
                throw ParseError("unknown key '" + key + "'", at + "/" + key);
            }
        }
    }

    auto number(ojson const& obj, char const* key, std::string const& at) -> double
    {
        auto it = obj.find(key);
        if (it == obj.end()) {
            throw ParseError(std::string("missing '") + key + "'", at);
        }
        if (!it->is_number()) {
            throw ParseError(std::string("'") + key + "' must be a number", at + "/" + key);
        }
        return it->get<double>();
    }

    auto count(ojson const& obj, char const* key, std::string const& at) -> std::uint32_t
    {
        auto it = obj.find(key);
        if (it == obj.end()) {
            throw ParseError(std::string("missing '") + key + "'", at);
        }
        if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
            throw ParseError(std::string("'") + key + "' must be a non-negative integer", at + "/" + key);
        }
        auto const v = it->get<std::uint64_t>();
        if (v > UINT32_MAX) {
            throw ParseError(std::string("'") + key + "' is too large", at + "/" + key);
        }
        return static_cast<std::uint32_t>(v);
    }

    auto text(ojson const& obj, char const* key, std::string const& at) -> std::string
    {
        auto it = obj.find(key);
        if (it == obj.end()) {
            throw ParseError(std::string("missing '") + key + "'", at);
        }
        if (!it->is_string()) {
            throw ParseError(std::string("'") + key + "' must be a string", at + "/" + key);
        }
        return it->get<std::string>();
    }

} // namespace

auto serialize_policy(Policy const& policy) -> std::string
{
    ojson root;
    root["norm"] = std::string(norm_name(policy.norm));
    root["eps_global"] = policy.eps_global;
    root["restarts"] = policy.restarts;
    ojson elements = ojson::array();
    for (auto const& e : policy.elements) {
        ojson el;
        el["attack"] = std::string(attack_name(e.kind));
        el["epsilon"] = e.epsilon;
        el["steps"] = e.steps;
        elements.push_back(std::move(el));
    }
    root["elements"] = std::move(elements);
    return root.dump(2) + "\n";
}

auto parse_policy(std::string_view input) -> Policy
{
    ojson root;
    try {
        root = ojson::parse(input.begin(), input.end());
    } catch (nlohmann::json::parse_error const& e) {
        throw ParseError("malformed policy JSON", "byte " + std::to_string(e.byte));
    }
    if (!root.is_object()) {
        throw ParseError("policy must be a JSON object", "/");
    }
    only_keys(root, { "norm", "eps_global", "restarts", "elements" }, "");

    Policy p;
    auto const norm = parse_norm(text(root, "norm", "/"));
    if (!norm) {
        throw ParseError("norm must be linf, l2 or unrestricted", "/norm");
    }
    p.norm = *norm;
    p.eps_global = number(root, "eps_global", "/");
    if (!(p.eps_global >= 0.0) || (p.norm == Norm::unrestricted && p.eps_global != 1.0)) {
        throw ParseError("eps_global out of range", "/eps_global");
    }
    p.restarts = count(root, "restarts", "/");
    if (p.restarts < 1) {
        throw ParseError("restarts must be at least 1", "/restarts");
    }
    auto it = root.find("elements");
    if (it == root.end() || !it->is_array()) {
        throw ParseError("'elements' must be an array", "/elements");
    }
    if (it->empty() || it->size() > kMaxPolicyLength) {
        throw ParseError("policy needs between 1 and 7 elements", "/elements");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        std::string const at = "/elements/" + std::to_string(i);
        auto const& el = (*it)[i];
        if (!el.is_object()) {
            throw ParseError("element must be an object", at);
        }
        only_keys(el, { "attack", "epsilon", "steps" }, at);
        auto const name = text(el, "attack", at);
        auto const kind = parse_attack_name(name);
        if (!kind) {
            throw ParseError("unknown attack '" + name + "'", at + "/attack");
        }
        if (!supports_norm(*kind, p.norm)) {
            throw ParseError(name + " does not run under " + std::string(norm_name(p.norm)), at + "/attack");
        }
        PolicyElement e { *kind, number(el, "epsilon", at), count(el, "steps", at) };
        if (!(e.epsilon >= 0.0) || e.epsilon > p.eps_global) {
            throw ParseError("epsilon outside [0, eps_global]", at + "/epsilon");
        }
        if (e.steps > step_limit(e.kind, p.norm)) {
            throw ParseError("steps above the limit of " + std::to_string(step_limit(e.kind, p.norm)), at + "/steps");
        }
        p.elements.push_back(e);
    }
    return p;
}

auto describe_policy(Policy const& policy) -> std::string
{
    std::string out;
    for (std::size_t i = 0; i < policy.elements.size(); ++i) {
        auto const& e = policy.elements[i];
        char buf[96];
        std::snprintf(buf, sizeof buf, "('%s', eps=%.4g, t=%u)", std::string(attack_name(e.kind)).c_str(), e.epsilon, e.steps);
        if (i > 0) {
            out += " -> ";
        }
        out += buf;
    }
    return out;
}

} // namespace caa
