#include "dbt/dataflow/data_graph.hpp"

#include <algorithm>

#include "dbt/error.hpp"

namespace dbt {

std::string_view to_string(ParamKind k) noexcept {
    switch (k) {
    case ParamKind::option: return "option";
    case ParamKind::input: return "input";
    case ParamKind::output: return "output";
    }
    return "?";
}

std::optional<ParamKind> parse_param_kind(std::string_view text) noexcept {
    if (text == "option") return ParamKind::option;
    if (text == "input") return ParamKind::input;
    if (text == "output") return ParamKind::output;
    return std::nullopt;
}

std::string ParamId::to_string() const {
    return node + "." + std::string(dbt::to_string(kind)) + "." + name;
}

ParamId ParamId::parse(std::string_view text) {
    auto last = text.rfind('.');
    if (last == std::string_view::npos || last == 0) {
        throw UnknownParameter("malformed parameter id '" + std::string(text) + "'");
    }
    auto mid = text.rfind('.', last - 1);
    if (mid == std::string_view::npos) {
        throw UnknownParameter("malformed parameter id '" + std::string(text) + "'");
    }
    auto kind = parse_param_kind(text.substr(mid + 1, last - mid - 1));
    if (!kind) {
        throw UnknownParameter("malformed parameter kind in '" + std::string(text) + "'");
    }
    return ParamId{std::string(text.substr(0, mid)), *kind, std::string(text.substr(last + 1))};
}

void DataGraph::add_parameter(Parameter p) {
    auto id = p.id;
    if (!params_.emplace(id, std::move(p)).second) {
        throw Error("duplicate parameter " + id.to_string());
    }
}

void DataGraph::remove_node_parameters(std::string_view node) {
    std::erase_if(wirings_, [&](const Wiring& w) { return w.source.node == node || w.target.node == node; });
    std::erase_if(params_, [&](const auto& kv) { return kv.first.node == node; });
}

const Parameter& DataGraph::parameter(const ParamId& id) const {
    auto it = params_.find(id);
    if (it == params_.end()) {
        throw UnknownParameter("unknown parameter " + id.to_string());
    }
    return it->second;
}

std::vector<ParamId> DataGraph::parameters_of(std::string_view node) const {
    std::vector<ParamId> out;
    for (const auto& [id, _] : params_) {
        if (id.node == node) {
            out.push_back(id);
        }
    }
    return out;
}

void DataGraph::add_wiring(const Wiring& w) {
    if (w.source.kind != ParamKind::output || w.target.kind != ParamKind::input) {
        throw KindMismatch("wiring " + w.source.to_string() + " -> " + w.target.to_string() +
                           " must connect an output to an input");
    }
    if (!contains(w.source)) {
        throw UnknownParameter("wiring source " + w.source.to_string() + " does not exist");
    }
    if (!contains(w.target)) {
        throw UnknownParameter("wiring target " + w.target.to_string() + " does not exist");
    }
    wirings_.insert(w);
}

bool DataGraph::remove_wiring(const Wiring& w) { return wirings_.erase(w) != 0; }

std::vector<ParamId> DataGraph::targets_of(const ParamId& source) const {
    std::vector<ParamId> out;
    for (auto it = wirings_.lower_bound(Wiring{source, ParamId{"", ParamKind::option, ""}}); it != wirings_.end() && it->source == source;
         ++it) {
        out.push_back(it->target);
    }
    return out;
}

} // namespace dbt
