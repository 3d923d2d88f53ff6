#pragma once

#include <set>
#include <tuple>

#include "dbt/core/state.hpp"

namespace dbt::test {

using Triple = std::tuple<NodeState, NodeAction, NodeState>;

/// Edge list of the node state diagram, transcribed edge by edge.
/// running, succeeded and failed share one box in the diagram.
inline std::set<Triple> diagram_edges() {
    using S = NodeState;
    using A = NodeAction;
    const S active[] = {S::running, S::succeeded, S::failed};
    std::set<Triple> e{
        {S::uninitialized, A::setup, S::idle},
        {S::uninitialized, A::shutdown, S::shutdown},
        {S::idle, A::shutdown, S::shutdown},
        {S::idle, A::untick, S::idle},
        {S::idle, A::reset, S::idle},
        {S::paused, A::untick, S::paused},
        {S::paused, A::reset, S::idle},
        {S::paused, A::shutdown, S::shutdown},
        {S::shutdown, A::setup, S::idle},
        {S::shutdown, A::shutdown, S::shutdown},
    };
    for (S to : active) {
        e.insert({S::idle, A::tick, to});
        e.insert({S::paused, A::tick, to});
    }
    for (S from : active) {
        for (S to : active) {
            e.insert({from, A::tick, to});
        }
        e.insert({from, A::untick, S::paused});
        e.insert({from, A::untick, S::idle});
        e.insert({from, A::reset, S::idle});
        e.insert({from, A::shutdown, S::shutdown});
    }
    return e;
}

} // namespace dbt::test
