#pragma once

#include <memory>

#include "dbt/core/node.hpp"

namespace dbt {

/// Flow control (Sequence, Fallback, Parallel), Inverter, and general leaves:
/// Succeed, Fail, Scripted, Wait, ConstantValue, Log, AddInt, CheckFlag.
void register_standard_nodes(NodeLibrary& lib);

/// Ball-fetching example nodes. DetectBall reads the external "ball.<color>":
/// a pose succeeds, the string "searching" keeps it running, anything else
/// fails. PickUpBall consumes the detected position.
void register_demo_nodes(NodeLibrary& lib);

std::shared_ptr<NodeLibrary> standard_library();

} // namespace dbt
