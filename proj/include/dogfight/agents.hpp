#pragma once

#include <string>
#include <vector>

#include "dogfight/arena.hpp"
#include "dogfight/checkpoint.hpp"

namespace dogfight {

/// Bundle name of the selector inside a hierarchy checkpoint. Low-level
/// bundles follow it in selection-index order.
inline constexpr const char* kSelectorBundle = "selector";

/// Selector plus frozen low-level policies from one checkpoint.
HierarchicalAgent hierarchy_from_checkpoint(const Checkpoint& checkpoint);

/// Frozen shared copy of a bundle. Throws for any layout other than the
/// low-level observation/action widths.
sac::ActorSnapshot frozen_low_level(const sac::PolicyBundle& bundle, const std::string& name);

/// Resolves an agent spec:
///   "randy", "level_flier"   scripted pilots
///   "path.dfck"              hierarchy if it holds a selector, else its single bundle
///   "path.dfck#name"         one named bundle of a checkpoint
/// `display_name` defaults to the agent spec string.
AgentEntry resolve_agent(const std::string& spec, std::string display_name = {});

/// "name=spec" or bare "spec".
AgentEntry resolve_named_agent(const std::string& arg);

}  // namespace dogfight
