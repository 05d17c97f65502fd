#include "dogfight/agents.hpp"

#include <memory>

namespace dogfight {

sac::ActorSnapshot frozen_low_level(const sac::PolicyBundle& bundle, const std::string& name) {
  if (bundle.obs_dim != obs::size || bundle.act_dim != kLowLevelActionDim) {
    throw CheckpointError("bundle '" + name + "' is not a low-level policy (" + std::to_string(bundle.obs_dim) + "x" +
                          std::to_string(bundle.act_dim) + ")");
  }
  auto copy = std::make_shared<sac::PolicyBundle>(bundle);
  copy->frozen = true;
  return copy;
}

HierarchicalAgent hierarchy_from_checkpoint(const Checkpoint& c) {
  if (!c.contains(kSelectorBundle)) throw CheckpointError("checkpoint holds no selector");
  std::vector<sac::ActorSnapshot> lows;
  for (const auto& nb : c.bundles) {
    if (nb.name != kSelectorBundle) lows.push_back(frozen_low_level(nb.bundle, nb.name));
  }
  auto selector = std::make_shared<sac::PolicyBundle>(c.get(kSelectorBundle));
  selector->frozen = true;
  return HierarchicalAgent(std::move(selector), std::move(lows));
}

AgentEntry resolve_agent(const std::string& spec, std::string display_name) {
  if (display_name.empty()) display_name = spec;
  if (is_scripted_pilot(spec)) {
    return {display_name, [spec] { return make_scripted_pilot(spec); }};
  }
  const auto hash = spec.rfind('#');
  const std::string path = hash == std::string::npos ? spec : spec.substr(0, hash);
  const std::string member = hash == std::string::npos ? std::string() : spec.substr(hash + 1);
  const auto checkpoint = std::make_shared<const Checkpoint>(load_checkpoint(path));

  if (member.empty() && checkpoint->contains(kSelectorBundle)) {
    // Validate once up front so a bad checkpoint fails before any episode.
    hierarchy_from_checkpoint(*checkpoint);
    return {display_name, [checkpoint, display_name] {
              return std::make_unique<HierarchicalPilot>(display_name, hierarchy_from_checkpoint(*checkpoint));
            }};
  }
  std::string name = member;
  if (name.empty()) {
    if (checkpoint->bundles.size() != 1) {
      throw CheckpointError(path + ": holds " + std::to_string(checkpoint->bundles.size()) +
                            " bundles; pick one with '#name'");
    }
    name = checkpoint->bundles.front().name;
  }
  auto policy = frozen_low_level(checkpoint->get(name), name);
  return {display_name, [policy, display_name] { return std::make_unique<PolicyPilot>(display_name, policy); }};
}

AgentEntry resolve_named_agent(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return resolve_agent(arg);
  return resolve_agent(arg.substr(eq + 1), arg.substr(0, eq));
}

}  // namespace dogfight
