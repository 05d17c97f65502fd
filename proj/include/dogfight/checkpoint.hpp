#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dogfight/sac.hpp"

namespace dogfight {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBundle {
  std::string name;
  sac::PolicyBundle bundle;
};

/// One or more policy bundles plus the run metadata that produced them.
/// Layout: "DFCK", u32 version, u64 manifest length, JSON manifest, LE f32
/// tensors in manifest order, SHA-256 of all preceding bytes.
struct Checkpoint {
  std::string kind;          ///< "low", "selector" or free-form
  std::string profile;       ///< low-level profile, empty otherwise
  std::string config_hash;
  std::string config_text;   ///< canonical config echo
  std::uint64_t seed{0};
  std::map<std::string, std::int64_t> counters;
  std::vector<NamedBundle> bundles;

  const sac::PolicyBundle& get(std::string_view name) const;
  bool contains(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view bytes);

/// Atomic: writes a temporary sibling, fsyncs it, then renames over `path`.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// Throws unless `loaded` has the dimensions and layer sizes of `expected`.
void check_layout(const sac::PolicyBundle& loaded, const sac::PolicyBundle& expected, std::string_view name);

}  // namespace dogfight
