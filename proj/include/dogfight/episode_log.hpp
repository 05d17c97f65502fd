#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dogfight/engagement.hpp"

namespace dogfight {

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One simulation step, recorded after the step was applied.
struct StepRecord {
  std::int64_t step{0};  ///< step_index after the step
  ControlInput blue_controls;
  ControlInput red_controls;
  AircraftState blue;
  AircraftState red;
  GeometrySnapshot blue_geometry;
  GeometrySnapshot red_geometry;
  StepEvents events;
  int blue_selection{-1};  ///< new selector decision taken before this step, else -1
  int red_selection{-1};

  double t() const { return static_cast<double>(step) / kSimHz; }
};

struct EpisodeLog {
  std::uint64_t seed{0};
  std::string regime;
  std::string blue_name;
  std::string red_name;
  std::string config_hash;
  double health_scale{1.0};
  AircraftState blue_initial;
  AircraftState red_initial;
  std::vector<StepRecord> steps;
  Outcome outcome{Outcome::ongoing};
  TerminalReason reason{TerminalReason::none};
  std::int64_t step_count{0};
  double damage_blue{0.0};  ///< final fraction of starting health
  double damage_red{0.0};
  double reward_blue{0.0};
  double reward_red{0.0};
  std::optional<std::vector<double>> utilization_blue;
  std::optional<std::vector<double>> utilization_red;
};

/// Newline-delimited JSON: one header record, one record per step, one footer
/// record. Field order is fixed (see docs/episode_log.md).
std::string to_ndjson(const EpisodeLog& log);
void write_ndjson(std::ostream& out, const EpisodeLog& log);
/// Parses the output of `to_ndjson`.
EpisodeLog read_ndjson(std::istream& in);

/// SHA-256 of the NDJSON serialization.
std::string log_hash(const EpisodeLog& log);

/// Human-readable timeline, one line per `every` steps plus every event step and every selection switch.
std::string render_timeline(const EpisodeLog& log, int every = 50);

}  // namespace dogfight
