#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "dogfight/engagement.hpp"

namespace dogfight {

class ShapingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Low-level policy reward profiles: control zone, aggressive shooter,
/// conservative shooter.
enum class Profile { cz, as, cs };

std::string_view to_string(Profile p);
/// Accepts "CZ"/"AS"/"CS" in either case.
Profile profile_from_string(std::string_view s);

/// Gains and shape parameters of the shaping components. Every component is a
/// per-second rate bounded in magnitude by its gain; `compose` multiplies by dt.
struct ShapingWeights {
  // Default gains keep each profile's per-second shaping magnitude below 1.0,
  // the peak WEZ damage rate.
  double relative_position_gain{0.2};
  double track_theta_gain{0.3};
  double closure_gain{0.1};
  double gunsnap_blue_gain{0.3};
  double gunsnap_red_gain{0.3};
  double deck_gain{0.1};
  double too_close_gain{0.1};

  /// Gun-snap magnitude at the near edge of the range band (500 ft).
  double gunsnap_near{1.0};
  /// Gun-snap magnitude at the far edge (3000 ft) for the ramped profile.
  double gunsnap_far{0.0};
  /// When set, gun snaps score `gunsnap_near` anywhere in the band.
  bool plateau{false};
  double gunsnap_cone_deg{3.0};
  double gunsnap_min_range{500.0};
  double gunsnap_max_range{3000.0};

  double closure_clamp{500.0};
  double too_close_range{500.0};
  double too_close_adverse_limit{kPi / 3.0};
  double deck_floor{2000.0};
  double deck_depth_scale{1000.0};

  /// Terminal penalty applied by the training loop when the trainee loses.
  /// Not part of any profile's per-step sum.
  double loss_penalty{5.0};

  void validate() const;
};

struct RewardBreakdown {
  double relative_position{0.0};
  double track_theta{0.0};
  double closure{0.0};
  double gunsnap_blue{0.0};
  double gunsnap_red{0.0};
  double deck{0.0};
  double too_close{0.0};
  double total{0.0};

  double sum() const {
    return relative_position + track_theta + closure + gunsnap_blue + gunsnap_red + deck + too_close;
  }
};

/// Offensive-position score: cos^2(track/2) * cos^2(adverse/2), in [0, 1].
double offensive_score(const GeometrySnapshot& g);

/// +gain when perfectly tailing the opponent, -gain when perfectly tailed.
double r_relative_position(const GeometrySnapshot& own, const GeometrySnapshot& opp,
                           const ShapingWeights& w = {});
double r_track_theta(const GeometrySnapshot& own, const ShapingWeights& w = {});
/// Rewards closing while pursuing and penalizes closing while pursued. The
/// pursuit weight (pi - track - adverse)/pi is +1 in a tail chase and -1 when tailed.
double r_closure(const GeometrySnapshot& own, const ShapingWeights& w = {});
/// Unsigned gun-snap magnitude for a shooter with geometry `shooter`.
double gunsnap_value(const GeometrySnapshot& shooter, const ShapingWeights& w);
double r_gunsnap_blue(const GeometrySnapshot& own, const ShapingWeights& w = {});
/// Penalty when the opponent (geometry `opp`) holds a gun snap on us.
double r_gunsnap_red(const GeometrySnapshot& opp, const ShapingWeights& w = {});
double r_deck(double altitude, const ShapingWeights& w = {});
double r_too_close(const GeometrySnapshot& own, const ShapingWeights& w = {});

/// Sum of the profile's components, each scaled by dt. AS forces the ramped
/// gun-snap shape and CS the plateau shape regardless of `w.plateau`.
RewardBreakdown compose(Profile profile, const GeometrySnapshot& own, const GeometrySnapshot& opp,
                        const ShapingWeights& w = {}, double dt = kSimDt);
RewardBreakdown compose(std::string_view profile, const GeometrySnapshot& own,
                        const GeometrySnapshot& opp, const ShapingWeights& w = {},
                        double dt = kSimDt);

}  // namespace dogfight
