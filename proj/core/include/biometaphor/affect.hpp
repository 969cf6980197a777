#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace biometaphor {

/// Component-wise equality epsilon for VAPair.
inline constexpr double kVaEpsilon = 1e-9;

/// Extremity below which a point is considered the neutral center.
inline constexpr double kNeutralEpsilon = 0.05;

/// A normalized valence-arousal coordinate. Both components in [0,1]:
/// valence runs displeasure -> pleasure, arousal deactivation -> activation.
class VAPair {
public:
    VAPair(double valence, double arousal);

    double valence() const { return valence_; }
    double arousal() const { return arousal_; }

    bool operator==(const VAPair& other) const;
    bool operator!=(const VAPair& other) const { return !(*this == other); }

private:
    double valence_;
    double arousal_;
};

/// Center and radius of the circumplex within the unit square.
/// center +/- radius must stay inside [0,1] on both axes.
class CircumplexGeometry {
public:
    CircumplexGeometry();  // center (0.5, 0.5), radius 0.5
    CircumplexGeometry(VAPair center, double radius);

    const VAPair& center() const { return center_; }
    double radius() const { return radius_; }

    /// Point on the circle at the given angle (degrees, CCW from +valence).
    VAPair point_at(double angle_deg) const;

private:
    VAPair center_;
    double radius_;
};

enum class Band { Low, Medium, High };

std::string to_string(Band band);

enum class Family {
    PositiveActivated,
    PositiveDeactivated,
    NegativeActivated,
    NegativeDeactivated,
    Neutral,
};

std::string to_string(Family family);
std::optional<Family> family_from_string(const std::string& name);

/// Eight circumplex labels at 45-degree spacing plus the reserved center label.
class OctantTable {
public:
    struct Entry {
        double angle_center_deg;
        std::string label;
    };

    /// Canonical layout: pleasure at 0, excitement at 45, ... contentment at 315.
    static OctantTable standard();

    explicit OctantTable(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }

    /// Label of the entry nearest the angle; exact midpoints go to the smaller angle.
    const std::string& nearest_label(double angle_deg) const;

private:
    std::vector<Entry> entries_;
};

/// Geometric reading of a VAPair: angular position, radial extremity,
/// per-axis bands and the derived categorical labels.
struct InferredState {
    double angle_deg;           // [0, 360), CCW from the positive-valence axis
    double extremity;           // distance / radius, clamped to [0,1]
    Band valence_band;
    Band arousal_band;
    Band intensity_label;       // alias of arousal_band
    std::string octant_label;   // "neutral" iff extremity < kNeutralEpsilon
    Family family;
};

/// `count` pairs evenly spaced at k*(360/count) degrees on the circle.
std::vector<VAPair> prototypical_va_pairs(int count, const CircumplexGeometry& geometry);

/// Angle in [0,360) and clamped normalized radius. The exact center maps to (0, 0).
std::pair<double, double> polar_of(const VAPair& va, const CircumplexGeometry& geometry);

InferredState infer_state(const VAPair& va, const CircumplexGeometry& geometry,
                          const OctantTable& table);

inline InferredState infer_state(const VAPair& va) {
    return infer_state(va, CircumplexGeometry{}, OctantTable::standard());
}

/// Component-wise (weighted) arithmetic mean.
VAPair aggregate_group(const std::vector<VAPair>& vas,
                       const std::vector<double>* weights = nullptr);

/// Band thresholds: low < 0.35 <= medium <= 0.65 < high.
Band band_of(double component);

}  // namespace biometaphor
