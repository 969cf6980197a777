#include "biometaphor/affect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "biometaphor/errors.hpp"

namespace biometaphor {

namespace {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace

VAPair::VAPair(double valence, double arousal) : valence_(valence), arousal_(arousal) {
    if (!(valence >= 0.0 && valence <= 1.0) || !(arousal >= 0.0 && arousal <= 1.0)) {
        throw ValidationError("VAPair components must lie in [0,1], got (" +
                              std::to_string(valence) + ", " + std::to_string(arousal) + ")");
    }
}

bool VAPair::operator==(const VAPair& other) const {
    return std::abs(valence_ - other.valence_) <= kVaEpsilon &&
           std::abs(arousal_ - other.arousal_) <= kVaEpsilon;
}

CircumplexGeometry::CircumplexGeometry() : CircumplexGeometry(VAPair(0.5, 0.5), 0.5) {}

CircumplexGeometry::CircumplexGeometry(VAPair center, double radius)
    : center_(center), radius_(radius) {
    if (radius <= 0.0) {
        throw ValidationError("circumplex radius must be positive");
    }
    const double slack = 1e-12;
    if (center.valence() - radius < -slack || center.valence() + radius > 1.0 + slack ||
        center.arousal() - radius < -slack || center.arousal() + radius > 1.0 + slack) {
        throw ValidationError("circumplex circle must fit inside the unit square");
    }
}

VAPair CircumplexGeometry::point_at(double angle_deg) const {
    double v = center_.valence() + radius_ * std::cos(deg_to_rad(angle_deg));
    double a = center_.arousal() + radius_ * std::sin(deg_to_rad(angle_deg));
    // Trig round-off can land a hair outside the square.
    v = std::clamp(v, 0.0, 1.0);
    a = std::clamp(a, 0.0, 1.0);
    return VAPair(v, a);
}

std::string to_string(Band band) {
    switch (band) {
        case Band::Low: return "low";
        case Band::Medium: return "medium";
        case Band::High: return "high";
    }
    return "?";
}

std::string to_string(Family family) {
    switch (family) {
        case Family::PositiveActivated: return "positive-activated";
        case Family::PositiveDeactivated: return "positive-deactivated";
        case Family::NegativeActivated: return "negative-activated";
        case Family::NegativeDeactivated: return "negative-deactivated";
        case Family::Neutral: return "neutral";
    }
    return "?";
}

std::optional<Family> family_from_string(const std::string& name) {
    if (name == "positive-activated") return Family::PositiveActivated;
    if (name == "positive-deactivated") return Family::PositiveDeactivated;
    if (name == "negative-activated") return Family::NegativeActivated;
    if (name == "negative-deactivated") return Family::NegativeDeactivated;
    if (name == "neutral") return Family::Neutral;
    return std::nullopt;
}

OctantTable OctantTable::standard() {
    return OctantTable({
        {0.0, "pleasure"},
        {45.0, "excitement"},
        {90.0, "arousal/alert"},
        {135.0, "distress"},
        {180.0, "misery"},
        {225.0, "depression/sadness"},
        {270.0, "sleepiness"},
        {315.0, "contentment"},
    });
}

OctantTable::OctantTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.size() != 8) {
        throw ValidationError("octant table must have exactly 8 entries");
    }
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].angle_center_deg != 45.0 * static_cast<double>(i)) {
            throw ValidationError("octant centers must be {0,45,...,315} in order");
        }
        for (size_t j = i + 1; j < entries_.size(); ++j) {
            if (entries_[i].label == entries_[j].label) {
                throw ValidationError("octant labels must be unique");
            }
        }
    }
}

const std::string& OctantTable::nearest_label(double angle_deg) const {
    size_t best = 0;
    double best_dist = 1e9;
    for (size_t i = 0; i < entries_.size(); ++i) {
        double d = std::abs(angle_deg - entries_[i].angle_center_deg);
        d = std::min(d, 360.0 - d);
        // Strict < keeps the smaller angle on exact 22.5-degree boundaries.
        if (d < best_dist - 1e-12) {
            best_dist = d;
            best = i;
        }
    }
    return entries_[best].label;
}

std::vector<VAPair> prototypical_va_pairs(int count, const CircumplexGeometry& geometry) {
    if (count < 1) {
        throw ValidationError("count must be >= 1");
    }
    std::vector<VAPair> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        out.push_back(geometry.point_at(k * 360.0 / count));
    }
    return out;
}

std::pair<double, double> polar_of(const VAPair& va, const CircumplexGeometry& geometry) {
    const double dv = va.valence() - geometry.center().valence();
    const double da = va.arousal() - geometry.center().arousal();
    const double dist = std::hypot(dv, da);
    if (dist == 0.0) {
        return {0.0, 0.0};
    }
    double angle = rad_to_deg(std::atan2(da, dv));
    if (angle < 0.0) angle += 360.0;
    if (angle >= 360.0) angle -= 360.0;
    return {angle, std::min(1.0, dist / geometry.radius())};
}

Band band_of(double component) {
    if (component < 0.35) return Band::Low;
    if (component <= 0.65) return Band::Medium;
    return Band::High;
}

InferredState infer_state(const VAPair& va, const CircumplexGeometry& geometry,
                          const OctantTable& table) {
    auto [angle, extremity] = polar_of(va, geometry);

    InferredState state;
    state.angle_deg = angle;
    state.extremity = extremity;
    state.valence_band = band_of(va.valence());
    state.arousal_band = band_of(va.arousal());
    state.intensity_label = state.arousal_band;

    if (extremity < kNeutralEpsilon) {
        state.octant_label = "neutral";
        state.family = Family::Neutral;
        return state;
    }

    state.octant_label = table.nearest_label(angle);

    // On-axis points count toward the positive / activated side.
    const bool positive = va.valence() >= geometry.center().valence();
    const bool activated = va.arousal() >= geometry.center().arousal();
    if (positive) {
        state.family = activated ? Family::PositiveActivated : Family::PositiveDeactivated;
    } else {
        state.family = activated ? Family::NegativeActivated : Family::NegativeDeactivated;
    }
    return state;
}

VAPair aggregate_group(const std::vector<VAPair>& vas, const std::vector<double>* weights) {
    if (vas.empty()) {
        throw ValidationError("aggregate_group needs a nonempty list");
    }
    if (weights != nullptr) {
        if (weights->size() != vas.size()) {
            throw ValidationError("weights length must match the pair list");
        }
        double sum = 0.0;
        for (double w : *weights) {
            if (w < 0.0) throw ValidationError("weights must be nonnegative");
            sum += w;
        }
        if (sum <= 0.0) throw ValidationError("weight sum must be positive");
        double v = 0.0, a = 0.0;
        for (size_t i = 0; i < vas.size(); ++i) {
            v += (*weights)[i] * vas[i].valence();
            a += (*weights)[i] * vas[i].arousal();
        }
        return VAPair(std::clamp(v / sum, 0.0, 1.0), std::clamp(a / sum, 0.0, 1.0));
    }
    double v = 0.0, a = 0.0;
    for (const auto& va : vas) {
        v += va.valence();
        a += va.arousal();
    }
    const auto n = static_cast<double>(vas.size());
    return VAPair(std::clamp(v / n, 0.0, 1.0), std::clamp(a / n, 0.0, 1.0));
}

}  // namespace biometaphor
