#pragma once

#include "consonance/pcset.hpp"

namespace consonance {

/// Smallest taxicab voice-leading distance between two pitch-class sets,
/// where every note of both chords takes part in at least one voice and
/// notes may be doubled. Exact.
///
/// The optimal voice leading is a minimum-weight edge cover of the complete
/// bipartite graph between the chords. With mu(v) the cheapest edge at v,
/// the cover weight is sum(mu) plus a minimum-weight matching over the
/// reduced weights min(0, d(x, y) - mu(x) - mu(y)), found by the Hungarian
/// method on a square matrix padded with zeros.
int min_voice_leading(PitchClassSet x, PitchClassSet y);

}  // namespace consonance
