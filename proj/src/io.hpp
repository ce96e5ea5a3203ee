// JSON serialization for surfaces and reports.  Schemas are versioned with a
// "schema" tag; object keys are emitted in sorted order so reports are
// byte-stable across runs.
#pragma once

#include "flow.hpp"
#include "geometry.hpp"
#include "shrinker.hpp"
#include "spectral.hpp"

// vendor single-header
#include "json.hpp"

namespace shl {

using json = nlohmann::json;

json to_json(const DiscreteCurve& c);
json to_json(const ProfileSurface& p);
json to_json(const RoundProduct& rp);
json to_json(const AnySurface& s);

// Parses any of the three surface kinds; validates invariants and normalizes
// curve orientation.
struct ParsedSurface {
  std::optional<DiscreteCurve> curve;
  std::optional<ProfileSurface> profile;
  std::optional<RoundProduct> product;
};
ParsedSurface surface_from_json(const json& j);

json to_json(const LocalGeometry& g);
json to_json(const FEvaluation& f);
json to_json(const FGradient& g);
json to_json(const EntropyResult& e);
json to_json(const ShrinkerResidual& r);
json to_json(const IdentityReport& r);
json to_json(const SpectrumReport& s, bool include_eigenfunctions);
json to_json(const StabilityReport& s);
json to_json(const ClassificationNote& n);
json to_json(const ShootingResult& s);
json to_json(const CurveOrbit& o);
json to_json(const FlowSample& s);
json to_json(const JumpRecord& j);
json to_json(const FlowTrace& t);
json to_json(const TangentCandidate& t);
json to_json(const MonotonicityReport& m);
json to_json(const VolumeGrowthReport& v);
json to_json(const FlowConsistencyReport& r);

std::string dump_sorted(const json& j);

}  // namespace shl
