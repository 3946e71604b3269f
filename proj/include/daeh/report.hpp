#pragma once

// JSON serialization of every report type.  Floats are printed with %.12e so
// identical runs produce byte-identical output.

#include <json.hpp>
#include <string>

#include "daeh/continuation.hpp"
#include "daeh/degree.hpp"
#include "daeh/error.hpp"
#include "daeh/flow.hpp"
#include "daeh/resonance.hpp"
#include "daeh/svd_reduction.hpp"

namespace daeh::report {

using Json = nlohmann::ordered_json;

inline constexpr int kSchema = 1;

/// Pretty-printed JSON with %.12e floats; non-finite floats become null.
std::string dump(const Json& j, int indent = 2);

Json vec(std::span<const double> v);
Json mat(const Matrix& m);
Json box(const Box& b);
Json point(const PointKS& z);
Json complex_list(const std::vector<linalg::Complex>& v);

Json zero(const degree::ZeroRecord& z);
Json degree_report(const degree::DegreeReport& r);
Json psi_report(const degree::PsiDegreeReport& r);
Json resonance_report(const resonance::ResonanceReport& r);
Json prop41(const resonance::Prop41Report& r);
Json monodromy(const flow::MonodromyReport& r);
Json trajectory_summary(const flow::Trajectory& t);
Json orbit(const continuation::PeriodicOrbit& o);
Json branch(const continuation::Branch& b);
Json multiplicity(const continuation::MultiplicityReport& r);
Json svd_reduction(const svd::SvdReduction& r);
Json error(const Error& e);

}  // namespace daeh::report
