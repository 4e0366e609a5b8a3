#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "crystalwalk/girsanov.hpp"
#include "crystalwalk/harmonic.hpp"
#include "crystalwalk/lattice.hpp"
#include "crystalwalk/montecarlo.hpp"
#include "crystalwalk/stationary.hpp"

namespace cryst {

// Everything the analysis pipeline produces for one lattice/kernel pair.
// Serialized field names are frozen (docs/schema.md, "schema": 1).
struct AnalysisReport {
    BuiltLattice input;
    StationaryMeasure m;
    CycleBasis basis;
    DirectionReport direction;
    Realization realization;
    AlbaneseMetric albanese0;
    ChangedKernel changed;
    DirectionReport changed_direction;
    double m_p = 0.0;
    double exp_m_p = 1.0;
};

AnalysisReport analyze(const BuiltLattice& input);

nlohmann::json report_to_json(const AnalysisReport& report);
std::string report_to_text(const AnalysisReport& report);

nlohmann::json clt_stats_to_json(const CltStats& stats);

}  // namespace cryst
