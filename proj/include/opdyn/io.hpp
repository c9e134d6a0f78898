#pragma once

#include <string>
#include <vector>

#include "opdyn/dynamics.hpp"
#include "opdyn/experiments.hpp"
#include "opdyn/measure.hpp"
#include "opdyn/steady.hpp"

namespace opdyn::io {

// All writers format numbers with the shortest digit string that parses back
// to the same double, so identical inputs produce byte-identical files.

// Measures: JSON array of [y, theta, weight] triples; CSV "y,theta,weight".
std::string measure_to_json(const EmpiricalMeasure& mu);
EmpiricalMeasure measure_from_json(const std::string& text);
std::string measure_to_csv(const EmpiricalMeasure& mu);
EmpiricalMeasure measure_from_csv(const std::string& text);

// Trajectories: CSV "t,atom_id,y,theta,weight" (one row per atom per
// snapshot) plus a sidecar JSON of {times, energies, dissipations}.
std::string trajectory_to_csv(const Trajectory& traj);
std::string trajectory_sidecar_json(const Trajectory& traj);

// Stationary profiles: CSV "theta,g,g_prime,g_second"; metadata JSON
// {alpha, p, residual, alpha_candidates, inflection_points, bound_checks}.
std::string profile_to_csv(const SteadyProfile& prof);
std::string profile_metadata_json(const SteadyProfile& prof);

// Study reports: full JSON; CSV of the series alone with header "x,value".
std::string report_to_json(const StudyReport& rep);
std::string report_series_csv(const StudyReport& rep);

// Generic numeric CSV reader for checking any of the exports above.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace opdyn::io
