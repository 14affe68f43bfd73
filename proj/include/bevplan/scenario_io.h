#ifndef BEVPLAN_SCENARIO_IO_H_
#define BEVPLAN_SCENARIO_IO_H_

#include <string>
#include <vector>

#include "bevplan/sim.h"

namespace bevplan {

// JSON scenario files; schema documented in the repository README.
Scenario LoadScenario(const std::string& path);
void SaveScenario(const std::string& path, const Scenario& scenario);

// All *.json scenarios in a directory, sorted by filename.
std::vector<Scenario> LoadScenarioDir(const std::string& dir);

}  // namespace bevplan

#endif  // BEVPLAN_SCENARIO_IO_H_
