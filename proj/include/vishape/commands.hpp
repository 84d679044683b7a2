#ifndef VISHAPE_COMMANDS_HPP
#define VISHAPE_COMMANDS_HPP

#include <string>
#include <vector>

#include "vishape/config.hpp"
#include "vishape/damage.hpp"
#include "vishape/vi.hpp"

namespace vishape {

// Builders shared by the CLI, the acceptance suite and the bindings.
Mesh mesh_from_config(const Config& cfg);
VectorField field_from_config(const Config& cfg, const Box2& hold_all);
ObstacleProblem problem_from_config(const Config& cfg, const Mesh& mesh);
DamageModelSpec damage_from_config(const Config& cfg, const Mesh& mesh);
CostSpec cost_from_config(const Config& cfg, int steps);
std::vector<VectorField> catalog_from_config(const Config& cfg, const Box2& hold_all);

// Executes one CLI command; writes CSV/JSON artifacts into out_dir and
// returns the one-line summary printed by the tool. Throws ConfigError for
// invalid configs and SolverError for solver failures.
std::string run_command(const std::string& command, const Config& cfg,
                        const std::string& out_dir);

const std::vector<std::string>& command_names();

} // namespace vishape

#endif
