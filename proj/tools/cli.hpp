#pragma once

#include "handik/kinematics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace handik::cli {

/// Runs the command line `args` (args[0] is the program name). Machine
/// output goes to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Joint files: {"units": "mm"|"normalized", "samples": [[[x,y,z] x 21], ...]},
/// or {"joints": [[x,y,z] x 21]} for a single set, or the bare arrays.
std::vector<JointSet> read_joint_file(const std::string& path);
void write_joint_file(const std::string& path, const std::vector<JointSet>& sets);

}  // namespace handik::cli
