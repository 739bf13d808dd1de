#pragma once

// Model definition files.
//
// A model file is a list of `key = value` lines; values are JSON literals and
// may span several lines while brackets are open. `#` starts a comment.
//
//   name    = "affine"
//   dim     = 2
//   f       = [[0, 1, 1, -1.0]]            # [a, b, c, value]; f[b][a][c] = -value is implied
//   G       = [1, 0, 0, 1]                 # row-major, default identity
//   Gamma   = [1, 0, 0, 1]                 # row-major, default zero
//   D       = [0.5, 0, 0, 0.5]             # row-major, default zero
//   measure = "halfplane"                  # "constant" | "halfplane" | {"power": [p0, ...], "scale": s}
//   domain  = [[null, null], [0, null]]    # per-coordinate [min, max]; null = unbounded

#include <iosfwd>
#include <string>
#include <string_view>

#include "eaf/algebra.hpp"

namespace eaf {

ModelSpec parse_model(std::string_view text);
ModelSpec read_model_file(const std::string& path);

/// A built-in name or a path to a model file.
ModelSpec load_model(const std::string& ref);

/// Writes `model` in the format accepted by parse_model.
void write_model(std::ostream& os, const ModelSpec& model);

}  // namespace eaf
