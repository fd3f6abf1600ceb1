#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "kartmpc/gp.hpp"
#include "kartmpc/reduce.hpp"

namespace kartmpc::gp {

// Flat text model file, version-tagged. Doubles are written as hex floats so
// a save/load/save cycle is byte-identical.
struct ModelFile {
  GpModel model;
  std::optional<SodSet> sod;
};

void save_model(std::ostream& os, const ModelFile& mf);
void save_model(const std::string& path, const ModelFile& mf);

ModelFile load_model(std::istream& is);
ModelFile load_model(const std::string& path);

}  // namespace kartmpc::gp
