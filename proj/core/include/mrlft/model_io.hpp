#pragma once

#include <string>
#include <vector>

#include "mrlft/multirate.hpp"
#include "mrlft/uncertain_ss.hpp"

namespace mrlft {

// Channel names carried alongside the numeric model; documentation only,
// preserved verbatim through serialization.
struct IoNames {
    std::vector<std::string> disturbances;
    std::vector<std::string> performance;
    std::vector<std::string> measurements;
    std::vector<std::string> commands;
};

// One model file: an uncertain plant (continuous or discrete), the sampled
// controller loops plus the routing gain, and the channel names.
struct ModelDocument {
    UncertainStateSpace plant;
    MultirateController controller;
    IoNames io;
};

// Parses model JSON (comments allowed). The plant arrives either as affine
// per-parameter coefficient matrices around the nominal (realized here into
// an LFT with one repeated-scalar block per effective parameter) or as an
// explicit LFT realization. Matrices are row-major arrays with explicit
// dimensions. Throws ModelError carrying line/column on malformed input.
ModelDocument parse_model(const std::string& text);

// load_model reads and parses `path`; save_model writes serialize_model.
ModelDocument load_model(const std::string& path);
void save_model(const ModelDocument& doc, const std::string& path);

// Serializes in explicit-LFT form. Numbers round-trip exactly, so
// parse(serialize(doc)) reproduces doc and the encoding is canonical:
// serialize(parse(serialize(doc))) == serialize(doc).
std::string serialize_model(const ModelDocument& doc);

}  // namespace mrlft
