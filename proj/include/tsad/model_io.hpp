#ifndef TSAD_MODEL_IO_HPP
#define TSAD_MODEL_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "tsad/ensemble.hpp"

namespace tsad {

struct StackingHead {
    LogisticModel logistic;
    Standardizer score_stats;
};

// Everything needed to score new data: the fitted members (each carries its
// own standardizer, feature subset, rotation, detector, and threshold), the
// configuration they were built with, and the optional stacking head.
struct ModelBundle {
    EnsembleConfig config;
    std::vector<EnsembleMember> members;
    std::optional<StackingHead> stacking;
};

// Binary model format: magic, format version, length-prefixed payload,
// CRC-32 trailer. All integers and IEEE-754 doubles are little-endian, so a
// reloaded model scores bit-identically to the saved one.
void save_model(const ModelBundle& bundle, const std::string& path);

// Throws IoError (unreadable), DataError (not a model file),
// ModelVersionError (unsupported format version), or CorruptModelError
// (truncation or checksum mismatch).
ModelBundle load_model(const std::string& path);

} // namespace tsad

#endif
