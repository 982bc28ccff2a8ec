#pragma once

#include <map>
#include <string>
#include <vector>

#include "mlsgan/tensor.hpp"

namespace mlsgan {

/// Named parameter arrays with shape headers plus a free-form metadata
/// map; the text layout is documented in docs/formats.md and stable.
/// Values print as %.17g, so doubles round-trip exactly.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> params;  // in save order
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Copies loaded values into live parameters by name; every live parameter
/// must be present with a matching shape.
void apply_checkpoint(const Checkpoint& checkpoint, std::span<const Tensor> live_params);

}  // namespace mlsgan
