#pragma once

#include <optional>
#include <string>

#include "dualres/grid.hpp"

namespace dualres {

enum class NiftiDataType { Float32, Float64 };

// Minimal NIfTI-1 single-file (.nii, optionally gzip-wrapped) reader.
// Only 3D scalar float32/float64 volumes with axis-aligned, positively
// oriented affines are accepted. Without a mask file the mask is
// (finite && nonzero).
MaskedVolume read_nifti(const std::string& path,
                        const std::optional<std::string>& mask_path = std::nullopt);

// Writes unmasked voxels as 0. Output is gzip-compressed when the path
// ends in ".gz". Refuses non-finite values inside the mask.
void write_nifti(const MaskedVolume& vol, const std::string& path,
                 NiftiDataType type = NiftiDataType::Float32);

}  // namespace dualres
