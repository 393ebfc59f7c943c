#pragma once

#include "plantscan/random.hpp"
#include "plantscan/tensor.hpp"

#include <string>

namespace plantscan {

/// Dihedral transforms applied to H x W x C tensors. Rotations are
/// counter-clockwise; every channel (including a mask) moves together.
enum class Augmentation { identity, flip_horizontal, flip_vertical, rotate90, rotate180, rotate270 };

inline constexpr Augmentation kAllAugmentations[] = {
    Augmentation::identity, Augmentation::flip_horizontal, Augmentation::flip_vertical,
    Augmentation::rotate90, Augmentation::rotate180,       Augmentation::rotate270};

std::string to_string(Augmentation a);

Tensor augment(const Tensor& image, Augmentation a);

/// Uniform choice among the six transforms.
Augmentation random_augmentation(Rng& rng);

}  // namespace plantscan
