#include "plantscan/augment.hpp"

namespace plantscan {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::identity: return "identity";
    case Augmentation::flip_horizontal: return "flip_horizontal";
    case Augmentation::flip_vertical: return "flip_vertical";
    case Augmentation::rotate90: return "rotate90";
    case Augmentation::rotate180: return "rotate180";
    case Augmentation::rotate270: return "rotate270";
  }
  return "unknown";
}

Tensor augment(const Tensor& image, Augmentation a) {
  detail::require_rank(image, 3, "augment");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const bool swap = a == Augmentation::rotate90 || a == Augmentation::rotate270;
  Tensor out({swap ? w : h, swap ? h : w, c});
  const std::size_t ow = out.dim(1);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t col = 0; col < w; ++col) {
      std::size_t rr = r, cc = col;
      switch (a) {
        case Augmentation::identity: break;
        case Augmentation::flip_horizontal: cc = w - 1 - col; break;
        case Augmentation::flip_vertical: rr = h - 1 - r; break;
        case Augmentation::rotate90: rr = w - 1 - col; cc = r; break;
        case Augmentation::rotate180: rr = h - 1 - r; cc = w - 1 - col; break;
        case Augmentation::rotate270: rr = col; cc = h - 1 - r; break;
      }
      const float* src = image.data() + (r * w + col) * c;
      std::copy(src, src + c, out.data() + (rr * ow + cc) * c);
    }
  }
  return out;
}

Augmentation random_augmentation(Rng& rng) {
  return kAllAugmentations[rng.below(std::size(kAllAugmentations))];
}

}  // namespace plantscan
