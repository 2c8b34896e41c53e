#pragma once

#include <utility>

#include "evconv/types.hpp"

namespace evconv {

// Poisson reconstruction on a pixel grid with homogeneous Neumann boundaries.
//
// Difference operators live on the staggered grid: gradients are forward
// differences (sample between x and x+1, zero past the last row/column) and
// divergence is their adjoint, a centred difference of those half-pixel
// samples that turns one-sided at the borders. With this pairing
// divergence(forward_gradients(u)) equals the 5-point Neumann Laplacian of u
// exactly, which is what the cosine-basis solver inverts.

struct GradientField {
  ImageF gx;
  ImageF gy;
};

GradientField forward_gradients(const ImageF& u);

ImageF divergence(const ImageF& gx, const ImageF& gy);

// 5-point Laplacian with mirrored (half-sample) boundary.
ImageF laplacian_neumann(const ImageF& u);

// Returns u with laplacian_neumann(u) == rhs - mean(rhs) and mean(u) == 0.
// Direct solve in the DCT-II basis, which diagonalises the Neumann Laplacian.
ImageF solve_poisson(const ImageF& rhs);

// Least-squares potential of a gradient field: solve_poisson(divergence(g)).
ImageF reconstruct_from_gradients(const ImageF& gx, const ImageF& gy);

// Discrete curl of the field on the staggered grid, stored at the lower-left
// cell corner; zero in the last row and column. Identically zero iff the
// field is integrable.
ImageF curl(const ImageF& gx, const ImageF& gy);

// Root-mean-square misfit between forward_gradients(u) and (gx, gy) over the
// interior difference samples.
double gradient_misfit_rms(const ImageF& u, const ImageF& gx, const ImageF& gy);

}  // namespace evconv
