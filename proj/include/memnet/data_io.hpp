#pragma once

#include <memnet/dataset.hpp>
#include <memnet/optimize.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace memnet {

// Synthetic instance: X and y entries i.i.d. Uniform[-1,1] from the seed,
// rows of X normalized to unit norm, y left as drawn.
Dataset gen_synthetic(Index n, Index d, std::uint64_t seed);

// each input row scaled to unit norm (explicit step, never implicit)
Dataset normalize_rows(const Dataset& data);

// IDX (MNIST container) reader: big-endian magic + dims, byte payload.
// Pixels are scaled to [0,1]; labels come back as 0..9 floats.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Projection onto the top k right singular vectors of the centered data.
// Component signs fixed so each loading's largest-magnitude entry is
// positive.
Dataset pca_project(const Dataset& data, Index k_dims);

// the d x k loading matrix used by pca_project (orthonormal columns)
Matrix pca_loadings(const Dataset& data, Index k_dims);

// ---- trace CSV ----
// header "iteration,objective,grad_norm,perturbed"; doubles in shortest
// round-trip decimal form

void write_trace(const std::string& path, const Trace& trace);
Trace read_trace(const std::string& path);

// ---- parameter/matrix binary ----
// per-matrix record: magic "MNW1", u32 dim count, u32 dims, row-major f64
// payload, all little-endian; a file may hold several records back to back

void write_matrices(const std::string& path, const std::vector<Matrix>& matrices);
std::vector<Matrix> read_matrices(const std::string& path);

void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

// shortest round-trip decimal form of a double
std::string format_double(double x);

}  // namespace memnet
