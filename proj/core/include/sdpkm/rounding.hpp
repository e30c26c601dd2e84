#pragma once

#include "sdpkm/conic/solver.hpp"
#include "sdpkm/dataset.hpp"
#include "sdpkm/formulations.hpp"
#include "sdpkm/kmeans.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdpkm {

struct RoundingOptions {
  conic::SolverConfig solver;
  /// Compact is exact for the optimal value and far cheaper; the lifted
  /// encodings are kept for audits.
  LiftedEncoding encoding = LiftedEncoding::Compact;
};

/// One solve of Algorithm 1: the pins in force, the value and the
/// per-point estimate argmax_i e_n^T V_i e (may leave clusters empty).
struct RoundingStep {
  std::vector<Pin> pins;
  double value = 0.0;
  conic::SolveStatus status = conic::SolveStatus::MaxIters;
  int iterations = 0;
  std::vector<int> estimate;
  double seconds = 0.0;
};

struct RoundingTrace {
  /// n_2, ..., n_K (0-based point indices).
  std::vector<int> pins;
  std::vector<RoundingStep> steps;
  std::vector<int> pre_lloyd;
  std::vector<int> post_lloyd;
  /// Set when any solve stopped short of the tolerance.
  bool inexact = false;
  double seconds = 0.0;

  /// Values never decrease as pins are appended, up to `slack` times
  /// max(1, |value|).
  bool values_monotone(double slack) const;
};

struct RoundingResult {
  Assignment assignment;
  RoundingTrace trace;
};

/// Algorithm 1: solve R0, then for k = 2..K pin the best remaining point
/// n_k = argmax_n e_n^T V_k e (excluding point 0 and earlier pins) to
/// cluster k and re-solve; assign by argmax_k e_n^T V_k e and finish with
/// one Lloyd step. Ties go to the smallest index.
RoundingResult algorithm1(const DataSet& ds, int k, const RoundingOptions& opts = {});

/// Membership weights e_n^T V_i e as an N x K matrix.
Eigen::MatrixXd memberships(const std::vector<Eigen::MatrixXd>& v);

/// Labels argmax_i weights(n, i), ties to the smallest index.
std::vector<int> argmax_labels(const Eigen::MatrixXd& weights);

/// Recognizes Y = sum_i pi_i pi_i^T / (e^T pi_i) up to `tol` entrywise.
/// Blocks are grown by thresholding each unassigned row at half its
/// diagonal, then the reconstruction is verified.
std::optional<Assignment> detect_exact_recovery(const Eigen::MatrixXd& y, double tol = 1e-3);
std::optional<Assignment> detect_exact_recovery(const R2Solution& y, double tol = 1e-3);

/// Lloyd on the denoised points X Y, then each original point goes to the
/// nearest denoised centroid. A simplified stand-in for the external
/// pipeline that consumes the denoised points.
Assignment denoise_round(const DataSet& ds, const Eigen::MatrixXd& y, int k, std::uint64_t seed);

/// JSON text for a trace; wall-times are included only when asked so that
/// reruns stay byte-identical.
std::string trace_to_json(const RoundingTrace& t, bool timings = false);

}  // namespace sdpkm
