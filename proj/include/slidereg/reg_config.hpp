#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slidereg/composite.hpp"
#include "slidereg/errors.hpp"

namespace slidereg {

enum class PrealignMode { ara, conv_full, ncc_binary };
enum class DeformMode { lbfgs, rbf, none };
enum class MaskMode { threshold, kmeans };

inline PrealignMode parse_prealign_mode(const std::string& s) {
    if (s == "ara") return PrealignMode::ara;
    if (s == "conv_full") return PrealignMode::conv_full;
    if (s == "ncc_binary") return PrealignMode::ncc_binary;
    fail(errc::argument, "unknown prealign mode '" + s + "'");
}

inline DeformMode parse_deform_mode(const std::string& s) {
    if (s == "lbfgs") return DeformMode::lbfgs;
    if (s == "rbf") return DeformMode::rbf;
    if (s == "none") return DeformMode::none;
    fail(errc::argument, "unknown deform mode '" + s + "'");
}

inline MaskMode parse_mask_mode(const std::string& s) {
    if (s == "threshold") return MaskMode::threshold;
    if (s == "kmeans") return MaskMode::kmeans;
    fail(errc::argument, "unknown mask mode '" + s + "'");
}

struct RegConfig {
    // pre-alignment
    PrealignMode prealign_mode = PrealignMode::ara;
    int n_rotations = 32;             // ARA angle samples
    double rotation_stride_deg = 1.0; // conv_full template-matching stride
    int ara_refine_iters = 10;        // GN iterations per sampled angle
    int prealign_max_dim = 128;       // resolution for the rotation search
    bool masked_prealign = true;      // masked NGF for ARA; affine/deformable run unmasked

    // preprocessing
    int work_max_dim = 512;
    bool use_clahe = false;
    int clahe_tiles = 8;
    double clahe_clip = 0.01;
    double smooth_sigma_um = 0.0;
    MaskMode mask_mode = MaskMode::threshold;
    int mask_fixed_lo = 50, mask_fixed_hi = 230;   // H&E thresholds
    int mask_moving_lo = 100, mask_moving_hi = 240; // IHC thresholds
    int min_keep_components = 1;

    // pyramid
    int pyramid_factor = 2;
    int pyramid_min_dim = 64;  // affine stage coarsest level
    int deform_min_dim = 128;  // deformable coarsest level: a lattice of
                               // spacing grid_h cannot represent warp
                               // wavelengths below ~4 spacings, so the
                               // deformable stage must not coarsen past them

    // affine stage
    int max_iter_affine = 50;

    // deformable stage
    DeformMode deform_mode = DeformMode::lbfgs;
    double alpha = 0.3;   // weight of the curvature term in J = NGF + alpha CURV
    double grid_h = 16.0; // control-point spacing, px
    int max_iter_deform = 100;
    int lbfgs_memory = 10;

    // RBF local-correction stage
    int rbf_ref_patch = 256;
    int rbf_mov_patch = 512;
    int rbf_boundary_stride = 128; // one keypoint per this many boundary px
    int rbf_conv_downscale = 2;

    // shared optimizer knobs
    double armijo_c = 1e-4;
    double grad_tol = 1e-6;
    double step_tol = 1e-8;

    // similarity
    double epsilon = 0.01;

    std::uint64_t seed = 0;

    void validate() const {
        require(n_rotations >= 2, errc::argument, "n_rotations must be >= 2");
        require(alpha >= 0.0, errc::argument, "alpha must be >= 0");
        require(grid_h >= 2.0, errc::argument, "grid_h must be >= 2");
        require(max_iter_affine >= 1 && max_iter_deform >= 1 && ara_refine_iters >= 1,
                errc::argument, "iteration counts must be >= 1");
        require(lbfgs_memory >= 1, errc::argument, "lbfgs memory must be >= 1");
        require(rotation_stride_deg > 0.0, errc::argument, "rotation stride must be positive");
        require(epsilon > 0.0, errc::argument, "epsilon must be positive");
        require(rbf_ref_patch % 2 == 0 && rbf_mov_patch % 2 == 0 &&
                    rbf_mov_patch > rbf_ref_patch,
                errc::argument, "rbf patches must be even with moving > reference");
        require(rbf_conv_downscale >= 1, errc::argument, "rbf conv downscale must be >= 1");
    }
};

struct RegFlags {
    bool converged = false;
    bool max_iter_hit = false;
    bool empty_mask = false;
    bool low_overlap = false;
    bool failed = false;       // pipeline error; identity transform emitted
    std::string failure_reason;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RegResult {
    CompositeTransform transform;
    std::vector<double> objective_trace; // accepted steps of the active stage objective
    std::vector<double> affine_trace;
    std::vector<double> deform_trace;
    std::vector<double> prealign_scores; // per sampled angle
    RegFlags flags;
    std::vector<StageTiming> timings;
    int work_factor_fixed = 1;  // downsample factor applied to the fixed image
    int work_factor_moving = 1;
    double final_objective = 0.0;
};

} // namespace slidereg
