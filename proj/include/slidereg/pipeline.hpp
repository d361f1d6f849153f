#pragma once

#include <chrono>

#include "slidereg/affine_stage.hpp"
#include "slidereg/components.hpp"
#include "slidereg/deformable_stage.hpp"
#include "slidereg/prealign.hpp"
#include "slidereg/rbf_stage.hpp"

namespace slidereg {

namespace pipeline_detail {

// Frame change between a box-downsampled raster and its source: output pixel
// center ox covers inputs [ox k, ox k + k - 1], so x_src = k x_ds + (k-1)/2.
struct FrameScale {
    double k = 1.0;
    double offset() const { return (k - 1.0) / 2.0; }
    Vec2 to_source(Vec2 p) const { return {k * p.x + offset(), k * p.y + offset()}; }
};

// Rescales a reference->moving map between resolution frames:
//   T_out = S_mov ∘ T ∘ S_ref⁻¹,  S(x) = k x + (k-1)/2.
inline CompositeTransform rescale_composite(const CompositeTransform& t, FrameScale ref,
                                            FrameScale mov) {
    const AffineTransform& a = t.affine;
    double r = mov.k / ref.k;
    double cr = ref.offset(), cm = mov.offset();

    CompositeTransform out;
    out.affine.a11 = r * a.a11;
    out.affine.a12 = r * a.a12;
    out.affine.a21 = r * a.a21;
    out.affine.a22 = r * a.a22;
    out.affine.tx = mov.k * (a.tx - (a.a11 + a.a12) * cr / ref.k) + cm;
    out.affine.ty = mov.k * (a.ty - (a.a21 + a.a22) * cr / ref.k) + cm;

    if (t.deform) {
        const DisplacementGrid& g = *t.deform;
        DisplacementGrid scaled(g.gw, g.gh, g.h * ref.k, ref.to_source(g.origin));
        for (size_t i = 0; i < g.node_count(); ++i) {
            scaled.u1[i] = mov.k * g.u1[i];
            scaled.u2[i] = mov.k * g.u2[i];
        }
        out.deform = std::move(scaled);
    }
    return out;
}

// Conservative mask shrink: an output cell is foreground when any covered
// input pixel is.
inline Mask mask_downsample(const Mask& m, int k) {
    if (k == 1) return m;
    int ow = (m.width + k - 1) / k, oh = (m.height + k - 1) / k;
    Mask out(ow, oh);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) out.set(x / k, y / k, true);
    return out;
}

class StageClock {
public:
    explicit StageClock(RegResult& result) : result_(result) {}
    void lap(const std::string& name) {
        auto now = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(now - mark_).count();
        result_.timings.push_back({name, secs});
        mark_ = now;
    }

private:
    RegResult& result_;
    std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
};

} // namespace pipeline_detail

// End-to-end registration of one image pair:
//   gray+invert -> downsample -> [CLAHE] -> [smooth] -> tissue masks
//   -> largest-gap tissue selection -> pre-alignment -> Gauss-Newton affine
//   -> deformable stage (L-BFGS lattice or RBF local corrections)
// The returned transform maps original-resolution reference coordinates into
// original-resolution moving coordinates. Errors never propagate: failures
// yield an identity transform with flags set.
inline RegResult register_pair(const Image& fixed, const Image& moving, const RegConfig& cfg) {
    using namespace pipeline_detail;
    RegResult result;
    StageClock clock(result);
    try {
        cfg.validate();

        // grayscale + inversion, then the working resolution
        Image fixed_inv = to_gray_inverted(fixed);
        Image moving_inv = to_gray_inverted(moving);
        int kf = downsample_factor_for(fixed_inv, cfg.work_max_dim);
        int km = downsample_factor_for(moving_inv, cfg.work_max_dim);
        fixed_inv = downsample(fixed_inv, kf);
        moving_inv = downsample(moving_inv, km);
        result.work_factor_fixed = kf;
        result.work_factor_moving = km;
        clock.lap("preprocess");

        // tissue masks from the un-inverted working gray, before equalization
        auto make_mask = [&](const Image& inv, int lo, int hi) {
            Image gray = invert_gray(inv);
            if (cfg.mask_mode == MaskMode::kmeans) {
                try {
                    return kmeans_mask(gray);
                } catch (const error& e) {
                    if (e.kind() != errc::degenerate) throw;
                    // degenerate intensity histogram: threshold fallback
                }
            }
            return threshold_mask(gray, lo, hi);
        };
        Mask fixed_mask = largest_gap_select(
            make_mask(fixed_inv, cfg.mask_fixed_lo, cfg.mask_fixed_hi), cfg.min_keep_components);
        Mask moving_mask = largest_gap_select(
            make_mask(moving_inv, cfg.mask_moving_lo, cfg.mask_moving_hi), cfg.min_keep_components);
        clock.lap("mask");

        // optional contrast/denoise steps feed only the registration images
        if (cfg.use_clahe) {
            fixed_inv = equalize_clahe(fixed_inv, cfg.clahe_tiles, cfg.clahe_clip);
            moving_inv = equalize_clahe(moving_inv, cfg.clahe_tiles, cfg.clahe_clip);
        }
        if (cfg.smooth_sigma_um > 0.0) {
            fixed_inv = gaussian_smooth(fixed_inv, cfg.smooth_sigma_um);
            moving_inv = gaussian_smooth(moving_inv, cfg.smooth_sigma_um);
        }

        // pre-alignment at its own coarse resolution
        int kp_f = downsample_factor_for(fixed_inv, cfg.prealign_max_dim);
        int kp_m = downsample_factor_for(moving_inv, cfg.prealign_max_dim);
        Image fixed_pre = downsample(fixed_inv, kp_f);
        Image moving_pre = downsample(moving_inv, kp_m);
        Mask fixed_pre_mask = mask_downsample(fixed_mask, kp_f);
        Mask moving_pre_mask = mask_downsample(moving_mask, kp_m);

        AffineTransform prealign;
        if (cfg.prealign_mode == PrealignMode::ara) {
            AraResult ara = ara_prealign(fixed_pre, moving_pre, fixed_pre_mask, moving_pre_mask, cfg);
            result.prealign_scores = ara.angle_scores;
            prealign = ara.best.to_affine();
        } else {
            TemplateMatchResult tm =
                template_match_rotational(fixed_pre, moving_pre, moving_pre_mask, cfg);
            result.prealign_scores = {tm.score};
            prealign = tm.ref_to_moving;
        }
        CompositeTransform pre_work = rescale_composite(
            CompositeTransform::from_affine(prealign), FrameScale{double(kp_f)}, FrameScale{double(kp_m)});
        clock.lap("prealign");

        // affine refinement on the unmasked working images
        AffineStageResult aff = affine_register_gn(fixed_inv, moving_inv, pre_work.affine, cfg);
        result.affine_trace = aff.level_traces.back();
        result.flags.converged = aff.converged;
        result.flags.max_iter_hit = !aff.converged;
        CompositeTransform work_transform = CompositeTransform::from_affine(aff.transform);
        result.final_objective = aff.final_value;
        clock.lap("affine");

        // deformable stage
        if (cfg.deform_mode == DeformMode::lbfgs) {
            DeformableStageResult def =
                deformable_register_lbfgs(fixed_inv, moving_inv, aff.transform, cfg);
            result.deform_trace = def.level_traces.back();
            result.flags.low_overlap = def.low_overlap;
            result.flags.converged = def.converged;
            result.flags.max_iter_hit = !def.converged;
            result.final_objective = def.final_value;
            work_transform = def.transform;
        } else if (cfg.deform_mode == DeformMode::rbf) {
            RbfStageResult rbf =
                rbf_deformable(fixed_inv, moving_inv, work_transform.affine, fixed_mask, cfg);
            work_transform = rbf.transform;
        }
        result.objective_trace =
            result.deform_trace.empty() ? result.affine_trace : result.deform_trace;
        clock.lap("deform");

        result.transform =
            rescale_composite(work_transform, FrameScale{double(kf)}, FrameScale{double(km)});
    } catch (const error& e) {
        result.transform = CompositeTransform::identity();
        result.flags.failed = true;
        result.flags.failure_reason = e.what();
        if (e.kind() == errc::empty_mask || e.kind() == errc::degenerate)
            result.flags.empty_mask = true;
        if (e.kind() == errc::overlap) result.flags.low_overlap = true;
    }
    return result;
}

} // namespace slidereg
