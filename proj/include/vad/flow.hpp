#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vad/optim.hpp"
#include "vad/rng.hpp"
#include "vad/score_series.hpp"
#include "vad/synth.hpp"
#include "vad/tensor.hpp"

namespace vad {

// Fixed-length segment of one track, root-centered at the first frame and
// scale-normalized by mean skeleton extent. Flattened layout: [frame][kp][xy].
struct PoseWindow {
    std::string video_id;
    int person_id = 0;
    long start_frame = 0;
    std::size_t length = 0;
    Tensor data;  // shape {L, K, 2}
};

struct FlowHyper {
    std::size_t window_len = 24;  // L
    std::size_t keypoints = 17;   // K
    std::size_t layers = 8;
    std::size_t hidden = 64;
    double smax = 4.0;

    std::size_t dims() const { return window_len * keypoints * 2; }
};

enum class FlowInit { Identity, Random };

// Affine-coupling flow over flattened pose windows. Alternating checkerboard
// masks; per-coupling scale/shift two-layer tanh nets; log-scale squashed to
// |s| <= smax, so the map stays invertible with a finite log-determinant.
struct FlowModel {
    FlowHyper hyper;
    ParamSet params;
    // per layer: pass-through coordinates (input to the nets) / transformed ones
    std::vector<std::vector<std::size_t>> idx_keep;
    std::vector<std::vector<std::size_t>> idx_move;

    static FlowModel create(const FlowHyper& hyper, Rng& rng, FlowInit init = FlowInit::Identity);
};

std::vector<PoseWindow> segment_tracks(const std::vector<SkeletonTrack>& tracks,
                                       const std::string& video_id, std::size_t window_len,
                                       std::size_t stride);

// z = f(x) and the accumulated log|det J| per row. x is {D} or {B, D}.
std::pair<Tensor, Tensor> flow_forward(const FlowModel& model, const Tensor& x);
Tensor flow_inverse(const FlowModel& model, const Tensor& z);

// gaussian base log-density + log_det, one value per row
std::vector<double> flow_log_likelihood(const FlowModel& model, const Tensor& x);

struct FlowTrainHyper {
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 1;
};

struct FlowTrainResult {
    std::vector<double> epoch_nll;  // mean training NLL per epoch
    double initial_nll = 0.0;       // full-set NLL before training
    double final_nll = 0.0;         // full-set NLL after training
};

FlowTrainResult train_flow(FlowModel& model, const std::vector<PoseWindow>& windows,
                           const FlowTrainHyper& hyper);

// Mean NLL of the window set under the model (no training).
double flow_mean_nll(const FlowModel& model, const std::vector<PoseWindow>& windows);

// Loss used by training, exposed for gradient checking: fills params.grads.
double flow_nll_loss_and_grad(const FlowModel& model, ParamSet& params, const Tensor& batch);

// Per frame: raw = min window log-likelihood among covering windows,
// canonical score = -raw. Frames covered by no window stay MISSING.
FrameScoreSeries score_frames_flow(const FlowModel& model, const std::vector<PoseWindow>& windows,
                                   const std::string& video_id, std::size_t frame_count);

void save_flow(const FlowModel& model, const std::string& path);
FlowModel load_flow(const std::string& path);

}  // namespace vad
