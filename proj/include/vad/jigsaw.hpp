#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vad/optim.hpp"
#include "vad/rng.hpp"
#include "vad/score_series.hpp"
#include "vad/synth.hpp"
#include "vad/tensor.hpp"

namespace vad {

// Object-centric stack of appearance patches over T consecutive frames.
// Patches are S x S, spatially divisible into a G x G grid of cells.
struct SpaceTimeCube {
    std::string video_id;
    int object_id = 0;
    long center_frame = 0;
    ObjectClass cls = ObjectClass::Human;
    Tensor patches;  // shape {T, S, S}
};

enum class PermAxis { Temporal, Spatial };

// A sampled shuffle: out[i] = in[perm[i]] on the chosen axis. Temporal tasks
// act on a contiguous sub-run of n patches starting at `offset`; spatial
// tasks act on all G*G cells. class_index is the lexicographic rank.
struct PermutationTask {
    PermAxis axis = PermAxis::Temporal;
    std::vector<std::size_t> perm;
    std::size_t offset = 0;
    std::size_t class_index = 0;
};

std::size_t factorial(std::size_t n);
std::size_t perm_rank(const std::vector<std::size_t>& perm);
std::vector<std::size_t> perm_unrank(std::size_t rank, std::size_t n);
std::vector<std::size_t> perm_inverse(const std::vector<std::size_t>& perm);
// p_after_q[i] = p[q[i]]; applying q then p equals applying p_after_q
std::vector<std::size_t> perm_compose(const std::vector<std::size_t>& p,
                                      const std::vector<std::size_t>& q);

PermutationTask sample_permutation(PermAxis axis, std::size_t n, Rng& rng);

SpaceTimeCube apply_permutation(const SpaceTimeCube& cube, const PermutationTask& task,
                                std::size_t grid);

struct JigsawHyper {
    std::size_t T = 9;      // temporal extent, odd
    std::size_t S = 24;     // patch size
    std::size_t G = 2;      // spatial grid
    std::size_t T_sub = 4;  // temporal sub-puzzle length
    double filter = 0.8;    // min/max box-area stability threshold
    std::size_t d_cell = 16;
    std::size_t d_patch = 32;
    std::size_t d_trunk = 64;

    std::size_t cell_dim() const { return (S / G) * (S / G); }
    std::size_t temporal_classes() const { return factorial(T_sub); }
    std::size_t spatial_classes() const { return factorial(G * G); }
    void validate() const;
};

// Shared-weight cell/patch embeddings feeding two permutation-classifier
// heads (temporal sub-puzzle, spatial grid).
struct JigsawNet {
    JigsawHyper hyper;
    ParamSet params;

    static JigsawNet create(const JigsawHyper& hyper, Rng& rng);
};

std::vector<SpaceTimeCube> build_cubes(const SyntheticVideo& video, const JigsawHyper& hyper);
std::vector<SpaceTimeCube> build_cubes(const SyntheticVideo& video,
                                       const std::vector<DetectionBox>& detections,
                                       const JigsawHyper& hyper);

// Softmax outputs of both heads for unshuffled-or-preshuffled cubes.
struct JigsawProbs {
    Tensor temporal;  // {B, T_sub!}
    Tensor spatial;   // {B, (G*G)!}
};
JigsawProbs jigsaw_forward(const JigsawNet& net, const std::vector<SpaceTimeCube>& cubes);

// Mean cross-entropy over (cube, task) pairs; fills params.grads.
double jigsaw_loss_and_grad(const JigsawNet& net, ParamSet& params,
                            const std::vector<const SpaceTimeCube*>& cubes,
                            const std::vector<PermutationTask>& tasks);

struct JigsawTrainHyper {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::uint64_t seed = 2;
    double holdout_fraction = 0.1;
    std::size_t eval_every = 5;
    double early_stop_acc = 0.0;  // 0 disables early stopping
};

struct JigsawTrainResult {
    struct Point {
        std::size_t epoch;
        double train_loss;
        double holdout_acc_temporal;
        double holdout_acc_spatial;
    };
    std::vector<Point> curve;
    double final_acc_temporal = 0.0;
    double final_acc_spatial = 0.0;
    std::size_t epochs_run = 0;
};

JigsawTrainResult train_jigsaw(JigsawNet& net, const std::vector<SpaceTimeCube>& cubes,
                               const JigsawTrainHyper& hyper);

// Fraction of fresh random tasks on `axis` classified correctly.
double jigsaw_accuracy(const JigsawNet& net, const std::vector<SpaceTimeCube>& cubes,
                       PermAxis axis, Rng& rng);

enum class JigsawScoreMode { AllObjects, NonHumanOnly };

// Cube normality = mean over heads of the identity-class probability of the
// unshuffled cube. Per frame: raw = min normality over covering cubes,
// canonical score = 1 - raw. Frames with no eligible cube stay MISSING.
FrameScoreSeries score_frames_jigsaw(const JigsawNet& net,
                                     const std::vector<SpaceTimeCube>& cubes,
                                     const std::string& video_id, std::size_t frame_count,
                                     JigsawScoreMode mode);

void save_jigsaw(const JigsawNet& net, const std::string& path);
JigsawNet load_jigsaw(const std::string& path);

}  // namespace vad
