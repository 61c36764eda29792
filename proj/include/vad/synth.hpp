#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vad/rng.hpp"
#include "vad/tensor.hpp"

namespace vad {

struct RangeError : DataError {
    explicit RangeError(const std::string& msg) : DataError(msg) {}
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
};

struct TrackFrame {
    long frame = 0;
    std::vector<Keypoint> kps;
    std::vector<double> conf;  // per keypoint, in [0,1]
};

// One person's tracked 2-D keypoint trajectory. Frame indices strictly
// increasing; keypoint 0 is the pelvis root.
struct SkeletonTrack {
    int person_id = 0;
    std::vector<TrackFrame> frames;
};

enum class ObjectClass { Human, NonHuman };

struct DetectionBox {
    long frame = 0;
    int object_id = 0;
    ObjectClass cls = ObjectClass::Human;
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;

    double area() const { return w * h; }
    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
};

// Procedural texture of one object. Three cues:
//  - a fixed quadrant-level pattern (spatial-layout cue),
//  - a sinusoid whose phase advances with the object's own motion,
//  - a bright blob orbiting the patch at a motion-coupled angle (temporal
//    order cue; angular progression stays unambiguous within a cube).
// Anomalous objects scramble the cues per frame and shift the base level.
struct TextureParams {
    double base = 0.45;
    double cell_strength = 0.12;  // amplitude of the quadrant levels
    double freq_u = 2.0;
    double freq_v = 2.0;
    double amp = 0.10;
    double phase0 = 0.0;
    double phase_rate = 0.6;   // radians of sinusoid phase per frame (object tempo)
    double blob_amp = 0.35;
    double blob_radius = 0.30;
    double blob_orbit = 0.32;
    double blob_angle0 = 0.0;
    double blob_rate = 0.30;   // radians of orbit angle per frame
    double blur_ref = 4.0;     // per-frame path step above which cues blur away
    bool scrambled_phase = false;   // randomize sinusoid phase + blob angle per frame
    bool scrambled_cells = false;   // randomize quadrant-level assignment per frame
    std::uint64_t noise_key = 0;
};

enum class PoseAnomalyKind { VelocitySpike, JointScramble, Freeze };

struct FrameInterval {
    long begin = 0;  // inclusive
    long end = 0;    // exclusive

    long length() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(long f) const { return f >= begin && f < end; }
};

struct AnomalyIntervalInfo {
    FrameInterval interval;
    std::string kind;  // "velocity-spike", "joint-scramble", "freeze", "appearance"
    int object_id = -1;
};

struct SyntheticVideo {
    std::string video_id;
    long frame_count = 0;
    double image_w = 256.0, image_h = 256.0;
    std::vector<SkeletonTrack> tracks;
    std::vector<DetectionBox> detections;
    std::map<int, TextureParams> textures;   // object id -> texture
    std::map<int, ObjectClass> object_class;
    std::vector<int> labels;                 // 0/1 per frame
    std::vector<AnomalyIntervalInfo> intervals;
    std::uint64_t seed = 0;
    int patch_lattice = 48;

    // cumulative box-center path length per object, rebuilt from detections
    std::map<int, std::map<long, double>> path_len;
    void rebuild_paths();
};

struct SynthConfig {
    double image_size = 256.0;
    long frames_per_video = 240;
    int train_videos = 8;
    int test_videos = 10;
    int actors_per_video = 3;
    int benign_objects_per_video = 2;
    int keypoints = 17;

    double body_scale_min = 22.0, body_scale_max = 34.0;
    double walk_speed_min = 1.8, walk_speed_max = 2.6;
    double limb_amp_min = 0.05, limb_amp_max = 0.11;   // fraction of body scale
    double limb_freq_min = 0.35, limb_freq_max = 0.85; // radians per frame
    double border_margin = 40.0;
    double box_margin = 4.0;

    int intervals_per_test_video = 1;
    long interval_len = 40;
    double pose_fraction = 0.5;  // of anomalous intervals; rest are appearance
    double weight_velocity_spike = 1.0;
    double weight_joint_scramble = 1.0;
    double weight_freeze = 0.0;
    double spike_multiplier = 5.0;

    double texture_base_mean = 0.45, texture_base_sd = 0.02;
    double texture_amp = 0.10, texture_cell_strength = 0.12;
    double texture_freq_min = 1.5, texture_freq_max = 3.5;
    double texture_phase_rate = 0.6;
    double texture_blob_amp = 0.35, texture_blob_radius = 0.30;
    double texture_blob_rate = 0.30;
    double texture_blur_ref = 4.0;
    double anomaly_base_offset = 0.25;
    double separation_threshold = 4.5;  // min L2 between normal and anomalous patches
    int patch_lattice = 48;

    void validate() const;
};

struct Dataset {
    std::vector<SyntheticVideo> train;
    std::vector<SyntheticVideo> test;
};

Dataset generate_dataset(const SynthConfig& config, std::uint64_t seed);

// Normal-motion video without any anomaly; building block of generate_dataset.
SyntheticVideo generate_normal_video(const SynthConfig& config, const std::string& video_id,
                                     std::uint64_t seed);

void inject_pose_anomaly(SyntheticVideo& video, FrameInterval interval, PoseAnomalyKind kind,
                         const SynthConfig& config, Rng& rng, int person_id = -1);

void inject_appearance_anomaly(SyntheticVideo& video, FrameInterval interval,
                               const TextureParams& texture, const SynthConfig& config, Rng& rng);

// OOD texture for an injected object, derived from config and rng.
TextureParams make_anomalous_texture(const SynthConfig& config, Rng& rng);

// Deterministic S x S grayscale patch for (object id, frame, texture params).
Tensor render_patch(const SyntheticVideo& video, const DetectionBox& box, std::size_t size,
                    int lattice = 0);

// On-disk dataset: <dir>/{train,test}/<video_id>/{tracks.jsonl,detections.jsonl,labels.csv,meta.json}
void save_dataset(const Dataset& ds, const std::string& dir, const SynthConfig& config);
Dataset load_dataset(const std::string& dir);
std::vector<SyntheticVideo> load_split(const std::string& dir, const std::string& split);

std::string pose_kind_name(PoseAnomalyKind kind);

}  // namespace vad
