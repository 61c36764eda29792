#include "vad/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vad/io_util.hpp"

namespace vad {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Coordinates are quantized to 1/1024 px. Keeps files compact and makes
// root-centering exactly translation-invariant for integer offsets.
double q1024(double v) { return std::round(v * 1024.0) / 1024.0; }

double hash01(std::uint64_t key, std::uint64_t salt) {
    return static_cast<double>(mix_seed(key ^ mix_seed(salt)) >> 11) * 0x1.0p-53;
}

// COCO-style template, pelvis root first, offsets in body-scale units.
const std::vector<Keypoint>& body_template17() {
    static const std::vector<Keypoint> t = {
        {0.00, 0.00},    // pelvis root
        {0.00, -0.95},   // nose
        {-0.06, -1.00},  // eyes
        {0.06, -1.00},
        {-0.12, -0.97},  // ears
        {0.12, -0.97},
        {-0.22, -0.72},  // shoulders
        {0.22, -0.72},
        {-0.30, -0.45},  // elbows
        {0.30, -0.45},
        {-0.34, -0.18},  // wrists
        {0.34, -0.18},
        {-0.13, 0.00},   // hips
        {0.13, 0.00},
        {-0.15, 0.42},   // knees
        {0.15, 0.42},
        {-0.16, 0.85},   // ankle
    };
    return t;
}

std::vector<Keypoint> body_template(int k) {
    if (k == 17) return body_template17();
    std::vector<Keypoint> t;
    t.push_back({0.0, 0.0});
    for (int i = 1; i < k; ++i) {
        const double a = kTwoPi * static_cast<double>(i - 1) / std::max(1, k - 1);
        const double r = 0.4 + 0.5 * ((i % 3) / 2.0);
        t.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return t;
}

double joint_mobility(int k) {
    // root fixed to its own path; extremities swing the most
    static const double m17[17] = {0.0, 0.15, 0.12, 0.12, 0.12, 0.12, 0.25, 0.25,
                                   0.6,  0.6,  1.0,  1.0,  0.2,  0.2,  0.6, 0.6, 1.0};
    if (k < 17) return m17[k];
    return 0.3 + 0.7 * static_cast<double>((static_cast<unsigned>(k) * 2654435761u) % 97) / 97.0;
}

struct ActorMotion {
    double x, y, heading, speed, body_scale, limb_amp, limb_freq, limb_phase;
    std::vector<double> joint_axis;  // per-keypoint swing direction
};

// Box size tracks the instantaneous keypoint extent (so limb motion shows up
// in the area-stability filter) but the box is centered on the root joint,
// keeping the center path as smooth as the actual body trajectory.
DetectionBox bbox_for(const TrackFrame& tf, int object_id, double margin, double img_w,
                      double img_h) {
    double lo_x = tf.kps[0].x, hi_x = tf.kps[0].x;
    double lo_y = tf.kps[0].y, hi_y = tf.kps[0].y;
    for (const auto& kp : tf.kps) {
        lo_x = std::min(lo_x, kp.x);
        hi_x = std::max(hi_x, kp.x);
        lo_y = std::min(lo_y, kp.y);
        hi_y = std::max(hi_y, kp.y);
    }
    DetectionBox box;
    box.frame = tf.frame;
    box.object_id = object_id;
    box.cls = ObjectClass::Human;
    const double w = (hi_x - lo_x) + 2.0 * margin;
    const double h = (hi_y - lo_y) + 2.0 * margin;
    const double cx = tf.kps[0].x;
    // anchor the vertical center on the root joint; extremity swings then
    // move the box edges but barely its center
    const double cy = tf.kps[0].y - 0.04 * h;
    box.w = q1024(std::min(w, img_w));
    box.h = q1024(std::min(h, img_h));
    box.x = q1024(std::clamp(cx - w / 2.0, 0.0, img_w - box.w));
    box.y = q1024(std::clamp(cy - h / 2.0, 0.0, img_h - box.h));
    return box;
}

TextureParams make_normal_texture(const SynthConfig& c, Rng& rng) {
    TextureParams t;
    t.base = q1024(c.texture_base_mean + c.texture_base_sd * rng.normal());
    t.cell_strength = c.texture_cell_strength;
    t.freq_u = q1024(rng.uniform(c.texture_freq_min, c.texture_freq_max));
    t.freq_v = q1024(rng.uniform(c.texture_freq_min, c.texture_freq_max));
    t.amp = c.texture_amp;
    t.phase0 = q1024(rng.uniform(0.0, kTwoPi));
    t.phase_rate = q1024(c.texture_phase_rate * rng.uniform(0.9, 1.1));
    t.blob_amp = c.texture_blob_amp;
    t.blob_radius = c.texture_blob_radius;
    t.blob_angle0 = q1024(rng.uniform(0.0, kTwoPi));
    t.blob_rate = q1024(c.texture_blob_rate * rng.uniform(0.9, 1.1));
    t.blur_ref = c.texture_blur_ref;
    t.noise_key = rng.next_u64();
    return t;
}

// the 24 orderings of the four quadrant levels, for per-frame scrambling
const std::array<std::array<int, 4>, 24>& quadrant_perms() {
    static const auto table = [] {
        std::array<std::array<int, 4>, 24> t{};
        std::array<int, 4> p = {0, 1, 2, 3};
        for (std::size_t i = 0; i < 24; ++i) {
            t[i] = p;
            std::next_permutation(p.begin(), p.end());
        }
        return t;
    }();
    return table;
}

void relabel(SyntheticVideo& v, FrameInterval iv) {
    for (long f = iv.begin; f < iv.end; ++f) v.labels[static_cast<std::size_t>(f)] = 1;
}

void check_interval(const SyntheticVideo& v, FrameInterval iv) {
    if (iv.begin < 0 || iv.end > v.frame_count || iv.begin > iv.end)
        throw RangeError("anomaly interval [" + std::to_string(iv.begin) + "," +
                         std::to_string(iv.end) + ") outside video of " +
                         std::to_string(v.frame_count) + " frames");
}

void rebuild_human_boxes(SyntheticVideo& v, int person_id, FrameInterval iv,
                         const SynthConfig& c) {
    const SkeletonTrack* track = nullptr;
    for (const auto& t : v.tracks)
        if (t.person_id == person_id) track = &t;
    if (!track) throw DataError("no track for person " + std::to_string(person_id));
    for (auto& box : v.detections) {
        if (box.object_id != person_id || !iv.contains(box.frame)) continue;
        for (const auto& tf : track->frames)
            if (tf.frame == box.frame) {
                box = bbox_for(tf, person_id, c.box_margin, v.image_w, v.image_h);
                break;
            }
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (pose_fraction < 0.0 || pose_fraction > 1.0)
        throw ConfigError("pose_fraction must lie in [0,1]");
    if (frames_per_video < 2 || image_size <= 0)
        throw ConfigError("frames_per_video/image_size invalid");
    if (actors_per_video < 0) throw ConfigError("actors_per_video must be >= 0");
    if (keypoints < 1) throw ConfigError("keypoints must be >= 1");
    if (weight_velocity_spike < 0 || weight_joint_scramble < 0 || weight_freeze < 0)
        throw ConfigError("pose-anomaly weights must be non-negative");
    if (weight_velocity_spike + weight_joint_scramble + weight_freeze <= 0.0)
        throw ConfigError("at least one pose-anomaly weight must be positive");
    if (intervals_per_test_video < 0)
        throw ConfigError("intervals_per_test_video must be >= 0");
    if (interval_len <= 0 || interval_len >= frames_per_video)
        throw ConfigError("interval_len must be in (0, frames_per_video)");
    if (patch_lattice < 1) throw ConfigError("patch_lattice must be >= 1");
}

void SyntheticVideo::rebuild_paths() {
    path_len.clear();
    std::map<int, std::vector<const DetectionBox*>> per_object;
    for (const auto& d : detections) per_object[d.object_id].push_back(&d);
    for (auto& [id, boxes] : per_object) {
        std::sort(boxes.begin(), boxes.end(),
                  [](const DetectionBox* a, const DetectionBox* b) { return a->frame < b->frame; });
        double cum = 0.0;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (i > 0)
                cum += std::hypot(boxes[i]->cx() - boxes[i - 1]->cx(),
                                  boxes[i]->cy() - boxes[i - 1]->cy());
            path_len[id][boxes[i]->frame] = cum;
        }
    }
}

SyntheticVideo generate_normal_video(const SynthConfig& c, const std::string& video_id,
                                     std::uint64_t seed) {
    c.validate();
    SyntheticVideo v;
    v.video_id = video_id;
    v.frame_count = c.frames_per_video;
    v.image_w = v.image_h = c.image_size;
    v.seed = seed;
    v.patch_lattice = c.patch_lattice;
    v.labels.assign(static_cast<std::size_t>(v.frame_count), 0);

    Rng rng(seed);
    const auto tmpl = body_template(c.keypoints);
    const double lo = c.border_margin, hi_x = c.image_size - c.border_margin,
                 hi_y = c.image_size - c.border_margin;

    for (int a = 0; a < c.actors_per_video; ++a) {
        ActorMotion m;
        m.x = rng.uniform(lo, hi_x);
        m.y = rng.uniform(lo, hi_y);
        m.heading = rng.uniform(0.0, kTwoPi);
        m.speed = rng.uniform(c.walk_speed_min, c.walk_speed_max);
        m.body_scale = rng.uniform(c.body_scale_min, c.body_scale_max);
        m.limb_amp = rng.uniform(c.limb_amp_min, c.limb_amp_max) * m.body_scale;
        m.limb_freq = rng.uniform(c.limb_freq_min, c.limb_freq_max);
        m.limb_phase = rng.uniform(0.0, kTwoPi);
        for (int k = 0; k < c.keypoints; ++k)
            m.joint_axis.push_back(rng.uniform(0.0, kTwoPi));

        SkeletonTrack track;
        track.person_id = a;
        for (long f = 0; f < v.frame_count; ++f) {
            TrackFrame tf;
            tf.frame = f;
            for (int k = 0; k < c.keypoints; ++k) {
                const double osc = m.limb_amp * joint_mobility(k) *
                                   std::sin(m.limb_freq * static_cast<double>(f) + m.limb_phase +
                                            2.399963 * static_cast<double>(k));
                const double ox = osc * std::cos(m.joint_axis[static_cast<std::size_t>(k)]);
                const double oy = osc * std::sin(m.joint_axis[static_cast<std::size_t>(k)]);
                tf.kps.push_back({q1024(m.x + m.body_scale * tmpl[static_cast<std::size_t>(k)].x + ox),
                                  q1024(m.y + m.body_scale * tmpl[static_cast<std::size_t>(k)].y + oy)});
                tf.conf.push_back(q1024(std::clamp(0.9 + 0.05 * rng.normal(), 0.0, 1.0)));
            }
            v.detections.push_back(bbox_for(tf, a, c.box_margin, v.image_w, v.image_h));
            track.frames.push_back(std::move(tf));

            m.heading += 0.08 * rng.normal();
            double nx = m.x + m.speed * std::cos(m.heading);
            double ny = m.y + m.speed * std::sin(m.heading);
            if (nx < lo || nx > hi_x) {
                m.heading = std::numbers::pi - m.heading;
                nx = m.x + m.speed * std::cos(m.heading);
            }
            if (ny < lo || ny > hi_y) {
                m.heading = -m.heading;
                ny = m.y + m.speed * std::sin(m.heading);
            }
            m.x = nx;
            m.y = ny;
        }
        v.tracks.push_back(std::move(track));
        v.textures[a] = make_normal_texture(c, rng);
        v.object_class[a] = ObjectClass::Human;
    }

    for (int b = 0; b < c.benign_objects_per_video; ++b) {
        const int id = c.actors_per_video + b;
        double w = rng.uniform(16.0, 28.0), h = rng.uniform(16.0, 28.0);
        double x = rng.uniform(lo, hi_x), y = rng.uniform(lo, hi_y);
        double heading = rng.uniform(0.0, kTwoPi);
        const double speed = rng.uniform(c.walk_speed_min, c.walk_speed_max);
        for (long f = 0; f < v.frame_count; ++f) {
            DetectionBox box;
            box.frame = f;
            box.object_id = id;
            box.cls = ObjectClass::NonHuman;
            box.x = q1024(std::clamp(x - w / 2, 0.0, v.image_w - w));
            box.y = q1024(std::clamp(y - h / 2, 0.0, v.image_h - h));
            box.w = q1024(w);
            box.h = q1024(h);
            v.detections.push_back(box);
            heading += 0.05 * rng.normal();
            double nx = x + speed * std::cos(heading);
            double ny = y + speed * std::sin(heading);
            if (nx < lo || nx > hi_x) {
                heading = std::numbers::pi - heading;
                nx = x + speed * std::cos(heading);
            }
            if (ny < lo || ny > hi_y) {
                heading = -heading;
                ny = y + speed * std::sin(heading);
            }
            x = nx;
            y = ny;
        }
        v.textures[id] = make_normal_texture(c, rng);
        v.object_class[id] = ObjectClass::NonHuman;
    }

    std::sort(v.detections.begin(), v.detections.end(), [](const auto& a, const auto& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.object_id < b.object_id;
    });
    v.rebuild_paths();
    return v;
}

void inject_pose_anomaly(SyntheticVideo& v, FrameInterval iv, PoseAnomalyKind kind,
                         const SynthConfig& c, Rng& rng, int person_id) {
    if (iv.empty() && iv.begin >= 0 && iv.end <= v.frame_count) return;
    check_interval(v, iv);

    SkeletonTrack* track = nullptr;
    if (person_id < 0) {
        for (auto& t : v.tracks) {
            bool used = false;
            for (const auto& info : v.intervals)
                if (info.object_id == t.person_id && info.kind != "appearance") used = true;
            if (!used) {
                track = &t;
                break;
            }
        }
        if (!track && !v.tracks.empty()) track = &v.tracks.front();
    } else {
        for (auto& t : v.tracks)
            if (t.person_id == person_id) track = &t;
    }
    if (!track) throw DataError("no skeleton track available for pose anomaly");

    auto frame_at = [&](long f) -> TrackFrame* {
        for (auto& tf : track->frames)
            if (tf.frame == f) return &tf;
        return nullptr;
    };

    if (kind == PoseAnomalyKind::VelocitySpike) {
        // calibrate against this track's own normal root motion
        double disp = 0.0;
        long n = 0;
        for (std::size_t i = 1; i < track->frames.size(); ++i) {
            const long f0 = track->frames[i - 1].frame, f1 = track->frames[i].frame;
            if (f1 != f0 + 1 || iv.contains(f0) || iv.contains(f1)) continue;
            disp += std::hypot(track->frames[i].kps[0].x - track->frames[i - 1].kps[0].x,
                               track->frames[i].kps[0].y - track->frames[i - 1].kps[0].y);
            ++n;
        }
        const double base_speed = n > 0 ? disp / static_cast<double>(n) : 1.5;
        const double step = c.spike_multiplier * base_speed;
        const double radius = 2.0 * step;
        double dx = 0.0, dy = 0.0;
        for (long f = iv.begin; f < iv.end; ++f) {
            TrackFrame* tf = frame_at(f);
            if (!tf) continue;
            if (f > iv.begin) {
                const double a = rng.uniform(0.0, kTwoPi);
                double cx = dx + step * std::cos(a), cy = dy + step * std::sin(a);
                if (std::hypot(cx, cy) > radius) {
                    cx = dx - step * std::cos(a);
                    cy = dy - step * std::sin(a);
                }
                dx = cx;
                dy = cy;
            }
            for (auto& kp : tf->kps) {
                kp.x = q1024(std::clamp(kp.x + dx, 0.0, v.image_w));
                kp.y = q1024(std::clamp(kp.y + dy, 0.0, v.image_h));
            }
        }
    } else if (kind == PoseAnomalyKind::JointScramble) {
        for (long f = iv.begin; f < iv.end; ++f) {
            TrackFrame* tf = frame_at(f);
            if (!tf) continue;
            const double rx = tf->kps[0].x, ry = tf->kps[0].y;
            for (std::size_t k = 1; k < tf->kps.size(); ++k) {
                const double ox = tf->kps[k].x - rx, oy = tf->kps[k].y - ry;
                const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
                const double sc = rng.uniform(0.6, 1.4);
                tf->kps[k].x = q1024(std::clamp(
                    rx + sc * (ox * std::cos(th) - oy * std::sin(th)), 0.0, v.image_w));
                tf->kps[k].y = q1024(std::clamp(
                    ry + sc * (ox * std::sin(th) + oy * std::cos(th)), 0.0, v.image_h));
            }
        }
    } else {  // Freeze
        TrackFrame* anchor = frame_at(iv.begin);
        if (anchor) {
            const std::vector<Keypoint> frozen = anchor->kps;
            for (long f = iv.begin; f < iv.end; ++f) {
                TrackFrame* tf = frame_at(f);
                if (tf) tf->kps = frozen;
            }
        }
    }

    rebuild_human_boxes(v, track->person_id, iv, c);
    v.rebuild_paths();
    relabel(v, iv);
    v.intervals.push_back({iv, pose_kind_name(kind), track->person_id});
}

TextureParams make_anomalous_texture(const SynthConfig& c, Rng& rng) {
    TextureParams t = make_normal_texture(c, rng);
    t.base = q1024(t.base + c.anomaly_base_offset);
    t.scrambled_phase = true;
    t.scrambled_cells = true;
    return t;
}

void inject_appearance_anomaly(SyntheticVideo& v, FrameInterval iv, const TextureParams& texture,
                               const SynthConfig& c, Rng& rng) {
    if (iv.empty() && iv.begin >= 0 && iv.end <= v.frame_count) return;
    check_interval(v, iv);

    int id = 0;
    for (const auto& [oid, cls] : v.object_class) id = std::max(id, oid + 1);

    const double w = q1024(rng.uniform(36.0, 56.0));
    const double h = q1024(rng.uniform(24.0, 40.0));
    const double speed = rng.uniform(2.5, 4.0);
    double heading = rng.coin() ? 0.0 : std::numbers::pi;  // drives across the scene
    heading += rng.uniform(-0.3, 0.3);
    double x = heading < std::numbers::pi / 2 ? c.border_margin : v.image_w - c.border_margin - w;
    double y = rng.uniform(c.border_margin, v.image_h - c.border_margin - h);

    for (long f = iv.begin; f < iv.end; ++f) {
        DetectionBox box;
        box.frame = f;
        box.object_id = id;
        box.cls = ObjectClass::NonHuman;
        box.x = q1024(std::clamp(x, 0.0, v.image_w - w));
        box.y = q1024(std::clamp(y, 0.0, v.image_h - h));
        box.w = w;
        box.h = h;
        v.detections.push_back(box);
        x += speed * std::cos(heading);
        y += speed * std::sin(heading);
        if (x < 0.0 || x > v.image_w - w) heading = std::numbers::pi - heading;
        if (y < 0.0 || y > v.image_h - h) heading = -heading;
    }

    std::sort(v.detections.begin(), v.detections.end(), [](const auto& a, const auto& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.object_id < b.object_id;
    });
    v.textures[id] = texture;
    v.object_class[id] = ObjectClass::NonHuman;
    v.rebuild_paths();
    relabel(v, iv);
    v.intervals.push_back({iv, "appearance", id});
}

Tensor render_patch(const SyntheticVideo& v, const DetectionBox& box, std::size_t size,
                    int lattice) {
    if (size == 0) throw ConfigError("patch size must be positive");
    if (box.w <= 0 || box.h <= 0 || box.x < 0 || box.y < 0 || box.x + box.w > v.image_w + 1e-9 ||
        box.y + box.h > v.image_h + 1e-9)
        throw RangeError("detection box outside image bounds");
    const int R = lattice > 0 ? lattice : v.patch_lattice;
    if (static_cast<int>(size) > R)
        throw ConfigError("patch size exceeds texture lattice resolution");

    auto tex_it = v.textures.find(box.object_id);
    if (tex_it == v.textures.end())
        throw DataError("no texture parameters for object " + std::to_string(box.object_id));
    const TextureParams& t = tex_it->second;
    const auto frame_u = static_cast<std::uint64_t>(box.frame);

    double path = 0.0, path_step = 0.0;
    auto oit = v.path_len.find(box.object_id);
    if (oit != v.path_len.end()) {
        auto fit = oit->second.find(box.frame);
        if (fit != oit->second.end()) {
            path = fit->second;
            if (fit != oit->second.begin()) path_step = path - std::prev(fit)->second;
        }
    }
    // Fast motion corrupts the cues toward per-frame scrambled content, the
    // appearance analogue of motion blur. Anomalous textures are fully
    // scrambled regardless of speed.
    const double blur = path_step <= t.blur_ref
                            ? 1.0
                            : (t.blur_ref / path_step) * (t.blur_ref / path_step);
    const double w_clean = t.scrambled_phase || t.scrambled_cells ? 0.0 : blur;
    const double w_noise = 1.0 - w_clean;

    const double frame_d = static_cast<double>(box.frame);
    const double phase_clean = t.phase0 + t.phase_rate * frame_d;
    const double angle_clean = t.blob_angle0 + t.blob_rate * frame_d;
    const double phase_noise = kTwoPi * hash01(t.noise_key, frame_u);
    const double angle_noise = kTwoPi * hash01(t.noise_key ^ 0x517cc1b727220a95ULL, frame_u);

    const double bu_c = 0.5 + t.blob_orbit * std::cos(angle_clean);
    const double bv_c = 0.5 + t.blob_orbit * std::sin(angle_clean);
    const double bu_n = 0.5 + t.blob_orbit * std::cos(angle_noise);
    const double bv_n = 0.5 + t.blob_orbit * std::sin(angle_noise);
    const double blob_r2 = t.blob_radius * t.blob_radius;

    const std::array<int, 4> quad_clean = {0, 1, 2, 3};
    const auto pick = static_cast<std::size_t>(
        hash01(t.noise_key ^ 0x9e3779b97f4a7c15ULL, frame_u) * 24.0);
    const std::array<int, 4> quad_noise = quadrant_perms()[std::min<std::size_t>(pick, 23)];
    auto quad_level = [](const std::array<int, 4>& order, double uu, double vv) {
        const int q = (uu < 0.5 ? 0 : 1) + (vv < 0.5 ? 0 : 2);
        return (static_cast<double>(order[static_cast<std::size_t>(q)]) - 1.5) / 1.5;
    };
    auto bump = [blob_r2](double uu, double vv, double bu, double bv) {
        const double du = uu - bu, dv = vv - bv;
        const double d2 = du * du + dv * dv;
        if (d2 >= blob_r2) return 0.0;
        const double g = 1.0 - d2 / blob_r2;
        return g * g;
    };

    Tensor patch({size, size});
    std::vector<double> counts(size * size, 0.0);
    for (int py = 0; py < R; ++py) {
        const double vv = (static_cast<double>(py) + 0.5) / static_cast<double>(R);
        const std::size_t cy = std::min(size - 1, static_cast<std::size_t>(py) * size /
                                                      static_cast<std::size_t>(R));
        for (int px = 0; px < R; ++px) {
            const double uu = (static_cast<double>(px) + 0.5) / static_cast<double>(R);
            const std::size_t cx = std::min(size - 1, static_cast<std::size_t>(px) * size /
                                                          static_cast<std::size_t>(R));
            double cue = 0.0;
            if (w_clean > 0.0) {
                cue += w_clean *
                       (t.cell_strength * quad_level(quad_clean, uu, vv) +
                        t.amp * std::sin(kTwoPi * (t.freq_u * uu + t.freq_v * vv) + phase_clean) +
                        t.blob_amp * bump(uu, vv, bu_c, bv_c));
            }
            if (w_noise > 0.0) {
                cue += w_noise *
                       (t.cell_strength * quad_level(quad_noise, uu, vv) +
                        t.amp * std::sin(kTwoPi * (t.freq_u * uu + t.freq_v * vv) + phase_noise) +
                        t.blob_amp * bump(uu, vv, bu_n, bv_n));
            }
            patch.at2(cy, cx) += t.base + cue;
            counts[cy * size + cx] += 1.0;
        }
    }
    for (std::size_t i = 0; i < patch.size(); ++i) patch[i] /= counts[i];
    return patch;
}

Dataset generate_dataset(const SynthConfig& c, std::uint64_t seed) {
    c.validate();
    Dataset ds;

    for (int i = 0; i < c.train_videos; ++i) {
        std::ostringstream id;
        id << "train_" << (i < 10 ? "00" : i < 100 ? "0" : "") << i;
        ds.train.push_back(generate_normal_video(c, id.str(), derive_seed(seed, 0x7261 + i)));
    }

    const int total = c.test_videos * c.intervals_per_test_video;
    const int pose_n = static_cast<int>(std::lround(c.pose_fraction * total));
    std::vector<int> is_pose(static_cast<std::size_t>(total), 0);
    for (int i = 0; i < pose_n; ++i) is_pose[static_cast<std::size_t>(i)] = 1;
    Rng alloc_rng(derive_seed(seed, 0xa110c));
    alloc_rng.shuffle(is_pose);

    const double wsum = c.weight_velocity_spike + c.weight_joint_scramble + c.weight_freeze;

    for (int i = 0; i < c.test_videos; ++i) {
        std::ostringstream id;
        id << "test_" << (i < 10 ? "00" : i < 100 ? "0" : "") << i;
        SyntheticVideo v = generate_normal_video(c, id.str(), derive_seed(seed, 0x7e57 + i));
        Rng inj_rng(derive_seed(seed, 0x1239 + i));

        // one slot per interval keeps intervals disjoint
        const long slot =
            c.intervals_per_test_video > 0 ? c.frames_per_video / c.intervals_per_test_video : 0;
        for (int j = 0; j < c.intervals_per_test_video; ++j) {
            const long pad = 8;
            const long lo = static_cast<long>(j) * slot + pad;
            const long hi_start = static_cast<long>(j + 1) * slot - c.interval_len - pad;
            const long start = hi_start > lo
                                   ? lo + static_cast<long>(inj_rng.uniform_int(
                                             static_cast<std::uint64_t>(hi_start - lo)))
                                   : lo;
            FrameInterval iv{start, start + c.interval_len};

            if (is_pose[static_cast<std::size_t>(i * c.intervals_per_test_video + j)]) {
                double u = inj_rng.uniform(0.0, wsum);
                PoseAnomalyKind kind = PoseAnomalyKind::VelocitySpike;
                if (u >= c.weight_velocity_spike &&
                    u < c.weight_velocity_spike + c.weight_joint_scramble)
                    kind = PoseAnomalyKind::JointScramble;
                else if (u >= c.weight_velocity_spike + c.weight_joint_scramble)
                    kind = PoseAnomalyKind::Freeze;
                inject_pose_anomaly(v, iv, kind, c, inj_rng, j % c.actors_per_video);
            } else {
                inject_appearance_anomaly(v, iv, make_anomalous_texture(c, inj_rng), c, inj_rng);
            }
        }
        ds.test.push_back(std::move(v));
    }
    return ds;
}

std::string pose_kind_name(PoseAnomalyKind kind) {
    switch (kind) {
        case PoseAnomalyKind::VelocitySpike: return "velocity-spike";
        case PoseAnomalyKind::JointScramble: return "joint-scramble";
        case PoseAnomalyKind::Freeze: return "freeze";
    }
    throw ConfigError("unknown pose anomaly kind");
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json config_to_json(const SynthConfig& c) {
    return json{{"image_size", c.image_size},
                {"frames_per_video", c.frames_per_video},
                {"train_videos", c.train_videos},
                {"test_videos", c.test_videos},
                {"actors_per_video", c.actors_per_video},
                {"benign_objects_per_video", c.benign_objects_per_video},
                {"keypoints", c.keypoints},
                {"body_scale_min", c.body_scale_min},
                {"body_scale_max", c.body_scale_max},
                {"walk_speed_min", c.walk_speed_min},
                {"walk_speed_max", c.walk_speed_max},
                {"limb_amp_min", c.limb_amp_min},
                {"limb_amp_max", c.limb_amp_max},
                {"limb_freq_min", c.limb_freq_min},
                {"limb_freq_max", c.limb_freq_max},
                {"border_margin", c.border_margin},
                {"box_margin", c.box_margin},
                {"intervals_per_test_video", c.intervals_per_test_video},
                {"interval_len", c.interval_len},
                {"pose_fraction", c.pose_fraction},
                {"weight_velocity_spike", c.weight_velocity_spike},
                {"weight_joint_scramble", c.weight_joint_scramble},
                {"weight_freeze", c.weight_freeze},
                {"spike_multiplier", c.spike_multiplier},
                {"texture_base_mean", c.texture_base_mean},
                {"texture_base_sd", c.texture_base_sd},
                {"texture_amp", c.texture_amp},
                {"texture_cell_strength", c.texture_cell_strength},
                {"texture_freq_min", c.texture_freq_min},
                {"texture_freq_max", c.texture_freq_max},
                {"texture_phase_rate", c.texture_phase_rate},
                {"texture_blob_amp", c.texture_blob_amp},
                {"texture_blob_radius", c.texture_blob_radius},
                {"texture_blob_rate", c.texture_blob_rate},
                {"texture_blur_ref", c.texture_blur_ref},
                {"anomaly_base_offset", c.anomaly_base_offset},
                {"separation_threshold", c.separation_threshold},
                {"patch_lattice", c.patch_lattice}};
}

SynthConfig config_from_json(const json& j) {
    SynthConfig c;
    c.image_size = j.value("image_size", c.image_size);
    c.frames_per_video = j.value("frames_per_video", c.frames_per_video);
    c.train_videos = j.value("train_videos", c.train_videos);
    c.test_videos = j.value("test_videos", c.test_videos);
    c.actors_per_video = j.value("actors_per_video", c.actors_per_video);
    c.benign_objects_per_video = j.value("benign_objects_per_video", c.benign_objects_per_video);
    c.keypoints = j.value("keypoints", c.keypoints);
    c.body_scale_min = j.value("body_scale_min", c.body_scale_min);
    c.body_scale_max = j.value("body_scale_max", c.body_scale_max);
    c.walk_speed_min = j.value("walk_speed_min", c.walk_speed_min);
    c.walk_speed_max = j.value("walk_speed_max", c.walk_speed_max);
    c.limb_amp_min = j.value("limb_amp_min", c.limb_amp_min);
    c.limb_amp_max = j.value("limb_amp_max", c.limb_amp_max);
    c.limb_freq_min = j.value("limb_freq_min", c.limb_freq_min);
    c.limb_freq_max = j.value("limb_freq_max", c.limb_freq_max);
    c.border_margin = j.value("border_margin", c.border_margin);
    c.box_margin = j.value("box_margin", c.box_margin);
    c.intervals_per_test_video = j.value("intervals_per_test_video", c.intervals_per_test_video);
    c.interval_len = j.value("interval_len", c.interval_len);
    c.pose_fraction = j.value("pose_fraction", c.pose_fraction);
    c.weight_velocity_spike = j.value("weight_velocity_spike", c.weight_velocity_spike);
    c.weight_joint_scramble = j.value("weight_joint_scramble", c.weight_joint_scramble);
    c.weight_freeze = j.value("weight_freeze", c.weight_freeze);
    c.spike_multiplier = j.value("spike_multiplier", c.spike_multiplier);
    c.texture_base_mean = j.value("texture_base_mean", c.texture_base_mean);
    c.texture_base_sd = j.value("texture_base_sd", c.texture_base_sd);
    c.texture_amp = j.value("texture_amp", c.texture_amp);
    c.texture_cell_strength = j.value("texture_cell_strength", c.texture_cell_strength);
    c.texture_freq_min = j.value("texture_freq_min", c.texture_freq_min);
    c.texture_freq_max = j.value("texture_freq_max", c.texture_freq_max);
    c.texture_phase_rate = j.value("texture_phase_rate", c.texture_phase_rate);
    c.texture_blob_amp = j.value("texture_blob_amp", c.texture_blob_amp);
    c.texture_blob_radius = j.value("texture_blob_radius", c.texture_blob_radius);
    c.texture_blob_rate = j.value("texture_blob_rate", c.texture_blob_rate);
    c.texture_blur_ref = j.value("texture_blur_ref", c.texture_blur_ref);
    c.anomaly_base_offset = j.value("anomaly_base_offset", c.anomaly_base_offset);
    c.separation_threshold = j.value("separation_threshold", c.separation_threshold);
    c.patch_lattice = j.value("patch_lattice", c.patch_lattice);
    return c;
}

std::string cls_name(ObjectClass c) { return c == ObjectClass::Human ? "human" : "non-human"; }

ObjectClass cls_from(const std::string& s) {
    if (s == "human") return ObjectClass::Human;
    if (s == "non-human") return ObjectClass::NonHuman;
    throw DataError("unknown object class: " + s);
}

void save_video(const SyntheticVideo& v, const std::filesystem::path& dir,
                const SynthConfig& config) {
    std::ostringstream tracks;
    for (const auto& t : v.tracks) {
        for (const auto& tf : t.frames) {
            json kps = json::array(), conf = json::array();
            for (const auto& kp : tf.kps) kps.push_back(json::array({kp.x, kp.y}));
            for (double cv : tf.conf) conf.push_back(cv);
            json row{{"video", v.video_id}, {"person", t.person_id}, {"frame", tf.frame},
                     {"kps", kps},          {"conf", conf}};
            tracks << row.dump() << "\n";
        }
    }
    write_text_file(dir / "tracks.jsonl", tracks.str());

    std::ostringstream dets;
    for (const auto& d : v.detections) {
        json row{{"video", v.video_id},
                 {"object", d.object_id},
                 {"frame", d.frame},
                 {"cls", cls_name(d.cls)},
                 {"box", json::array({d.x, d.y, d.w, d.h})}};
        dets << row.dump() << "\n";
    }
    write_text_file(dir / "detections.jsonl", dets.str());

    std::ostringstream labels;
    labels << "frame,label\n";
    for (std::size_t f = 0; f < v.labels.size(); ++f) labels << f << "," << v.labels[f] << "\n";
    write_text_file(dir / "labels.csv", labels.str());

    json textures = json::object();
    for (const auto& [id, t] : v.textures) {
        textures[std::to_string(id)] =
            json{{"base", t.base},
                 {"cell_strength", t.cell_strength},
                 {"freq_u", t.freq_u},
                 {"freq_v", t.freq_v},
                 {"amp", t.amp},
                 {"phase0", t.phase0},
                 {"phase_rate", t.phase_rate},
                 {"blob_amp", t.blob_amp},
                 {"blob_radius", t.blob_radius},
                 {"blob_orbit", t.blob_orbit},
                 {"blob_angle0", t.blob_angle0},
                 {"blob_rate", t.blob_rate},
                 {"blur_ref", t.blur_ref},
                 {"scrambled_phase", t.scrambled_phase},
                 {"scrambled_cells", t.scrambled_cells},
                 {"noise_key", t.noise_key}};
    }
    json classes = json::object();
    for (const auto& [id, cls] : v.object_class) classes[std::to_string(id)] = cls_name(cls);
    json intervals = json::array();
    for (const auto& info : v.intervals)
        intervals.push_back(json{{"begin", info.interval.begin},
                                 {"end", info.interval.end},
                                 {"kind", info.kind},
                                 {"object", info.object_id}});
    json meta{{"video", v.video_id},
              {"frame_count", v.frame_count},
              {"image_w", v.image_w},
              {"image_h", v.image_h},
              {"seed", v.seed},
              {"patch_lattice", v.patch_lattice},
              {"textures", textures},
              {"object_class", classes},
              {"intervals", intervals},
              {"config", config_to_json(config)}};
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

SyntheticVideo load_video(const std::filesystem::path& dir) {
    SyntheticVideo v;
    const json meta = json::parse(read_text_file(dir / "meta.json"));
    v.video_id = meta.at("video").get<std::string>();
    v.frame_count = meta.at("frame_count").get<long>();
    v.image_w = meta.at("image_w").get<double>();
    v.image_h = meta.at("image_h").get<double>();
    v.seed = meta.at("seed").get<std::uint64_t>();
    v.patch_lattice = meta.value("patch_lattice", 48);
    for (const auto& [key, val] : meta.at("textures").items()) {
        TextureParams t;
        t.base = val.at("base").get<double>();
        t.cell_strength = val.at("cell_strength").get<double>();
        t.freq_u = val.at("freq_u").get<double>();
        t.freq_v = val.at("freq_v").get<double>();
        t.amp = val.at("amp").get<double>();
        t.phase0 = val.at("phase0").get<double>();
        t.phase_rate = val.at("phase_rate").get<double>();
        t.blob_amp = val.at("blob_amp").get<double>();
        t.blob_radius = val.at("blob_radius").get<double>();
        t.blob_orbit = val.at("blob_orbit").get<double>();
        t.blob_angle0 = val.at("blob_angle0").get<double>();
        t.blob_rate = val.at("blob_rate").get<double>();
        t.blur_ref = val.at("blur_ref").get<double>();
        t.scrambled_phase = val.at("scrambled_phase").get<bool>();
        t.scrambled_cells = val.at("scrambled_cells").get<bool>();
        t.noise_key = val.at("noise_key").get<std::uint64_t>();
        v.textures[std::stoi(key)] = t;
    }
    for (const auto& [key, val] : meta.at("object_class").items())
        v.object_class[std::stoi(key)] = cls_from(val.get<std::string>());
    for (const auto& item : meta.at("intervals"))
        v.intervals.push_back({{item.at("begin").get<long>(), item.at("end").get<long>()},
                               item.at("kind").get<std::string>(),
                               item.at("object").get<int>()});

    std::map<int, SkeletonTrack> tracks;
    std::istringstream tin(read_text_file(dir / "tracks.jsonl"));
    std::string line;
    while (std::getline(tin, line)) {
        if (line.empty()) continue;
        const json row = json::parse(line);
        const int person = row.at("person").get<int>();
        TrackFrame tf;
        tf.frame = row.at("frame").get<long>();
        for (const auto& kp : row.at("kps"))
            tf.kps.push_back({kp.at(0).get<double>(), kp.at(1).get<double>()});
        for (const auto& cv : row.at("conf")) tf.conf.push_back(cv.get<double>());
        tracks[person].person_id = person;
        tracks[person].frames.push_back(std::move(tf));
    }
    for (auto& [id, t] : tracks) {
        std::sort(t.frames.begin(), t.frames.end(),
                  [](const TrackFrame& a, const TrackFrame& b) { return a.frame < b.frame; });
        v.tracks.push_back(std::move(t));
    }

    std::istringstream din(read_text_file(dir / "detections.jsonl"));
    while (std::getline(din, line)) {
        if (line.empty()) continue;
        const json row = json::parse(line);
        DetectionBox d;
        d.object_id = row.at("object").get<int>();
        d.frame = row.at("frame").get<long>();
        d.cls = cls_from(row.at("cls").get<std::string>());
        const auto& b = row.at("box");
        d.x = b.at(0).get<double>();
        d.y = b.at(1).get<double>();
        d.w = b.at(2).get<double>();
        d.h = b.at(3).get<double>();
        v.detections.push_back(d);
    }
    std::sort(v.detections.begin(), v.detections.end(), [](const auto& a, const auto& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.object_id < b.object_id;
    });

    const auto labels_csv = read_text_file(dir / "labels.csv");
    std::istringstream lin(labels_csv);
    std::getline(lin, line);  // header
    v.labels.assign(static_cast<std::size_t>(v.frame_count), 0);
    while (std::getline(lin, line)) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 2) throw DataError("labels.csv: bad row: " + line);
        const auto f = static_cast<std::size_t>(std::stoul(fields[0]));
        if (f >= v.labels.size()) throw DataError("labels.csv: frame out of range");
        v.labels[f] = std::stoi(fields[1]);
    }

    v.rebuild_paths();
    return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir, const SynthConfig& config) {
    const std::filesystem::path root(dir);
    for (const auto& v : ds.train) save_video(v, root / "train" / v.video_id, config);
    for (const auto& v : ds.test) save_video(v, root / "test" / v.video_id, config);
}

std::vector<SyntheticVideo> load_split(const std::string& dir, const std::string& split) {
    const std::filesystem::path root = std::filesystem::path(dir) / split;
    if (!std::filesystem::is_directory(root))
        throw DataError("dataset split not found: " + root.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<SyntheticVideo> out;
    for (const auto& d : dirs) out.push_back(load_video(d));
    return out;
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.train = load_split(dir, "train");
    ds.test = load_split(dir, "test");
    return ds;
}

}  // namespace vad
