//! Synthetic dyad sessions with known proximity, written in the detection
//! CSV schema so they can be fed through the normal pipeline.
//!
//! Every random draw comes from a generator keyed by
//! `(seed, condition, team, frame)`, so any team or frame can be regenerated
//! on its own and output does not depend on generation order.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::ingest::{
    write_detection_csv, write_manifest, Condition, Detection, IngestError, ManifestEntry, PERSON,
};

const SECONDS_PER_DAY: u32 = 86_400;
/// Left edge of the first person's box before the per-frame camera shift.
const ORIGIN_X: f64 = 400.0;
const ORIGIN_Y: f64 = 200.0;
/// Largest per-frame camera shift, in whole pixels.
const MAX_CAMERA_SHIFT: u32 = 64;
/// Stream index used for team-level draws (frame count, team proximity).
const TEAM_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("could not read config: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Per-condition simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub teams: u32,
    /// Mean horizontal center distance between the two persons, in box widths.
    pub proximity_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Seconds between captured frames.
    pub frame_interval: u32,
    pub frames_min: u32,
    pub frames_max: u32,
    pub box_width: f64,
    pub box_height: f64,
    /// Half-width of the uniform per-frame distance jitter, in box widths.
    pub proximity_jitter: f64,
    /// Half-width of the uniform per-team offset added to `proximity_mean`.
    pub team_spread: f64,
    /// Half-height of the uniform vertical offset, in box heights. Zero keeps
    /// the pair on one horizontal line.
    pub vertical_jitter: f64,
    /// Probability that a frame loses one of its two persons.
    pub drop_rate: f64,
    /// Seconds after midnight of each session's first frame.
    pub start_time: u32,
    pub treatment: ArmConfig,
    pub control: ArmConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frame_interval: 10,
            frames_min: 25,
            frames_max: 200,
            box_width: 320.0,
            box_height: 640.0,
            proximity_jitter: 0.15,
            team_spread: 0.0,
            vertical_jitter: 0.0,
            drop_rate: 0.0,
            start_time: 9 * 3600,
            treatment: ArmConfig {
                teams: 17,
                proximity_mean: 0.8,
            },
            control: ArmConfig {
                teams: 16,
                proximity_mean: 0.95,
            },
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn arm(&self, condition: Condition) -> &ArmConfig {
        match condition {
            Condition::Treatment => &self.treatment,
            Condition::Control => &self.control,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.frames_min < 2 {
            return fail(format!(
                "frames_min = {} (need at least 2)",
                self.frames_min
            ));
        }
        if self.frames_min > self.frames_max {
            return fail(format!(
                "frames_min ({}) > frames_max ({})",
                self.frames_min, self.frames_max
            ));
        }
        if self.frame_interval == 0 {
            return fail("frame_interval must be positive".into());
        }
        let last = u64::from(self.start_time)
            + u64::from(self.frames_max - 1) * u64::from(self.frame_interval);
        if last >= u64::from(SECONDS_PER_DAY) {
            return fail(
                "sessions would cross midnight; lower start_time, frames_max or frame_interval"
                    .into(),
            );
        }
        if !(self.box_width > 0.0
            && self.box_width.is_finite()
            && self.box_height > 0.0
            && self.box_height.is_finite())
        {
            return fail("box dimensions must be positive".into());
        }
        for (name, v) in [
            ("proximity_jitter", self.proximity_jitter),
            ("team_spread", self.team_spread),
            ("vertical_jitter", self.vertical_jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return fail("drop_rate must be in [0, 1]".into());
        }
        for c in Condition::ALL {
            if !self.arm(c).proximity_mean.is_finite() {
                return fail(format!("{c}.proximity_mean must be finite"));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, condition: Condition, team: u32, frame: u64) -> ChaCha8Rng {
    let tag = match condition {
        Condition::Treatment => 1,
        Condition::Control => 2,
    };
    let mut key = splitmix64(seed);
    for part in [tag, u64::from(team), frame] {
        key = splitmix64(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}

fn symmetric_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// Team-level draws: number of frames and the team's mean proximity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeamPlan {
    pub frames: u32,
    pub proximity: f64,
}

pub fn team_plan(config: &SimConfig, condition: Condition, team_index: u32) -> TeamPlan {
    let mut rng = stream(config.seed, condition, team_index, TEAM_STREAM);
    let frames = rng.random_range(config.frames_min..=config.frames_max);
    let offset = symmetric_unit(&mut rng);
    TeamPlan {
        frames,
        proximity: config.arm(condition).proximity_mean + config.team_spread * offset,
    }
}

pub fn team_id(condition: Condition, team_index: u32) -> String {
    format!("{condition}-{:02}", team_index + 1)
}

pub fn frame_name(seconds_of_day: u32) -> String {
    let (h, m, s) = (
        seconds_of_day / 3600,
        seconds_of_day / 60 % 60,
        seconds_of_day % 60,
    );
    format!("{h:02}-{m:02}-{s:02}.jpg")
}

/// Detections for one simulated team: two full-confidence persons per frame
/// (one when the frame drops a person), filenames spaced `frame_interval`
/// seconds apart.
pub fn simulate_session(
    config: &SimConfig,
    condition: Condition,
    team_index: u32,
) -> Result<Vec<Detection>, SimError> {
    config.validate()?;
    let plan = team_plan(config, condition, team_index);
    let (w, h) = (config.box_width, config.box_height);
    let mut out = Vec::with_capacity(plan.frames as usize * 2);
    for k in 0..plan.frames {
        let mut rng = stream(config.seed, condition, team_index, u64::from(k));
        let distance = plan.proximity + config.proximity_jitter * symmetric_unit(&mut rng);
        let vertical = config.vertical_jitter * symmetric_unit(&mut rng);
        let shift_x = f64::from(rng.random_range(0..=MAX_CAMERA_SHIFT));
        let shift_y = f64::from(rng.random_range(0..=MAX_CAMERA_SHIFT));
        let dropped = config.drop_rate > 0.0 && rng.random_bool(config.drop_rate);
        let drop_first = rng.random_bool(0.5);

        let name = frame_name(config.start_time + k * config.frame_interval);
        let x = ORIGIN_X + shift_x;
        let y = ORIGIN_Y + shift_y;
        let first = BoundingBox::from_origin_size(x, y, w, h).expect("validated size");
        let second = BoundingBox::from_origin_size(x + distance * w, y + vertical * h, w, h)
            .expect("validated size");
        let persons = match (dropped, drop_first) {
            (false, _) => vec![first, second],
            (true, true) => vec![second],
            (true, false) => vec![first],
        };
        for b in persons {
            out.push(Detection::new(name.clone(), PERSON, 1.0, b).expect("valid detection"));
        }
    }
    Ok(out)
}

/// Overlap ratio of two equal boxes offset by `distance` box widths
/// horizontally. Box size does not enter.
pub fn expected_ratio(distance: f64) -> f64 {
    (1.0 - distance.abs()).max(0.0)
}

/// As [`expected_ratio`] with an additional vertical offset in box heights.
pub fn expected_ratio_2d(horizontal: f64, vertical: f64) -> f64 {
    expected_ratio(horizontal) * expected_ratio(vertical)
}

/// Antiderivative of [`expected_ratio`].
fn expected_ratio_integral(d: f64) -> f64 {
    if d <= -1.0 {
        0.0
    } else if d <= 0.0 {
        (d + 1.0).powi(2) / 2.0
    } else if d <= 1.0 {
        1.0 - (1.0 - d).powi(2) / 2.0
    } else {
        1.0
    }
}

/// Mean of [`expected_ratio`] over distances uniform on `[mean - jitter, mean + jitter]`.
pub fn expected_mean_ratio(mean: f64, jitter: f64) -> f64 {
    if jitter == 0.0 {
        return expected_ratio(mean);
    }
    (expected_ratio_integral(mean + jitter) - expected_ratio_integral(mean - jitter))
        / (2.0 * jitter)
}

/// Analytic level of collaboration (%) for one simulated team, valid when
/// there is no vertical jitter.
pub fn expected_team_level(config: &SimConfig, condition: Condition, team_index: u32) -> f64 {
    let plan = team_plan(config, condition, team_index);
    100.0 * expected_mean_ratio(plan.proximity, config.proximity_jitter)
}

/// Writes one detection CSV per team plus `manifest.csv` into `out_dir`.
/// Manifest paths are relative to `out_dir`.
pub fn write_study(config: &SimConfig, out_dir: &Path) -> Result<Vec<ManifestEntry>, SimError> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    for condition in Condition::ALL {
        for team in 0..config.arm(condition).teams {
            let id = team_id(condition, team);
            let file = PathBuf::from(format!("{id}.csv"));
            let detections = simulate_session(config, condition, team)?;
            let writer = BufWriter::new(fs::File::create(out_dir.join(&file))?);
            write_detection_csv(writer, &detections)?;
            entries.push(ManifestEntry {
                team_id: id,
                condition,
                detections_path: file,
            });
        }
    }
    let manifest = BufWriter::new(fs::File::create(out_dir.join("manifest.csv"))?);
    write_manifest(manifest, &entries)?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::overlap_ratio;

    fn fixed(distance: f64) -> SimConfig {
        SimConfig {
            proximity_jitter: 0.0,
            treatment: ArmConfig {
                teams: 1,
                proximity_mean: distance,
            },
            control: ArmConfig {
                teams: 1,
                proximity_mean: distance,
            },
            ..SimConfig::default()
        }
    }

    fn frame_ratios(dets: &[Detection]) -> Vec<f64> {
        dets.chunks(2)
            .map(|p| overlap_ratio(p[0].bbox(), p[1].bbox()))
            .collect()
    }

    #[test]
    fn expected_ratio_examples() {
        assert_eq!(expected_ratio(0.0), 1.0);
        assert_eq!(expected_ratio(1.0), 0.0);
        assert_eq!(expected_ratio(0.25), 0.75);
        assert_eq!(expected_ratio(3.0), 0.0);
    }

    #[test]
    fn expected_ratio_matches_grid_count() {
        // 40x40 boxes offset by 10 cells: count shared unit cells.
        let w = 40i32;
        let offset = 10i32;
        let shared = (0..w)
            .flat_map(|x| (0..w).map(move |y| (x, y)))
            .filter(|&(x, _)| x >= offset)
            .count();
        assert_eq!(shared as f64 / (w * w) as f64, expected_ratio(0.25));
    }

    #[test]
    fn expected_mean_ratio_matches_midpoint_rule() {
        for &(m, j) in &[
            (0.8, 0.15),
            (0.95, 0.3),
            (0.0, 0.5),
            (2.0, 0.1),
            (-0.3, 0.9),
        ] {
            let n = 200_000;
            let avg = (0..n)
                .map(|i| expected_ratio(m - j + 2.0 * j * (i as f64 + 0.5) / n as f64))
                .sum::<f64>()
                / n as f64;
            assert!(
                (avg - expected_mean_ratio(m, j)).abs() < 1e-8,
                "m={m} j={j}"
            );
        }
    }

    #[test]
    fn fixed_distance_examples() {
        let all_ones =
            frame_ratios(&simulate_session(&fixed(0.0), Condition::Treatment, 0).unwrap());
        assert!(all_ones.iter().all(|&r| r == 1.0));
        let zeros = frame_ratios(&simulate_session(&fixed(2.0), Condition::Control, 0).unwrap());
        assert!(zeros.iter().all(|&r| r == 0.0));
        let halves = frame_ratios(&simulate_session(&fixed(0.5), Condition::Control, 0).unwrap());
        assert!(halves.iter().all(|&r| r == 0.5));
    }

    #[test]
    fn frame_counts_and_names() {
        let config = SimConfig {
            frames_min: 3,
            frames_max: 9,
            ..SimConfig::default()
        };
        for team in 0..50 {
            let plan = team_plan(&config, Condition::Control, team);
            assert!((3..=9).contains(&plan.frames));
            let dets = simulate_session(&config, Condition::Control, team).unwrap();
            assert_eq!(dets.len(), 2 * plan.frames as usize);
        }
        assert_eq!(frame_name(9 * 3600 + 10), "09-00-10.jpg");
    }

    #[test]
    fn drop_rate_removes_one_person() {
        let config = SimConfig {
            drop_rate: 1.0,
            ..SimConfig::default()
        };
        let plan = team_plan(&config, Condition::Treatment, 0);
        let dets = simulate_session(&config, Condition::Treatment, 0).unwrap();
        assert_eq!(dets.len(), plan.frames as usize);
    }

    #[test]
    fn deterministic_per_key() {
        let config = SimConfig::default();
        let a = simulate_session(&config, Condition::Treatment, 3).unwrap();
        let b = simulate_session(&config, Condition::Treatment, 3).unwrap();
        assert_eq!(a, b);
        let other = simulate_session(&config, Condition::Control, 3).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SimConfig {
                frames_min: 30,
                frames_max: 20,
                ..SimConfig::default()
            },
            SimConfig {
                frame_interval: 0,
                ..SimConfig::default()
            },
            SimConfig {
                box_width: 0.0,
                ..SimConfig::default()
            },
            SimConfig {
                drop_rate: 1.5,
                ..SimConfig::default()
            },
            SimConfig {
                start_time: 86_000,
                ..SimConfig::default()
            },
        ];
        for c in bad {
            assert!(
                matches!(c.validate(), Err(SimError::InvalidConfig(_))),
                "{c:?}"
            );
        }
    }

    #[test]
    fn toml_round_trip() {
        let text = "seed = 7\nframes_min = 30\n[treatment]\nteams = 2\nproximity_mean = 0.5\n[control]\nteams = 3\nproximity_mean = 1.0\n";
        let c = SimConfig::from_toml(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.frames_min, 30);
        assert_eq!(c.frame_interval, 10);
        assert_eq!(c.control.teams, 3);
        assert_eq!(SimConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(matches!(
            SimConfig::from_toml("bogus = 1"),
            Err(SimError::Parse(_))
        ));
    }
}
